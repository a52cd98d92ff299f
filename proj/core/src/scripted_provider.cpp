#include "protoloop/scripted_provider.hpp"

#include "protoloop/error.hpp"
#include "protoloop/fsutil.hpp"

namespace protoloop {

ScriptedFixture ScriptedFixture::from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("version").get<int>() != 1) fail(ErrorCode::BadRequest, "unsupported fixture version");
        ScriptedFixture fixture;
        for (const auto& ex : doc.at("exchanges")) {
            FixtureExchange e;
            auto kind = generation_kind_from_string(ex.at("kind").get<std::string>());
            if (!kind) fail(ErrorCode::BadRequest, "unknown exchange kind " + ex.at("kind").dump());
            e.kind = *kind;
            e.match = ex.value("match", "");
            const auto& response = ex.at("response");
            e.response = response.is_string() ? response.get<std::string>() : response.dump();
            fixture.exchanges.push_back(std::move(e));
        }
        return fixture;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadRequest, std::string("malformed fixture: ") + e.what());
    }
}

ScriptedFixture ScriptedFixture::load(const std::filesystem::path& path) {
    auto doc = nlohmann::json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded()) fail(ErrorCode::BadRequest, "fixture is not JSON: " + path.string());
    return from_json(doc);
}

nlohmann::json ScriptedFixture::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : exchanges) {
        auto parsed = nlohmann::json::parse(e.response, nullptr, false);
        out.push_back({{"kind", to_string(e.kind)},
                             {"match", e.match},
                             {"response", parsed.is_discarded() ? nlohmann::json(e.response) : parsed}});
    }
    return {{"version", 1}, {"exchanges", std::move(out)}};
}

ScriptedProvider::ScriptedProvider(ScriptedFixture fixture) : fixture_(std::move(fixture)) {}

bool ScriptedProvider::matches(const FixtureExchange& ex, const GenerationRequest& request) const {
    return ex.kind == request.kind && request_key(request).find(ex.match) != std::string::npos;
}

std::string ScriptedProvider::fetch_raw(const GenerationRequest& request,
                                        std::span<const Attempt> previous) {
    const bool retry = !previous.empty() && last_served_.has_value();
    if (cursor_ < fixture_.exchanges.size() && matches(fixture_.exchanges[cursor_], request)) {
        last_served_ = cursor_;
        return fixture_.exchanges[cursor_++].response;
    }
    if (retry) return fixture_.exchanges[*last_served_].response;
    if (cursor_ >= fixture_.exchanges.size()) {
        fail(ErrorCode::FixtureExhausted, "no exchange left for a " +
                                              std::string(to_string(request.kind)) + " request");
    }
    const auto& next = fixture_.exchanges[cursor_];
    fail(ErrorCode::FixtureMismatch,
         "exchange " + std::to_string(cursor_ + 1) + " expects a " +
             std::string(to_string(next.kind)) + " request matching '" + next.match + "', got " +
             std::string(to_string(request.kind)) + " '" + request_key(request).substr(0, 80) + "'");
}

nlohmann::json ScriptedProvider::checkpoint() const {
    nlohmann::json state{{"cursor", cursor_}, {"last_served", nullptr}};
    if (last_served_) state["last_served"] = *last_served_;
    return state;
}

void ScriptedProvider::restore(const nlohmann::json& state) {
    if (state.is_null()) return;
    cursor_ = state.at("cursor").get<std::size_t>();
    if (cursor_ > fixture_.exchanges.size()) {
        fail(ErrorCode::FixtureExhausted, "checkpoint cursor beyond the fixture");
    }
    last_served_.reset();
    if (!state.at("last_served").is_null()) last_served_ = state.at("last_served").get<std::size_t>();
}

}  // namespace protoloop
