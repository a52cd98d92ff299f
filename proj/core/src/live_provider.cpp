#include "protoloop/live_provider.hpp"

#include <httplib.h>

#include <cstdlib>
#include <regex>
#include <thread>

#include "protoloop/error.hpp"

namespace protoloop {

struct LiveProvider::Connection {
    explicit Connection(const std::string& origin) : client(origin) {}
    httplib::Client client;
};

namespace {

struct ParsedUrl {
    std::string origin;
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, kUrl)) fail(ErrorCode::TransportError, "bad provider URL '" + url + "'");
    return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

}  // namespace

LiveProviderConfig LiveProviderConfig::from_env() { return from_env(LiveProviderConfig{}); }

LiveProviderConfig LiveProviderConfig::from_env(LiveProviderConfig base) {
    if (const char* v = std::getenv("PROVIDER_URL")) base.url = v;
    if (const char* v = std::getenv("PROVIDER_API_KEY")) base.api_key = v;
    if (const char* v = std::getenv("PROVIDER_MODEL")) base.model = v;
    return base;
}

LiveProvider::LiveProvider(LiveProviderConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) fail(ErrorCode::TransportError, "PROVIDER_URL is not set");
    if (config_.model.empty()) fail(ErrorCode::TransportError, "PROVIDER_MODEL is not set");
    if (config_.transport_attempts == 0) config_.transport_attempts = 1;
    parse_url(config_.url);
}

LiveProvider::~LiveProvider() = default;

void LiveProvider::cancel() {
    cancelled_ = true;
    std::lock_guard lock(mutex_);
    if (connection_) connection_->client.stop();
}

nlohmann::json LiveProvider::build_body(const GenerationRequest& request,
                                        std::span<const Attempt> previous) const {
    nlohmann::json messages = nlohmann::json::array();
    messages.push_back({{"role", "system"}, {"content", system_prompt()}});
    messages.push_back({{"role", "user"}, {"content", render_prompt(request)}});
    for (const auto& a : previous) {
        messages.push_back({{"role", "assistant"}, {"content", a.raw}});
        messages.push_back({{"role", "user"},
                            {"content", "That reply was rejected (" + a.diagnostic +
                                            "). Reply again with one corrected JSON object only."}});
    }
    return {{"model", config_.model},
            {"messages", std::move(messages)},
            {"response_format", {{"type", "json_object"}}}};
}

std::string LiveProvider::fetch_raw(const GenerationRequest& request,
                                    std::span<const Attempt> previous) {
    if (previous.empty()) cancelled_ = false;
    return post(build_body(request, previous));
}

void LiveProvider::sleep_or_cancel(std::chrono::milliseconds delay) {
    const auto until = std::chrono::steady_clock::now() + delay;
    while (std::chrono::steady_clock::now() < until) {
        if (cancelled_) fail(ErrorCode::Cancelled, "generation cancelled");
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
}

std::string LiveProvider::post(const nlohmann::json& body) {
    const auto url = parse_url(config_.url);
    auto delay = config_.initial_backoff;
    std::string last_error;
    for (std::size_t attempt = 1; attempt <= config_.transport_attempts; ++attempt) {
        if (cancelled_) fail(ErrorCode::Cancelled, "generation cancelled");
        auto conn = std::make_shared<Connection>(url.origin);
        conn->client.set_connection_timeout(std::chrono::seconds(10));
        conn->client.set_read_timeout(config_.timeout);
        if (!config_.api_key.empty()) conn->client.set_bearer_token_auth(config_.api_key);
        {
            std::lock_guard lock(mutex_);
            connection_ = conn;
        }
        auto res = conn->client.Post(url.path, body.dump(), "application/json");
        {
            std::lock_guard lock(mutex_);
            connection_.reset();
        }
        if (cancelled_) fail(ErrorCode::Cancelled, "generation cancelled");

        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
        } else if (res->status == 401 || res->status == 403) {
            fail(ErrorCode::TransportError, "authentication rejected (HTTP " +
                                                std::to_string(res->status) + ")");
        } else if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
            fail(ErrorCode::TransportError, "HTTP " + std::to_string(res->status) + ": " +
                                                res->body.substr(0, 200));
        } else {
            auto doc = nlohmann::json::parse(res->body, nullptr, false);
            if (doc.is_discarded()) fail(ErrorCode::TransportError, "response body is not JSON");
            try {
                return doc.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception&) {
                fail(ErrorCode::TransportError, "response has no choices[0].message.content");
            }
        }
        if (attempt < config_.transport_attempts) {
            sleep_or_cancel(delay);
            delay *= 2;
        }
    }
    fail(ErrorCode::TransportError, last_error + " after " +
                                        std::to_string(config_.transport_attempts) + " attempts");
}

}  // namespace protoloop
