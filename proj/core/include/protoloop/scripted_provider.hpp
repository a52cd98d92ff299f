#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoloop/provider.hpp"

namespace protoloop {

struct FixtureExchange {
    GenerationKind kind = GenerationKind::Spec;
    std::string match;       // substring of request_key(); empty matches anything
    std::string response;    // served verbatim
};

/// `{"version": 1, "exchanges": [{"kind", "match", "response"}]}`. A
/// `response` may be an object (served as JSON) or a string (served as-is,
/// which lets fixtures carry non-JSON model output).
struct ScriptedFixture {
    std::vector<FixtureExchange> exchanges;

    static ScriptedFixture from_json(const nlohmann::json& doc);
    static ScriptedFixture load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

/// Replays fixture exchanges strictly in order. A request that does not
/// match the next exchange is a FixtureMismatch; running out is
/// FixtureExhausted. On a schema retry the next exchange is consumed if it
/// matches, otherwise the previously served response is replayed.
class ScriptedProvider final : public Provider {
public:
    explicit ScriptedProvider(ScriptedFixture fixture);

    nlohmann::json checkpoint() const override;
    void restore(const nlohmann::json& state) override;
    std::string describe() const override { return "scripted"; }

    std::size_t cursor() const noexcept { return cursor_; }
    std::size_t remaining() const noexcept { return fixture_.exchanges.size() - cursor_; }

protected:
    std::string fetch_raw(const GenerationRequest& request,
                          std::span<const Attempt> previous) override;

private:
    bool matches(const FixtureExchange& ex, const GenerationRequest& request) const;

    ScriptedFixture fixture_;
    std::size_t cursor_ = 0;
    std::optional<std::size_t> last_served_;
};

}  // namespace protoloop
