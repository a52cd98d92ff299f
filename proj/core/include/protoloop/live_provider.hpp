#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>

#include "protoloop/provider.hpp"

namespace protoloop {

struct LiveProviderConfig {
    std::string url;      // full chat-completions endpoint, e.g. https://host/v1/chat/completions
    std::string api_key;
    std::string model;
    std::size_t transport_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{120};

    /// PROVIDER_URL, PROVIDER_API_KEY and PROVIDER_MODEL override `base`.
    static LiveProviderConfig from_env(LiveProviderConfig base);
    static LiveProviderConfig from_env();
};

/// Generic chat-completions client. Asks for a JSON object, re-prompts with
/// the validation diagnostic on schema failures, and retries transport
/// failures (connection errors, 429, 5xx) with exponential backoff.
class LiveProvider final : public Provider {
public:
    explicit LiveProvider(LiveProviderConfig config);
    ~LiveProvider() override;

    void cancel() override;
    std::string describe() const override { return "live:" + config_.model; }

    const LiveProviderConfig& config() const noexcept { return config_; }

    /// Request body for one attempt; exposed for tests.
    nlohmann::json build_body(const GenerationRequest& request,
                              std::span<const Attempt> previous) const;

protected:
    std::string fetch_raw(const GenerationRequest& request,
                          std::span<const Attempt> previous) override;

private:
    struct Connection;

    std::string post(const nlohmann::json& body);
    void sleep_or_cancel(std::chrono::milliseconds delay);

    LiveProviderConfig config_;
    std::atomic<bool> cancelled_{false};
    std::mutex mutex_;
    std::shared_ptr<Connection> connection_;
};

}  // namespace protoloop
