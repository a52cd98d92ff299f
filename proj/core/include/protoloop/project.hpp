#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoloop/orchestrator.hpp"
#include "protoloop/provider.hpp"

namespace protoloop {

/// Contents of config.json. The API key is never written to disk; the
/// PROVIDER_* environment variables override the stored live settings.
struct ProjectConfig {
    std::string provider = "live";  // "live" or "scripted"
    std::filesystem::path fixture;  // absolute; scripted only
    std::string live_url;
    std::string live_model;
    std::string digest_algorithm = std::string(kDigestAlgorithm);

    /// Parses "live" or "scripted:<path>"; relative paths resolve against
    /// the current directory.
    static ProjectConfig from_provider_flag(const std::string& flag);

    nlohmann::json to_json() const;
    static ProjectConfig from_json(const nlohmann::json& doc);
};

std::shared_ptr<Provider> make_provider(const ProjectConfig& config);

/// On-disk project:
///   workspace/      live prototype files (derived cache)
///   snapshots/      manifests and blobs (written before the event)
///   session.jsonl   append-only event log, the source of truth
///   plan.json, spec.json, config.json
///
/// Every mutation writes new snapshot files, then appends and fsyncs the
/// event, then refreshes the caches. Opening a project rebuilds the session
/// from the log, drops a torn trailing line, and rewrites stale caches.
class Project {
public:
    ~Project();
    Project(const Project&) = delete;
    Project& operator=(const Project&) = delete;

    /// Creates an empty project. ProjectExists if `root` already holds one.
    static std::unique_ptr<Project> create(const std::filesystem::path& root, ProjectConfig config);

    /// Opens and rebuilds an existing project. `provider_override` replaces
    /// the stored provider for this process only.
    static std::unique_ptr<Project> open(const std::filesystem::path& root,
                                         std::optional<ProjectConfig> provider_override = {});

    static bool exists(const std::filesystem::path& root);

    const std::filesystem::path& root() const noexcept { return root_; }
    const ProjectConfig& config() const noexcept { return config_; }

    /// Serialized mutation entry point; returns the operation result.
    nlohmann::json execute(const std::string& verb, const nlohmann::json& payload);

    /// Asks the in-flight generation, if any, to stop.
    void cancel();

    /// Last published session. Safe to call from any thread.
    std::shared_ptr<const Session> current() const;

    /// Blocks until more than `since` events exist or `timeout` passes;
    /// returns the event count.
    std::size_t wait_for_events(std::size_t since, std::chrono::milliseconds timeout) const;

    /// Reads session.jsonl as stored.
    static std::vector<SessionEvent> read_log(const std::filesystem::path& root);

private:
    Project(std::filesystem::path root, ProjectConfig config, int lock_fd);

    void persist(const Session& before, const Session& next, const SessionEvent& event);
    void write_caches(const Session& session) const;
    void publish();
    void recover();

    std::filesystem::path root_;
    ProjectConfig config_;
    int lock_fd_ = -1;
    std::unique_ptr<Engine> engine_;

    std::mutex write_mutex_;
    mutable std::mutex publish_mutex_;
    mutable std::condition_variable changed_;
    std::shared_ptr<const Session> published_;
};

}  // namespace protoloop
