#include "protoloop/project.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <regex>

#include "protoloop/error.hpp"
#include "protoloop/fsutil.hpp"
#include "protoloop/live_provider.hpp"
#include "protoloop/scripted_provider.hpp"

namespace fs = std::filesystem;

namespace protoloop {
namespace {

constexpr const char* kLogFile = "session.jsonl";
constexpr const char* kConfigFile = "config.json";

/// Stands in for a live provider whose endpoint is not configured, so that
/// read-only commands work without PROVIDER_* in the environment.
class UnconfiguredProvider final : public Provider {
public:
    explicit UnconfiguredProvider(std::string why) : why_(std::move(why)) {}
    std::string describe() const override { return "live (unconfigured)"; }

protected:
    std::string fetch_raw(const GenerationRequest&, std::span<const Attempt>) override {
        fail(ErrorCode::TransportError, why_);
    }

private:
    std::string why_;
};

int acquire_lock(const fs::path& root) {
    const auto path = root / ".lock";
    int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) fail(ErrorCode::IoError, "cannot open " + path.string());
    if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd);
        fail(ErrorCode::ProjectLocked, root.string() + " is in use by another process");
    }
    return fd;
}

}  // namespace

ProjectConfig ProjectConfig::from_provider_flag(const std::string& flag) {
    ProjectConfig config;
    if (flag == "live") return config;
    constexpr std::string_view prefix = "scripted:";
    if (flag.rfind(prefix, 0) == 0 && flag.size() > prefix.size()) {
        config.provider = "scripted";
        config.fixture = fs::absolute(flag.substr(prefix.size())).lexically_normal();
        return config;
    }
    fail(ErrorCode::BadRequest, "provider must be 'live' or 'scripted:<path>', got '" + flag + "'");
}

nlohmann::json ProjectConfig::to_json() const {
    nlohmann::json doc{{"version", 1},
                       {"provider", provider},
                       {"fixture", nullptr},
                       {"live", {{"url", live_url}, {"model", live_model}}},
                       {"digest_algorithm", digest_algorithm}};
    if (!fixture.empty()) doc["fixture"] = fixture.string();
    return doc;
}

ProjectConfig ProjectConfig::from_json(const nlohmann::json& doc) {
    try {
        ProjectConfig c;
        c.provider = doc.at("provider").get<std::string>();
        if (c.provider != "live" && c.provider != "scripted") {
            fail(ErrorCode::CorruptProject, "unknown provider '" + c.provider + "' in config.json");
        }
        if (!doc.value("fixture", nlohmann::json()).is_null()) c.fixture = doc.at("fixture").get<std::string>();
        if (auto it = doc.find("live"); it != doc.end()) {
            c.live_url = it->value("url", "");
            c.live_model = it->value("model", "");
        }
        c.digest_algorithm = doc.value("digest_algorithm", std::string(kDigestAlgorithm));
        return c;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptProject, std::string("config.json: ") + e.what());
    }
}

std::shared_ptr<Provider> make_provider(const ProjectConfig& config) {
    if (config.provider == "scripted") {
        return std::make_shared<ScriptedProvider>(ScriptedFixture::load(config.fixture));
    }
    LiveProviderConfig live;
    live.url = config.live_url;
    live.model = config.live_model;
    live = LiveProviderConfig::from_env(live);
    try {
        return std::make_shared<LiveProvider>(live);
    } catch (const Error& e) {
        return std::make_shared<UnconfiguredProvider>(e.what());
    }
}

Project::Project(fs::path root, ProjectConfig config, int lock_fd)
    : root_(std::move(root)), config_(std::move(config)), lock_fd_(lock_fd) {}

Project::~Project() {
    if (lock_fd_ >= 0) ::close(lock_fd_);
}

bool Project::exists(const fs::path& root) {
    return fs::exists(root / kConfigFile) || fs::exists(root / kLogFile);
}

std::unique_ptr<Project> Project::create(const fs::path& root, ProjectConfig config) {
    if (exists(root)) fail(ErrorCode::ProjectExists, root.string() + " already holds a project");
    fs::create_directories(root / "workspace");
    fs::create_directories(root / "snapshots");
    write_file_atomic(root / kConfigFile, config.to_json().dump(2) + "\n");
    write_file_atomic(root / kLogFile, "");
    return open(root);
}

std::vector<SessionEvent> Project::read_log(const fs::path& root) {
    const auto path = root / kLogFile;
    if (!fs::exists(path)) fail(ErrorCode::CorruptProject, "missing " + path.string());
    const std::string text = read_file(path);
    std::vector<SessionEvent> log;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        if (end == std::string::npos) break;  // torn tail, handled by recover()
        auto doc = nlohmann::json::parse(std::string_view(text).substr(pos, end - pos), nullptr, false);
        if (doc.is_discarded()) {
            fail(ErrorCode::CorruptProject, "session.jsonl line " + std::to_string(log.size() + 1) +
                                                " is not valid JSON");
        }
        log.push_back(event_from_json(doc));
        pos = end + 1;
    }
    return log;
}

std::unique_ptr<Project> Project::open(const fs::path& root, std::optional<ProjectConfig> provider_override) {
    if (!exists(root)) fail(ErrorCode::CorruptProject, root.string() + " is not a project");
    const int fd = acquire_lock(root);
    std::unique_ptr<Project> project;
    try {
        auto doc = nlohmann::json::parse(read_file(root / kConfigFile), nullptr, false);
        if (doc.is_discarded()) fail(ErrorCode::CorruptProject, "config.json is not valid JSON");
        auto config = ProjectConfig::from_json(doc);
        if (config.digest_algorithm != kDigestAlgorithm) {
            fail(ErrorCode::UnsupportedDigest, "digest algorithm '" + config.digest_algorithm + "'");
        }
        if (provider_override) {
            config.provider = provider_override->provider;
            config.fixture = provider_override->fixture;
        }
        project.reset(new Project(root, std::move(config), fd));
    } catch (...) {
        ::close(fd);
        throw;
    }
    project->recover();
    return project;
}

void Project::recover() {
    CrashPointsDisabled quiet;
    const auto log_path = root_ / kLogFile;
    const std::string text = read_file(log_path);
    const auto last_newline = text.rfind('\n');
    const std::size_t keep = last_newline == std::string::npos ? 0 : last_newline + 1;
    if (keep != text.size()) {
        // A crash mid-append leaves an unacknowledged partial line.
        write_file_atomic(log_path, std::string_view(text).substr(0, keep));
    }

    const auto log = read_log(root_);
    Session session;
    try {
        session = Engine::rebuild(log);
    } catch (const ReplayError& e) {
        fail(ErrorCode::CorruptProject, std::string("log does not replay: ") + e.what());
    }
    if (auto broken = check_invariants(session)) {
        fail(ErrorCode::CorruptProject, "rebuilt session is inconsistent: " + *broken);
    }

    engine_ = std::make_unique<Engine>(make_provider(config_));
    if (!log.empty()) engine_->provider().restore(log.back().provider_state);
    engine_->adopt(std::move(session));

    // Snapshot files may be missing (crash before the event was acknowledged
    // is fine, they are then orphans) or stale; rewrite from the log.
    const auto snap_dir = root_ / "snapshots";
    fs::create_directories(snap_dir);
    const auto& history = engine_->session().history;
    static const std::regex kManifest(R"(manifest-(\d+)\.json)");
    for (const auto& entry : fs::directory_iterator(snap_dir)) {
        std::smatch m;
        const auto name = entry.path().filename().string();
        if (std::regex_match(name, m, kManifest) && std::stoull(m[1].str()) > history.size()) {
            fs::remove(entry.path());
        }
    }
    for (const auto& snap : history.snapshots()) {
        const auto manifest = snap_dir / ("manifest-" + std::to_string(snap.id.value) + ".json");
        if (!fs::exists(manifest) || read_file(manifest) != manifest_to_json(snap).dump(2) + "\n") {
            history.write_snapshot(snap_dir, snap.id);
        }
    }
    write_caches(engine_->session());

    engine_->set_event_sink(
        [this](const Session& next, const SessionEvent& event) { persist(engine_->session(), next, event); });
    publish();
}

void Project::persist(const Session& before, const Session& next, const SessionEvent& event) {
    const auto snap_dir = root_ / "snapshots";
    for (const auto& snap : next.history.snapshots()) {
        if (snap.id.value > before.history.size()) next.history.write_snapshot(snap_dir, snap.id);
    }
    crash_point("before-event");

    const std::string line = event_to_json(event).dump();
    if (crash_requested("torn-event")) {
        std::ofstream out(root_ / kLogFile, std::ios::binary | std::ios::app);
        out << line.substr(0, line.size() / 2);
        out.flush();
        std::_Exit(137);
    }
    append_line_durable(root_ / kLogFile, line);
    crash_point("after-event");

    write_caches(next);
}

void Project::write_caches(const Session& session) const {
    write_file_atomic(root_ / "plan.json", plan_to_json(session.plan).dump(2) + "\n");
    const nlohmann::json spec = session.spec ? spec_to_json(*session.spec) : nlohmann::json(nullptr);
    write_file_atomic(root_ / "spec.json", spec.dump(2) + "\n");
    crash_point("mid-cache");
    session.history.write_head(root_ / "snapshots");
    session.workspace.flush(root_ / "workspace");
}

void Project::publish() {
    auto snapshot = std::make_shared<const Session>(engine_->session());
    {
        std::lock_guard lock(publish_mutex_);
        published_ = std::move(snapshot);
    }
    changed_.notify_all();
}

nlohmann::json Project::execute(const std::string& verb, const nlohmann::json& payload) {
    std::lock_guard lock(write_mutex_);
    try {
        auto result = engine_->execute(verb, payload);
        publish();
        return result;
    } catch (...) {
        publish();
        throw;
    }
}

void Project::cancel() { engine_->cancel_generation(); }

std::shared_ptr<const Session> Project::current() const {
    std::lock_guard lock(publish_mutex_);
    return published_;
}

std::size_t Project::wait_for_events(std::size_t since, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(publish_mutex_);
    changed_.wait_for(lock, timeout, [&] { return published_->event_log.size() > since; });
    return published_->event_log.size();
}

}  // namespace protoloop
