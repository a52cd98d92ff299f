#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoloop/injection.hpp"
#include "protoloop/plan.hpp"
#include "protoloop/provider.hpp"
#include "protoloop/state.hpp"
#include "protoloop/workspace.hpp"

namespace protoloop {

enum class Stage { Drafting, SpecReview, PlanReview, Executing, Idle };

std::string_view to_string(Stage stage) noexcept;
Stage stage_from_string(std::string_view text);

/// Name of the workspace file the synthetic dataset is written to when the
/// specification is approved.
inline constexpr std::string_view kDatasetFile = "data.json";

/// One line of session.jsonl. Generation outputs are recorded so the log
/// alone can rebuild the session, whatever provider produced it.
struct SessionEvent {
    std::uint64_t sequence = 0;
    std::string timestamp;
    std::string verb;
    nlohmann::json payload = nlohmann::json::object();
    nlohmann::json generations = nlohmann::json::array();  // [{kind, document}]
    nlohmann::json result = nlohmann::json::object();
    std::optional<std::string> error;  // engine error name when the operation failed
    std::string outcome;               // workspace digest after the event
    Stage stage = Stage::Drafting;
    nlohmann::json provider_state;

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

nlohmann::json event_to_json(const SessionEvent& event);
SessionEvent event_from_json(const nlohmann::json& doc);

/// The batch injected for the task under review.
struct PendingBatch {
    TaskId task;
    std::vector<Snippet> snippets;
    std::vector<InjectionResult> results;
    std::vector<std::string> feedback;  // redo feedback for this attempt chain
};

struct Session {
    std::string id;
    Stage stage = Stage::Drafting;
    std::optional<ProjectSpec> spec;
    Plan plan;
    SnapshotStore history;
    Workspace workspace;
    std::optional<PendingBatch> pending;
    std::vector<SessionEvent> event_log;
};

/// Structural invariants linking stage, plan, and pending batch.
std::optional<std::string> check_invariants(const Session& session);

struct SpecAction {
    enum class Kind { Approve, Regenerate, Edit } kind = Kind::Approve;
    std::string feedback;
    std::string specification;
    std::optional<nlohmann::json> records;

    static SpecAction approve() { return {}; }
    static SpecAction regenerate(std::string feedback) {
        return {Kind::Regenerate, std::move(feedback), {}, {}};
    }
    static SpecAction edit(std::string text, std::optional<nlohmann::json> records = {}) {
        return {Kind::Edit, {}, std::move(text), std::move(records)};
    }
};

struct PlanMutation {
    enum class Op { Add, Update, Remove } op = Op::Add;
    std::optional<TaskId> id;
    TaskDraft draft;
    std::optional<std::size_t> position;
};

struct PlanAction {
    enum class Kind { Approve, Regenerate, Edit } kind = Kind::Approve;
    std::string feedback;
    std::vector<PlanMutation> mutations;

    static PlanAction approve() { return {}; }
    static PlanAction regenerate(std::string feedback = {}) {
        return {Kind::Regenerate, std::move(feedback), {}};
    }
    static PlanAction edit(std::vector<PlanMutation> mutations) {
        return {Kind::Edit, {}, std::move(mutations)};
    }
};

struct TaskAction {
    enum class Kind { Approve, Redo, ManualOverride } kind = Kind::Approve;
    std::string feedback;
    /// Full-file replacements; nullopt deletes the file.
    std::map<std::string, std::optional<std::string>> files;

    static TaskAction approve() { return {}; }
    static TaskAction redo(std::string feedback) { return {Kind::Redo, std::move(feedback), {}}; }
    static TaskAction manual_override(std::map<std::string, std::optional<std::string>> files) {
        return {Kind::ManualOverride, {}, std::move(files)};
    }
};

nlohmann::json to_payload(const SpecAction& action);
nlohmann::json to_payload(const PlanAction& action);
nlohmann::json to_payload(const TaskAction& action, std::optional<TaskId> task = std::nullopt);

/// UTC, second resolution, e.g. "2026-10-15T09:30:00Z".
std::string utc_now();

/// The session state machine. Every mutation runs against a copy of the
/// session and is published only when it succeeds, so a failed operation
/// leaves the workspace, plan and history untouched. Operations that reached
/// the provider are logged even when they fail, keeping fixture consumption
/// replayable.
class Engine {
public:
    using Clock = std::function<std::string()>;
    /// Called with the would-be session and its new event before the engine
    /// publishes it; throwing aborts the operation.
    using EventSink = std::function<void(const Session&, const SessionEvent&)>;

    explicit Engine(std::shared_ptr<Provider> provider, Clock clock = utc_now);

    const Session& session() const noexcept { return session_; }
    Provider& provider() noexcept { return *provider_; }
    void set_provider(std::shared_ptr<Provider> provider);
    void set_event_sink(EventSink sink) { sink_ = std::move(sink); }
    /// Adopts a session rebuilt elsewhere (see rebuild()).
    void adopt(Session session) { session_ = std::move(session); }
    void cancel_generation() { provider_->cancel(); }

    void start_session(const std::string& goal, std::optional<std::string> session_id = {});
    void review_spec(const SpecAction& action);
    void review_plan(const PlanAction& action);
    void add_task(const TaskDraft& draft, std::optional<std::size_t> position = {});
    void update_task(TaskId id, const TaskDraft& draft);
    void remove_task(TaskId id);
    void run_task(TaskId id);
    void resolve_task(const TaskAction& action, std::optional<TaskId> task = {});
    void rollback_to(SnapshotId id, bool confirm);

    /// Generic entry point; `verb` is one of the operation names above.
    nlohmann::json execute(const std::string& verb, const nlohmann::json& payload);

    /// Rebuilds a session by re-executing `log`. With `provider` null each
    /// event is fed its own recorded generations (project load); otherwise
    /// the given provider serves them (fixture replay). Any outcome that
    /// differs from the recorded one throws ReplayError for that event.
    static Session rebuild(const std::vector<SessionEvent>& log,
                           std::shared_ptr<Provider> provider = nullptr);

private:
    nlohmann::json dispatch(Session& next, const std::string& verb, const nlohmann::json& payload,
                            Provider& gen, const std::string& timestamp);

    std::shared_ptr<Provider> provider_;
    Clock clock_;
    EventSink sink_;
    Session session_;
};

/// Re-executes `log` against `provider` (normally a fresh scripted provider
/// over the original fixture) and checks every outcome digest.
Session replay(const std::vector<SessionEvent>& log, std::shared_ptr<Provider> provider);

/// Read model for the UI and `GET /api/session`.
nlohmann::json session_view(const Session& session);

}  // namespace protoloop
