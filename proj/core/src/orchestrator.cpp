#include "protoloop/orchestrator.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <random>

#include "protoloop/error.hpp"

namespace protoloop {
namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 5> kStageNames{{
    {Stage::Drafting, "drafting"},
    {Stage::SpecReview, "spec_review"},
    {Stage::PlanReview, "plan_review"},
    {Stage::Executing, "executing"},
    {Stage::Idle, "idle"},
}};

/// Forwards to the real provider and remembers what it produced.
class Recorder final : public Provider {
public:
    explicit Recorder(Provider& inner) : inner_(inner) {}

    GenerationResponse generate(const GenerationRequest& request) override {
        ++calls_;
        auto response = inner_.generate(request);
        generations_.push_back({{"kind", to_string(response.kind)}, {"document", response.document}});
        return response;
    }

    std::string describe() const override { return inner_.describe(); }
    std::size_t calls() const noexcept { return calls_; }
    const nlohmann::json& generations() const noexcept { return generations_; }

protected:
    std::string fetch_raw(const GenerationRequest&, std::span<const Attempt>) override { return {}; }

private:
    Provider& inner_;
    std::size_t calls_ = 0;
    nlohmann::json generations_ = nlohmann::json::array();
};

/// Serves the generations recorded on one event, then its recorded error.
class RecordedProvider final : public Provider {
public:
    RecordedProvider(nlohmann::json generations, std::optional<std::string> error)
        : generations_(std::move(generations)), error_(std::move(error)) {}

    GenerationResponse generate(const GenerationRequest& request) override {
        validate_request(request);
        if (next_ < generations_.size()) {
            const auto& g = generations_[next_++];
            if (g.at("kind").get<std::string>() != to_string(request.kind)) {
                fail(ErrorCode::FixtureMismatch, "recorded " + g.at("kind").get<std::string>() +
                                                     " generation, engine asked for " +
                                                     std::string(to_string(request.kind)));
            }
            return validate_response(request.kind, g.at("document"));
        }
        if (error_) {
            if (auto code = error_from_name(*error_)) fail(*code, "recorded failure");
        }
        fail(ErrorCode::FixtureExhausted, "no recorded generation left");
    }

    std::string describe() const override { return "recorded"; }

protected:
    std::string fetch_raw(const GenerationRequest&, std::span<const Attempt>) override { return {}; }

private:
    nlohmann::json generations_;
    std::optional<std::string> error_;
    std::size_t next_ = 0;
};

void require_stage(const Session& s, std::initializer_list<Stage> allowed, std::string_view verb) {
    for (auto st : allowed) {
        if (s.stage == st) return;
    }
    fail(ErrorCode::WrongStage,
         std::string(verb) + " is not available in stage " + std::string(to_string(s.stage)));
}

std::string opt_string(const nlohmann::json& payload, const char* key) {
    auto it = payload.find(key);
    return it == payload.end() || it->is_null() ? std::string{} : it->get<std::string>();
}

std::optional<std::size_t> opt_position(const nlohmann::json& payload) {
    auto it = payload.find("position");
    if (it == payload.end() || it->is_null()) return std::nullopt;
    return it->get<std::size_t>();
}

TaskId task_id_of(const nlohmann::json& payload) { return TaskId{payload.at("id").get<std::uint64_t>()}; }

TaskDraft draft_of(const nlohmann::json& payload) {
    return {payload.at("title").get<std::string>(), opt_string(payload, "description")};
}

std::string joined(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += "\n";
        out += p;
    }
    return out;
}

GenerationRequest snippets_request(const Session& s, const Task& task, const Workspace& ws) {
    GenerationRequest req;
    req.kind = GenerationKind::Snippets;
    req.context.specification = s.spec->specification;
    req.context.plan = plan_to_json(s.plan);
    req.context.task = task;
    req.context.workspace_summary = summarize_workspace(ws);
    return req;
}

void do_start_session(Session& s, const nlohmann::json& payload, Provider& gen) {
    require_stage(s, {Stage::Drafting}, "start_session");
    ProjectSpec spec = make_project_spec(payload.at("goal").get<std::string>());

    GenerationRequest spec_req{GenerationKind::Spec, {}};
    spec_req.context.goal = spec.goal;
    spec = with_specification(std::move(spec), gen.generate(spec_req).specification());

    GenerationRequest data_req{GenerationKind::Data, {}};
    data_req.context.goal = spec.goal;
    data_req.context.specification = spec.specification;
    spec = with_dataset(std::move(spec), gen.generate(data_req).records());

    s.id = opt_string(payload, "session_id");
    s.spec = std::move(spec);
    s.stage = Stage::SpecReview;
}

void do_review_spec(Session& s, const nlohmann::json& payload, Provider& gen) {
    require_stage(s, {Stage::SpecReview}, "review_spec");
    const auto action = payload.at("action").get<std::string>();
    ProjectSpec& spec = *s.spec;
    if (action == "approve") {
        spec = approve(std::move(spec));
        s.workspace.put(kDatasetFile, spec.dataset.dump(2) + "\n");
        GenerationRequest req{GenerationKind::Plan, {}};
        req.context.goal = spec.goal;
        req.context.specification = spec.specification;
        s.plan = create_plan(gen.generate(req).tasks(), s.plan.next_id());
        s.stage = Stage::PlanReview;
    } else if (action == "regenerate") {
        GenerationRequest spec_req{GenerationKind::Spec, {}};
        spec_req.context.goal = spec.goal;
        spec_req.context.feedback = opt_string(payload, "feedback");
        spec = with_specification(std::move(spec), gen.generate(spec_req).specification());
        GenerationRequest data_req{GenerationKind::Data, {}};
        data_req.context.goal = spec.goal;
        data_req.context.specification = spec.specification;
        spec = with_dataset(std::move(spec), gen.generate(data_req).records());
    } else if (action == "edit") {
        spec = with_specification(std::move(spec), payload.at("specification").get<std::string>());
        if (payload.contains("records") && !payload.at("records").is_null()) {
            auto checked = validate_response(GenerationKind::Data,
                                             nlohmann::json{{"records", payload.at("records")}});
            spec = with_dataset(std::move(spec), checked.records());
        }
    } else {
        fail(ErrorCode::BadRequest, "unknown spec action '" + action + "'");
    }
}

Plan apply_mutation(const Plan& plan, const nlohmann::json& m) {
    const auto op = m.at("op").get<std::string>();
    if (op == "add") return add_task(plan, draft_of(m), opt_position(m));
    if (op == "update") return update_task(plan, task_id_of(m), draft_of(m));
    if (op == "remove") return remove_task(plan, task_id_of(m));
    fail(ErrorCode::BadRequest, "unknown plan mutation '" + op + "'");
}

void do_review_plan(Session& s, const nlohmann::json& payload, Provider& gen) {
    require_stage(s, {Stage::PlanReview}, "review_plan");
    const auto action = payload.at("action").get<std::string>();
    if (action == "approve") {
        s.stage = Stage::Idle;
    } else if (action == "regenerate") {
        if (!s.plan.all_pending()) fail(ErrorCode::PlanLocked, "tasks have already started");
        GenerationRequest req{GenerationKind::Plan, {}};
        req.context.goal = s.spec->goal;
        req.context.specification = s.spec->specification;
        req.context.feedback = opt_string(payload, "feedback");
        s.plan = replace_plan(s.plan, gen.generate(req).tasks());
    } else if (action == "edit") {
        Plan plan = s.plan;
        for (const auto& m : payload.at("mutations")) plan = apply_mutation(plan, m);
        s.plan = std::move(plan);
    } else {
        fail(ErrorCode::BadRequest, "unknown plan action '" + action + "'");
    }
}

constexpr std::initializer_list<Stage> kPlanEditable = {Stage::PlanReview, Stage::Idle,
                                                        Stage::Executing};

void do_run_task(Session& s, const nlohmann::json& payload, Provider& gen) {
    if (s.stage == Stage::Executing) {
        fail(ErrorCode::ActiveTaskExists, "resolve the task under review first");
    }
    require_stage(s, {Stage::Idle}, "run_task");
    const TaskId id = task_id_of(payload);
    s.plan = transition(s.plan, id, TaskStatus::Generating);
    const Task& task = s.plan.at(id);

    auto response = gen.generate(snippets_request(s, task, s.workspace));
    auto [workspace, results] = apply_batch(s.workspace, response.snippets());

    s.workspace = std::move(workspace);
    s.plan = transition(s.plan, id, TaskStatus::AwaitingApproval);
    s.pending = PendingBatch{id, response.snippets(), std::move(results), {}};
    s.stage = Stage::Executing;
}

nlohmann::json do_resolve_task(Session& s, const nlohmann::json& payload, Provider& gen,
                            const std::string& timestamp) {
    require_stage(s, {Stage::Executing}, "resolve_task");
    const TaskId active = s.pending->task;
    if (payload.contains("id") && !payload.at("id").is_null() && task_id_of(payload) != active) {
        fail(ErrorCode::NoActiveTask, "task " + std::to_string(task_id_of(payload).value) +
                                          " is not awaiting approval");
    }
    const auto action = payload.at("action").get<std::string>();

    if (action == "redo") {
        PendingBatch& batch = *s.pending;
        Workspace reverted = revert(s.workspace, batch.results);
        s.plan = transition(s.plan, active, TaskStatus::Generating);
        auto chain = batch.feedback;
        chain.push_back(opt_string(payload, "feedback"));

        GenerationRequest req = snippets_request(s, s.plan.at(active), reverted);
        req.kind = GenerationKind::Redo;
        req.context.feedback = joined(chain);
        req.context.failed_snippets = batch.snippets;
        auto response = gen.generate(req);
        auto [workspace, results] = apply_batch(reverted, response.snippets());

        s.workspace = std::move(workspace);
        s.plan = transition(s.plan, active, TaskStatus::AwaitingApproval);
        s.pending = PendingBatch{active, response.snippets(), std::move(results), std::move(chain)};
        return nlohmann::json::object();
    }

    if (action == "manual_override") {
        for (const auto& [path, content] : payload.at("files").items()) {
            if (content.is_null()) {
                validate_relative_path(path);
                s.workspace.erase(path);
            } else {
                s.workspace.put(path, content.get<std::string>());
            }
        }
    } else if (action != "approve") {
        fail(ErrorCode::BadRequest, "unknown task action '" + action + "'");
    }

    const SnapshotId snap = s.history.commit(active, s.workspace, timestamp);
    s.plan = transition(s.plan, active, TaskStatus::Approved, snap);
    s.pending.reset();
    s.stage = Stage::Idle;
    return {{"snapshot_id", snap.value}, {"task_id", active.value}};
}

nlohmann::json do_rollback_to(Session& s, const nlohmann::json& payload) {
    if (s.stage == Stage::Executing) {
        fail(ErrorCode::ActiveTaskExists, "resolve the task under review before rolling back");
    }
    require_stage(s, {Stage::Idle}, "rollback_to");
    if (!payload.value("confirm", false)) {
        fail(ErrorCode::Unconfirmed, "rollback discards the current state; pass confirm");
    }
    const SnapshotId id{payload.at("snapshot_id").get<std::uint64_t>()};
    s.history.at(id);
    if (s.history.superseded(id)) {
        fail(ErrorCode::SupersededSnapshot, "snapshot " + std::to_string(id.value) +
                                                " was rolled back; re-run its task instead");
    }
    RollbackOutcome outcome = s.history.rollback(id);
    std::vector<TaskId> approved;
    for (auto task : outcome.superseded_tasks) {
        const Task* t = s.plan.find(task);
        if (t != nullptr && t->status == TaskStatus::Approved) approved.push_back(task);
    }
    s.plan = mark_rolled_back(s.plan, approved);
    s.workspace = std::move(outcome.workspace);
    s.stage = Stage::Idle;

    nlohmann::json rolled = nlohmann::json::array();
    for (auto t : approved) rolled.push_back(t.value);
    return {{"head", id.value}, {"rolled_back_tasks", std::move(rolled)}};
}

}  // namespace

std::string_view to_string(Stage stage) noexcept {
    for (const auto& [s, name] : kStageNames) {
        if (s == stage) return name;
    }
    return "drafting";
}

Stage stage_from_string(std::string_view text) {
    for (const auto& [s, name] : kStageNames) {
        if (name == text) return s;
    }
    fail(ErrorCode::BadRequest, "unknown stage '" + std::string(text) + "'");
}

nlohmann::json event_to_json(const SessionEvent& e) {
    nlohmann::json j{{"seq", e.sequence},
                     {"ts", e.timestamp},
                     {"verb", e.verb},
                     {"payload", e.payload},
                     {"generations", e.generations},
                     {"result", e.result},
                     {"error", nullptr},
                     {"outcome", e.outcome},
                     {"stage", to_string(e.stage)},
                     {"provider_state", e.provider_state}};
    if (e.error) j["error"] = *e.error;
    return j;
}

SessionEvent event_from_json(const nlohmann::json& j) {
    try {
        SessionEvent e;
        e.sequence = j.at("seq").get<std::uint64_t>();
        e.timestamp = j.at("ts").get<std::string>();
        e.verb = j.at("verb").get<std::string>();
        e.payload = j.at("payload");
        e.generations = j.at("generations");
        e.result = j.at("result");
        if (!j.at("error").is_null()) e.error = j.at("error").get<std::string>();
        e.outcome = j.at("outcome").get<std::string>();
        e.stage = stage_from_string(j.at("stage").get<std::string>());
        e.provider_state = j.at("provider_state");
        return e;
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorCode::CorruptProject, std::string("malformed event: ") + ex.what());
    }
}

std::optional<std::string> check_invariants(const Session& s) {
    if (auto broken = check_invariants(s.plan)) return broken;
    const auto active = s.plan.active_task();
    if ((s.stage == Stage::Executing) != active.has_value()) return "stage/active task mismatch";
    bool awaiting = false;
    for (const auto& t : s.plan.tasks()) {
        if (t.status == TaskStatus::AwaitingApproval) awaiting = true;
        if (t.status == TaskStatus::Approved) {
            if (s.history.find(*t.snapshot_ref) == nullptr) return "approved task without snapshot";
            if (s.history.superseded(*t.snapshot_ref)) return "approved task on superseded snapshot";
        }
    }
    const bool has_pending = s.pending.has_value() && !s.pending->results.empty();
    if (has_pending != awaiting) return "pending batch/awaiting approval mismatch";
    if (s.history.head() && s.history.find(*s.history.head()) == nullptr) return "dangling head";
    for (std::size_t i = 0; i < s.event_log.size(); ++i) {
        if (s.event_log[i].sequence != i + 1) return "event sequence gap";
    }
    return std::nullopt;
}

nlohmann::json to_payload(const SpecAction& a) {
    switch (a.kind) {
        case SpecAction::Kind::Approve:
            return {{"action", "approve"}};
        case SpecAction::Kind::Regenerate:
            return {{"action", "regenerate"}, {"feedback", a.feedback}};
        case SpecAction::Kind::Edit: {
            nlohmann::json j{{"action", "edit"}, {"specification", a.specification}};
            if (a.records) j["records"] = *a.records;
            return j;
        }
    }
    return {};
}

nlohmann::json to_payload(const PlanAction& a) {
    switch (a.kind) {
        case PlanAction::Kind::Approve:
            return {{"action", "approve"}};
        case PlanAction::Kind::Regenerate:
            return {{"action", "regenerate"}, {"feedback", a.feedback}};
        case PlanAction::Kind::Edit: {
            nlohmann::json muts = nlohmann::json::array();
            for (const auto& m : a.mutations) {
                nlohmann::json j;
                switch (m.op) {
                    case PlanMutation::Op::Add:
                        j = {{"op", "add"}, {"title", m.draft.title}, {"description", m.draft.description}};
                        if (m.position) j["position"] = *m.position;
                        break;
                    case PlanMutation::Op::Update:
                        j = {{"op", "update"}, {"id", m.id.value_or(TaskId{}).value},
                             {"title", m.draft.title}, {"description", m.draft.description}};
                        break;
                    case PlanMutation::Op::Remove:
                        j = {{"op", "remove"}, {"id", m.id.value_or(TaskId{}).value}};
                        break;
                }
                muts.push_back(std::move(j));
            }
            return {{"action", "edit"}, {"mutations", std::move(muts)}};
        }
    }
    return {};
}

nlohmann::json to_payload(const TaskAction& a, std::optional<TaskId> task) {
    nlohmann::json j;
    switch (a.kind) {
        case TaskAction::Kind::Approve:
            j = {{"action", "approve"}};
            break;
        case TaskAction::Kind::Redo:
            j = {{"action", "redo"}, {"feedback", a.feedback}};
            break;
        case TaskAction::Kind::ManualOverride: {
            nlohmann::json files = nlohmann::json::object();
            for (const auto& [path, content] : a.files) {
                files[path] = content ? nlohmann::json(*content) : nlohmann::json(nullptr);
            }
            j = {{"action", "manual_override"}, {"files", std::move(files)}};
            break;
        }
    }
    if (task) j["id"] = task->value;
    return j;
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Engine::Engine(std::shared_ptr<Provider> provider, Clock clock)
    : provider_(std::move(provider)), clock_(std::move(clock)) {}

void Engine::set_provider(std::shared_ptr<Provider> provider) { provider_ = std::move(provider); }

nlohmann::json Engine::dispatch(Session& next, const std::string& verb,
                                const nlohmann::json& payload, Provider& gen,
                                const std::string& timestamp) {
    if (verb == "start_session") {
        do_start_session(next, payload, gen);
    } else if (verb == "review_spec") {
        do_review_spec(next, payload, gen);
    } else if (verb == "review_plan") {
        do_review_plan(next, payload, gen);
    } else if (verb == "add_task") {
        require_stage(next, kPlanEditable, verb);
        next.plan = protoloop::add_task(next.plan, draft_of(payload), opt_position(payload));
    } else if (verb == "update_task") {
        require_stage(next, kPlanEditable, verb);
        next.plan = protoloop::update_task(next.plan, task_id_of(payload), draft_of(payload));
    } else if (verb == "remove_task") {
        require_stage(next, kPlanEditable, verb);
        next.plan = protoloop::remove_task(next.plan, task_id_of(payload));
    } else if (verb == "run_task") {
        do_run_task(next, payload, gen);
    } else if (verb == "resolve_task") {
        return do_resolve_task(next, payload, gen, timestamp);
    } else if (verb == "rollback_to") {
        return do_rollback_to(next, payload);
    } else {
        fail(ErrorCode::BadRequest, "unknown operation '" + verb + "'");
    }
    return nlohmann::json::object();
}

nlohmann::json Engine::execute(const std::string& verb, const nlohmann::json& payload) {
    const std::string timestamp = clock_();
    Recorder recorder(*provider_);
    Session next = session_;
    SessionEvent event;
    event.sequence = session_.event_log.size() + 1;
    event.timestamp = timestamp;
    event.verb = verb;
    event.payload = payload;

    try {
        event.result = dispatch(next, verb, payload, recorder, timestamp);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadRequest, std::string("malformed ") + verb + " payload: " + e.what());
    } catch (const Error& e) {
        if (recorder.calls() == 0) throw;
        // The provider was consulted: keep the failure on record, state unchanged.
        Session failed = session_;
        event.generations = recorder.generations();
        event.error = std::string(e.name());
        event.outcome = failed.workspace.digest();
        event.stage = failed.stage;
        event.provider_state = provider_->checkpoint();
        failed.event_log.push_back(event);
        if (sink_) sink_(failed, event);
        session_ = std::move(failed);
        throw;
    }

    event.generations = recorder.generations();
    event.outcome = next.workspace.digest();
    event.stage = next.stage;
    event.provider_state = provider_->checkpoint();
    next.event_log.push_back(event);
    if (sink_) sink_(next, event);
    session_ = std::move(next);
    return event.result;
}

void Engine::start_session(const std::string& goal, std::optional<std::string> session_id) {
    if (!session_id) {
        std::random_device rd;
        std::uniform_int_distribution<std::uint64_t> dist;
        session_id = sha256_hex(std::to_string(dist(rd)) + goal).substr(0, 16);
    }
    execute("start_session", {{"goal", goal}, {"session_id", *session_id}});
}

void Engine::review_spec(const SpecAction& action) { execute("review_spec", to_payload(action)); }

void Engine::review_plan(const PlanAction& action) { execute("review_plan", to_payload(action)); }

void Engine::add_task(const TaskDraft& draft, std::optional<std::size_t> position) {
    nlohmann::json payload{{"title", draft.title}, {"description", draft.description}};
    if (position) payload["position"] = *position;
    execute("add_task", payload);
}

void Engine::update_task(TaskId id, const TaskDraft& draft) {
    execute("update_task",
            {{"id", id.value}, {"title", draft.title}, {"description", draft.description}});
}

void Engine::remove_task(TaskId id) { execute("remove_task", {{"id", id.value}}); }

void Engine::run_task(TaskId id) { execute("run_task", {{"id", id.value}}); }

void Engine::resolve_task(const TaskAction& action, std::optional<TaskId> task) {
    execute("resolve_task", to_payload(action, task));
}

void Engine::rollback_to(SnapshotId id, bool confirm) {
    execute("rollback_to", {{"snapshot_id", id.value}, {"confirm", confirm}});
}

Session Engine::rebuild(const std::vector<SessionEvent>& log, std::shared_ptr<Provider> provider) {
    std::string timestamp;
    const bool recorded = provider == nullptr;
    Engine engine(recorded ? std::make_shared<RecordedProvider>(nlohmann::json::array(), std::nullopt)
                           : std::move(provider),
                  [&timestamp] { return timestamp; });

    for (std::size_t i = 0; i < log.size(); ++i) {
        const SessionEvent& expected = log[i];
        if (expected.sequence != i + 1) throw ReplayError(i + 1, "sequence gap in log");
        timestamp = expected.timestamp;
        if (recorded) {
            engine.provider_ =
                std::make_shared<RecordedProvider>(expected.generations, expected.error);
        }

        std::optional<std::string> error;
        try {
            engine.execute(expected.verb, expected.payload);
        } catch (const Error& e) {
            error = std::string(e.name());
        }

        if (engine.session_.event_log.size() != i + 1) {
            throw ReplayError(expected.sequence, expected.verb + " failed before reaching the provider (" +
                                                     error.value_or("?") + ")");
        }
        SessionEvent& got = engine.session_.event_log.back();
        if (got.error != expected.error) {
            throw ReplayError(expected.sequence, expected.verb + ": expected " +
                                                     expected.error.value_or("success") + ", got " +
                                                     got.error.value_or("success"));
        }
        if (got.generations != expected.generations) {
            throw ReplayError(expected.sequence, expected.verb + ": provider output differs");
        }
        if (got.outcome != expected.outcome) {
            throw ReplayError(expected.sequence, expected.verb + ": workspace digest " + got.outcome +
                                                     " != recorded " + expected.outcome);
        }
        if (got.stage != expected.stage) {
            throw ReplayError(expected.sequence, expected.verb + ": stage " +
                                                     std::string(to_string(got.stage)) +
                                                     " != recorded " +
                                                     std::string(to_string(expected.stage)));
        }
        if (recorded) got.provider_state = expected.provider_state;
    }
    return std::move(engine.session_);
}

Session replay(const std::vector<SessionEvent>& log, std::shared_ptr<Provider> provider) {
    return Engine::rebuild(log, std::move(provider));
}

nlohmann::json session_view(const Session& s) {
    nlohmann::json view{
        {"session_id", s.id},
        {"stage", to_string(s.stage)},
        {"spec", s.spec ? spec_to_json(*s.spec) : nlohmann::json(nullptr)},
        {"plan", plan_to_json(s.plan)},
        {"snapshots", summaries_to_json(s.history.list())},
        {"head", nullptr},
        {"next_task", nullptr},
        {"active_task", nullptr},
        {"pending", nullptr},
        {"workspace", {{"digest", s.workspace.digest()}, {"files", nlohmann::json::array()}}},
        {"event_count", s.event_log.size()},
    };
    if (auto h = s.history.head()) view["head"] = h->value;
    if (auto n = s.plan.next_pending()) view["next_task"] = n->value;
    if (auto a = s.plan.active_task()) view["active_task"] = a->value;
    for (const auto& [path, _] : s.workspace.files()) view["workspace"]["files"].push_back(path);
    if (s.pending) {
        nlohmann::json snippets = nlohmann::json::array();
        for (std::size_t i = 0; i < s.pending->snippets.size(); ++i) {
            auto j = snippet_to_json(s.pending->snippets[i]);
            const auto& r = s.pending->results.at(i);
            j["file"] = r.file;
            j["inserted_span"] = {{"start", r.start_line}, {"count", r.line_count}};
            snippets.push_back(std::move(j));
        }
        view["pending"] = {{"task_id", s.pending->task.value},
                           {"feedback", s.pending->feedback},
                           {"snippets", std::move(snippets)}};
    }
    return view;
}

}  // namespace protoloop
