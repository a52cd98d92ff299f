#include "protoloop/plan.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "protoloop/error.hpp"
#include "protoloop/workspace.hpp"

namespace protoloop {
namespace {

constexpr std::array<std::pair<TaskStatus, std::string_view>, 5> kStatusNames{{
    {TaskStatus::Pending, "pending"},
    {TaskStatus::Generating, "generating"},
    {TaskStatus::AwaitingApproval, "awaiting_approval"},
    {TaskStatus::Approved, "approved"},
    {TaskStatus::RolledBack, "rolled_back"},
}};

std::string id_text(TaskId id) { return std::to_string(id.value); }

bool legal_pair(TaskStatus from, TaskStatus to) {
    using S = TaskStatus;
    return (from == S::Pending && to == S::Generating) ||
           (from == S::Generating && to == S::AwaitingApproval) ||
           (from == S::Generating && to == S::Pending) ||
           (from == S::AwaitingApproval && to == S::Approved) ||
           (from == S::AwaitingApproval && to == S::Generating) ||
           (from == S::Approved && to == S::RolledBack);
}

}  // namespace

std::string_view to_string(TaskStatus status) noexcept {
    for (const auto& [s, name] : kStatusNames) {
        if (s == status) return name;
    }
    return "pending";
}

std::string_view to_string(TaskOrigin origin) noexcept {
    return origin == TaskOrigin::Initial ? "initial" : "adaptive";
}

TaskStatus task_status_from_string(std::string_view text) {
    for (const auto& [s, name] : kStatusNames) {
        if (name == text) return s;
    }
    fail(ErrorCode::BadRequest, "unknown task status '" + std::string(text) + "'");
}

TaskOrigin task_origin_from_string(std::string_view text) {
    if (text == "initial") return TaskOrigin::Initial;
    if (text == "adaptive") return TaskOrigin::Adaptive;
    fail(ErrorCode::BadRequest, "unknown task origin '" + std::string(text) + "'");
}

const Task* Plan::find(TaskId id) const {
    auto it = std::find_if(tasks_.begin(), tasks_.end(), [&](const Task& t) { return t.id == id; });
    return it == tasks_.end() ? nullptr : &*it;
}

const Task& Plan::at(TaskId id) const {
    const Task* t = find(id);
    if (t == nullptr) fail(ErrorCode::UnknownTask, "no task with id " + id_text(id));
    return *t;
}

std::optional<TaskId> Plan::active_task() const {
    for (const auto& t : tasks_) {
        if (is_active(t.status)) return t.id;
    }
    return std::nullopt;
}

std::optional<TaskId> Plan::next_pending() const {
    for (const auto& t : tasks_) {
        if (t.status == TaskStatus::Pending) return t.id;
    }
    return std::nullopt;
}

bool Plan::all_pending() const {
    return std::all_of(tasks_.begin(), tasks_.end(),
                       [](const Task& t) { return t.status == TaskStatus::Pending; });
}

void Plan::renumber() {
    for (std::size_t i = 0; i < tasks_.size(); ++i) tasks_[i].ordinal = i + 1;
}

Plan create_plan(std::span<const TaskDraft> drafts, std::uint64_t first_id) {
    if (drafts.empty()) fail(ErrorCode::EmptyPlan, "a plan needs at least one task");
    Plan plan;
    plan.next_id_ = first_id;
    for (const auto& d : drafts) {
        Task t;
        t.id = TaskId{plan.next_id_++};
        t.title = d.title;
        t.description = d.description;
        plan.tasks_.push_back(std::move(t));
    }
    plan.renumber();
    return plan;
}

Plan replace_plan(const Plan& plan, std::span<const TaskDraft> drafts) {
    if (!plan.all_pending()) {
        fail(ErrorCode::PlanLocked, "the plan cannot be regenerated once a task has started");
    }
    Plan next = create_plan(drafts, plan.next_id_);
    next.revision_ = plan.revision_ + 1;
    return next;
}

Plan add_task(const Plan& plan, const TaskDraft& draft, std::optional<std::size_t> position) {
    std::size_t last_locked = 0;
    for (const auto& t : plan.tasks_) {
        if (t.status != TaskStatus::Pending) last_locked = t.ordinal;
    }
    const std::size_t n = plan.tasks_.size();
    std::size_t pos = position.value_or(n + 1);
    if (pos == 0 || pos > n + 1) {
        fail(ErrorCode::PositionOutOfRange,
             "position " + std::to_string(pos) + " outside 1.." + std::to_string(n + 1));
    }
    if (pos <= last_locked) {
        fail(ErrorCode::PositionBeforeApproved,
             "position " + std::to_string(pos) + " precedes started task " +
                 std::to_string(last_locked));
    }
    Plan next = plan;
    Task t;
    t.id = TaskId{next.next_id_++};
    t.title = draft.title;
    t.description = draft.description;
    t.origin = TaskOrigin::Adaptive;
    next.tasks_.insert(next.tasks_.begin() + static_cast<std::ptrdiff_t>(pos - 1), std::move(t));
    next.renumber();
    ++next.revision_;
    return next;
}

Plan update_task(const Plan& plan, TaskId id, const TaskDraft& draft) {
    const Task& current = plan.at(id);
    if (current.status != TaskStatus::Pending) {
        fail(ErrorCode::TaskNotPending, "task " + id_text(id) + " is " +
                                            std::string(to_string(current.status)));
    }
    Plan next = plan;
    for (auto& t : next.tasks_) {
        if (t.id == id) {
            t.title = draft.title;
            t.description = draft.description;
        }
    }
    ++next.revision_;
    return next;
}

Plan remove_task(const Plan& plan, TaskId id) {
    const Task& current = plan.at(id);
    if (current.status != TaskStatus::Pending) {
        fail(ErrorCode::TaskNotPending, "task " + id_text(id) + " is " +
                                            std::string(to_string(current.status)));
    }
    Plan next = plan;
    std::erase_if(next.tasks_, [&](const Task& t) { return t.id == id; });
    next.renumber();
    ++next.revision_;
    return next;
}

Plan transition(const Plan& plan, TaskId id, TaskStatus to, std::optional<SnapshotId> snapshot) {
    const Task& current = plan.at(id);
    const TaskStatus from = current.status;
    if (!legal_pair(from, to)) {
        fail(ErrorCode::IllegalTransition, "task " + id_text(id) + ": " +
                                               std::string(to_string(from)) + " -> " +
                                               std::string(to_string(to)));
    }
    if (from == TaskStatus::Pending) {
        if (auto active = plan.active_task()) {
            fail(ErrorCode::ActiveTaskExists, "task " + id_text(*active) + " is already active");
        }
        if (plan.next_pending() != id) {
            fail(ErrorCode::NotNextTask, "task " + id_text(id) + " is not the next pending task");
        }
    }
    if (to == TaskStatus::Approved && !snapshot) {
        fail(ErrorCode::MissingSnapshotRef, "approving task " + id_text(id) + " needs a snapshot");
    }
    if (to == TaskStatus::RolledBack) {
        for (const auto& t : plan.tasks_) {
            if (t.ordinal > current.ordinal && t.status == TaskStatus::Approved) {
                fail(ErrorCode::IllegalTransition,
                     "task " + id_text(t.id) + " is approved after task " + id_text(id));
            }
        }
    }

    Plan next = plan;
    for (auto& t : next.tasks_) {
        if (t.id != id) continue;
        t.status = to;
        if (to == TaskStatus::Approved) t.snapshot_ref = snapshot;
        if (to == TaskStatus::Pending || to == TaskStatus::Generating ||
            to == TaskStatus::AwaitingApproval) {
            t.snapshot_ref.reset();
        }
    }
    ++next.revision_;
    return next;
}

Plan mark_rolled_back(const Plan& plan, std::span<const TaskId> ids) {
    std::vector<const Task*> targets;
    for (auto id : ids) targets.push_back(&plan.at(id));
    std::sort(targets.begin(), targets.end(),
              [](const Task* a, const Task* b) { return a->ordinal > b->ordinal; });
    Plan next = plan;
    for (const Task* t : targets) next = transition(next, t->id, TaskStatus::RolledBack);
    return next;
}

std::optional<std::string> check_invariants(const Plan& plan) {
    std::set<std::uint64_t> ids;
    std::size_t active = 0;
    bool seen_pending = false;
    for (std::size_t i = 0; i < plan.tasks().size(); ++i) {
        const Task& t = plan.tasks()[i];
        if (t.ordinal != i + 1) return "ordinal gap at position " + std::to_string(i + 1);
        if (!ids.insert(t.id.value).second) return "duplicate id " + id_text(t.id);
        if (t.id.value >= plan.next_id()) return "id " + id_text(t.id) + " not below next_id";
        if (is_active(t.status)) ++active;
        const bool needs_ref =
            t.status == TaskStatus::Approved || t.status == TaskStatus::RolledBack;
        if (needs_ref != t.snapshot_ref.has_value()) {
            return "snapshot_ref mismatch on task " + id_text(t.id);
        }
        if (t.status == TaskStatus::Pending) seen_pending = true;
        if (seen_pending && t.status != TaskStatus::Pending) {
            return "task " + id_text(t.id) + " is " + std::string(to_string(t.status)) +
                   " after a pending task";
        }
    }
    if (active > 1) return "more than one active task";
    return std::nullopt;
}

nlohmann::json plan_to_json(const Plan& plan) {
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : plan.tasks()) {
        nlohmann::json j{
            {"id", t.id.value},
            {"ordinal", t.ordinal},
            {"title", t.title},
            {"description", t.description},
            {"status", to_string(t.status)},
            {"origin", to_string(t.origin)},
            {"snapshot_ref", nullptr},
        };
        if (t.snapshot_ref) j["snapshot_ref"] = t.snapshot_ref->value;
        tasks.push_back(std::move(j));
    }
    return {{"version", 1},
            {"revision", plan.revision()},
            {"next_id", plan.next_id()},
            {"tasks", std::move(tasks)}};
}

Plan plan_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("version").get<int>() != 1) fail(ErrorCode::BadRequest, "unsupported plan version");
        Plan plan;
        plan.revision_ = doc.at("revision").get<std::uint64_t>();
        plan.next_id_ = doc.at("next_id").get<std::uint64_t>();
        for (const auto& j : doc.at("tasks")) {
            Task t;
            t.id = TaskId{j.at("id").get<std::uint64_t>()};
            t.ordinal = j.at("ordinal").get<std::size_t>();
            t.title = j.at("title").get<std::string>();
            t.description = j.at("description").get<std::string>();
            t.status = task_status_from_string(j.at("status").get<std::string>());
            t.origin = task_origin_from_string(j.at("origin").get<std::string>());
            if (!j.at("snapshot_ref").is_null()) {
                t.snapshot_ref = SnapshotId{j.at("snapshot_ref").get<std::uint64_t>()};
            }
            plan.tasks_.push_back(std::move(t));
        }
        if (auto broken = check_invariants(plan)) fail(ErrorCode::BadRequest, "plan: " + *broken);
        return plan;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadRequest, std::string("malformed plan document: ") + e.what());
    }
}

std::string plan_hash(const Plan& plan) { return sha256_hex(plan_to_json(plan).dump()); }

ProjectSpec make_project_spec(std::string goal) {
    if (goal.find_first_not_of(" \t\r\n") == std::string::npos) {
        fail(ErrorCode::EmptyGoal, "the prototype goal must not be empty");
    }
    ProjectSpec spec;
    spec.goal = std::move(goal);
    return spec;
}

ProjectSpec with_specification(ProjectSpec spec, std::string text) {
    spec.specification = std::move(text);
    spec.approved = false;
    return spec;
}

ProjectSpec with_dataset(ProjectSpec spec, nlohmann::json records) {
    spec.dataset = std::move(records);
    spec.approved = false;
    return spec;
}

ProjectSpec approve(ProjectSpec spec) {
    spec.approved = true;
    return spec;
}

nlohmann::json spec_to_json(const ProjectSpec& spec) {
    return {{"version", 1},
            {"goal", spec.goal},
            {"specification", spec.specification},
            {"dataset", {{"records", spec.dataset}}},
            {"approved", spec.approved}};
}

ProjectSpec spec_from_json(const nlohmann::json& doc) {
    try {
        ProjectSpec spec = make_project_spec(doc.at("goal").get<std::string>());
        spec.specification = doc.at("specification").get<std::string>();
        spec.dataset = doc.at("dataset").at("records");
        spec.approved = doc.at("approved").get<bool>();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadRequest, std::string("malformed spec document: ") + e.what());
    }
}

}  // namespace protoloop
