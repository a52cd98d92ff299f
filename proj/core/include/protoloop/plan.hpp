#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace protoloop {

/// Opaque task identifier. Never reused within a session; ordinals are for
/// presentation only.
struct TaskId {
    std::uint64_t value = 0;
    auto operator<=>(const TaskId&) const = default;
};

struct SnapshotId {
    std::uint64_t value = 0;
    auto operator<=>(const SnapshotId&) const = default;
};

enum class TaskStatus { Pending, Generating, AwaitingApproval, Approved, RolledBack };
enum class TaskOrigin { Initial, Adaptive };

std::string_view to_string(TaskStatus status) noexcept;
std::string_view to_string(TaskOrigin origin) noexcept;
TaskStatus task_status_from_string(std::string_view text);
TaskOrigin task_origin_from_string(std::string_view text);

inline bool is_active(TaskStatus s) noexcept {
    return s == TaskStatus::Generating || s == TaskStatus::AwaitingApproval;
}

struct Task {
    TaskId id;
    std::size_t ordinal = 0;
    std::string title;
    std::string description;
    TaskStatus status = TaskStatus::Pending;
    TaskOrigin origin = TaskOrigin::Initial;
    std::optional<SnapshotId> snapshot_ref;

    friend bool operator==(const Task&, const Task&) = default;
};

struct TaskDraft {
    std::string title;
    std::string description;
};

/// Ordered task list. Immutable by convention: every operation below returns
/// a new Plan and leaves its argument untouched, including on error.
class Plan {
public:
    Plan() = default;

    const std::vector<Task>& tasks() const noexcept { return tasks_; }
    std::uint64_t revision() const noexcept { return revision_; }
    std::uint64_t next_id() const noexcept { return next_id_; }
    bool empty() const noexcept { return tasks_.empty(); }

    const Task* find(TaskId id) const;
    const Task& at(TaskId id) const;
    std::optional<TaskId> active_task() const;
    std::optional<TaskId> next_pending() const;
    bool all_pending() const;

    friend bool operator==(const Plan&, const Plan&) = default;

    friend Plan create_plan(std::span<const TaskDraft>, std::uint64_t);
    friend Plan replace_plan(const Plan&, std::span<const TaskDraft>);
    friend Plan add_task(const Plan&, const TaskDraft&, std::optional<std::size_t>);
    friend Plan update_task(const Plan&, TaskId, const TaskDraft&);
    friend Plan remove_task(const Plan&, TaskId);
    friend Plan transition(const Plan&, TaskId, TaskStatus, std::optional<SnapshotId>);
    friend Plan plan_from_json(const nlohmann::json&);

private:
    void renumber();

    std::vector<Task> tasks_;
    std::uint64_t revision_ = 0;
    std::uint64_t next_id_ = 1;
};

/// All tasks Pending with origin Initial, revision 0. `first_id` lets a
/// session keep ids unique across plan regenerations.
Plan create_plan(std::span<const TaskDraft> drafts, std::uint64_t first_id = 1);

/// Wholesale regeneration; only legal while every task is still Pending.
Plan replace_plan(const Plan& plan, std::span<const TaskDraft> drafts);

/// Inserts a Pending/Adaptive task. `position` is a 1-based ordinal and must
/// come after every non-Pending task; absent means append.
Plan add_task(const Plan& plan, const TaskDraft& draft,
              std::optional<std::size_t> position = std::nullopt);

Plan update_task(const Plan& plan, TaskId id, const TaskDraft& draft);
Plan remove_task(const Plan& plan, TaskId id);

/// Legal moves:
///   Pending -> Generating            (first Pending task, no active task)
///   Generating -> AwaitingApproval
///   Generating -> Pending            (generation failed)
///   AwaitingApproval -> Approved     (requires `snapshot`)
///   AwaitingApproval -> Generating   (redo)
///   Approved -> RolledBack           (last Approved task only)
Plan transition(const Plan& plan, TaskId id, TaskStatus to,
                std::optional<SnapshotId> snapshot = std::nullopt);

/// Rolls back the given Approved tasks, latest first.
Plan mark_rolled_back(const Plan& plan, std::span<const TaskId> ids);

/// First violated structural invariant, if any.
std::optional<std::string> check_invariants(const Plan& plan);

nlohmann::json plan_to_json(const Plan& plan);
Plan plan_from_json(const nlohmann::json& doc);

/// Stable hash of the serialized plan.
std::string plan_hash(const Plan& plan);

/// The approved contract for the prototype.
struct ProjectSpec {
    std::string goal;
    std::string specification;
    nlohmann::json dataset = nlohmann::json::array();
    bool approved = false;

    friend bool operator==(const ProjectSpec&, const ProjectSpec&) = default;
};

ProjectSpec make_project_spec(std::string goal);
ProjectSpec with_specification(ProjectSpec spec, std::string text);
ProjectSpec with_dataset(ProjectSpec spec, nlohmann::json records);
ProjectSpec approve(ProjectSpec spec);

nlohmann::json spec_to_json(const ProjectSpec& spec);
ProjectSpec spec_from_json(const nlohmann::json& doc);

}  // namespace protoloop
