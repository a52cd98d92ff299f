#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoloop/plan.hpp"
#include "protoloop/workspace.hpp"

namespace protoloop {

struct Snapshot {
    SnapshotId id;
    TaskId task_id;
    std::string created_at;
    std::map<std::string, std::string> manifest;  // path -> content digest

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct SnapshotSummary {
    SnapshotId id;
    TaskId task_id;
    std::size_t file_count = 0;
    bool superseded = false;
    std::string created_at;

    friend bool operator==(const SnapshotSummary&, const SnapshotSummary&) = default;
};

struct RollbackOutcome {
    Workspace workspace;
    /// Tasks whose snapshots became superseded by this rollback.
    std::vector<TaskId> superseded_tasks;
};

/// Linear snapshot history over a content-addressed blob store. Snapshots and
/// blobs are never deleted or rewritten; rollback only moves `head` and marks
/// later snapshots superseded.
class SnapshotStore {
public:
    SnapshotId commit(TaskId task, const Workspace& workspace, std::string created_at);

    /// Restores the captured files exactly; files absent from the manifest
    /// disappear.
    RollbackOutcome rollback(SnapshotId id);

    std::vector<SnapshotSummary> list() const;
    const Snapshot& at(SnapshotId id) const;
    const Snapshot* find(SnapshotId id) const;
    Workspace materialize(SnapshotId id) const;
    std::optional<std::string> read(SnapshotId id, std::string_view path) const;

    std::optional<SnapshotId> head() const noexcept { return head_; }
    bool superseded(SnapshotId id) const { return superseded_.contains(id.value); }
    std::size_t size() const noexcept { return snapshots_.size(); }
    std::size_t blob_count() const noexcept { return blobs_.size(); }
    const std::vector<Snapshot>& snapshots() const noexcept { return snapshots_; }

    /// On-disk layout: `<dir>/manifest-<id>.json`, `<dir>/blobs/<digest>`,
    /// and `<dir>/head.json` for the mutable head/superseded markers.
    void write_snapshot(const std::filesystem::path& dir, SnapshotId id) const;
    void write_head(const std::filesystem::path& dir) const;
    static SnapshotStore load(const std::filesystem::path& dir);

    friend bool operator==(const SnapshotStore&, const SnapshotStore&);

private:
    std::vector<Snapshot> snapshots_;
    std::map<std::string, std::shared_ptr<const std::string>, std::less<>> blobs_;
    std::set<std::uint64_t> superseded_;
    std::optional<SnapshotId> head_;
};

nlohmann::json manifest_to_json(const Snapshot& snapshot);
Snapshot manifest_from_json(const nlohmann::json& doc);
nlohmann::json summaries_to_json(const std::vector<SnapshotSummary>& summaries);

}  // namespace protoloop
