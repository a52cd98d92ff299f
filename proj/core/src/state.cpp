#include "protoloop/state.hpp"

#include <algorithm>
#include <regex>

#include "protoloop/error.hpp"
#include "protoloop/fsutil.hpp"

namespace fs = std::filesystem;

namespace protoloop {

SnapshotId SnapshotStore::commit(TaskId task, const Workspace& workspace, std::string created_at) {
    for (const auto& s : snapshots_) {
        if (s.task_id == task && !superseded(s.id)) {
            fail(ErrorCode::DuplicateTaskSnapshot,
                 "task " + std::to_string(task.value) + " already has snapshot " +
                     std::to_string(s.id.value));
        }
    }
    Snapshot snap;
    snap.id = SnapshotId{snapshots_.empty() ? 1 : snapshots_.back().id.value + 1};
    snap.task_id = task;
    snap.created_at = std::move(created_at);
    for (const auto& [path, content] : workspace.files()) {
        auto digest = sha256_hex(content);
        if (!blobs_.contains(digest)) {
            blobs_.emplace(digest, std::make_shared<const std::string>(content));
        }
        snap.manifest.emplace(path, std::move(digest));
    }
    snapshots_.push_back(std::move(snap));
    head_ = snapshots_.back().id;
    return *head_;
}

RollbackOutcome SnapshotStore::rollback(SnapshotId id) {
    const Snapshot& target = at(id);
    RollbackOutcome out;
    out.workspace = materialize(target.id);
    for (const auto& s : snapshots_) {
        if (s.id > id && !superseded(s.id)) {
            superseded_.insert(s.id.value);
            out.superseded_tasks.push_back(s.task_id);
        }
    }
    superseded_.erase(id.value);
    head_ = id;
    return out;
}

std::vector<SnapshotSummary> SnapshotStore::list() const {
    std::vector<SnapshotSummary> out;
    out.reserve(snapshots_.size());
    for (const auto& s : snapshots_) {
        out.push_back({s.id, s.task_id, s.manifest.size(), superseded(s.id), s.created_at});
    }
    return out;
}

const Snapshot* SnapshotStore::find(SnapshotId id) const {
    auto it = std::find_if(snapshots_.begin(), snapshots_.end(),
                           [&](const Snapshot& s) { return s.id == id; });
    return it == snapshots_.end() ? nullptr : &*it;
}

const Snapshot& SnapshotStore::at(SnapshotId id) const {
    const Snapshot* s = find(id);
    if (s == nullptr) fail(ErrorCode::UnknownSnapshot, "no snapshot " + std::to_string(id.value));
    return *s;
}

Workspace SnapshotStore::materialize(SnapshotId id) const {
    const Snapshot& snap = at(id);
    Workspace ws;
    for (const auto& [path, digest] : snap.manifest) {
        auto blob = blobs_.find(digest);
        if (blob == blobs_.end()) fail(ErrorCode::CorruptProject, "missing blob " + digest);
        ws.put(path, *blob->second);
    }
    return ws;
}

std::optional<std::string> SnapshotStore::read(SnapshotId id, std::string_view path) const {
    const Snapshot& snap = at(id);
    auto entry = snap.manifest.find(std::string(path));
    if (entry == snap.manifest.end()) return std::nullopt;
    auto blob = blobs_.find(entry->second);
    if (blob == blobs_.end()) return std::nullopt;
    return *blob->second;
}

void SnapshotStore::write_snapshot(const fs::path& dir, SnapshotId id) const {
    const Snapshot& snap = at(id);
    const auto blob_dir = dir / "blobs";
    fs::create_directories(blob_dir);
    for (const auto& [path, digest] : snap.manifest) {
        auto target = blob_dir / digest;
        if (fs::exists(target) && sha256_hex(read_file(target)) == digest) continue;
        write_file_atomic(target, *blobs_.at(digest));
    }
    write_file_atomic(dir / ("manifest-" + std::to_string(id.value) + ".json"),
                      manifest_to_json(snap).dump(2) + "\n");
}

void SnapshotStore::write_head(const fs::path& dir) const {
    nlohmann::json doc{{"head", nullptr}, {"superseded", superseded_}};
    if (head_) doc["head"] = head_->value;
    write_file_atomic(dir / "head.json", doc.dump(2) + "\n");
}

SnapshotStore SnapshotStore::load(const fs::path& dir) {
    SnapshotStore store;
    if (!fs::exists(dir)) return store;
    static const std::regex kManifest(R"(manifest-(\d+)\.json)");
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        auto name = entry.path().filename().string();
        if (!std::regex_match(name, m, kManifest)) continue;
        store.snapshots_.push_back(manifest_from_json(nlohmann::json::parse(read_file(entry.path()))));
    }
    std::sort(store.snapshots_.begin(), store.snapshots_.end(),
              [](const Snapshot& a, const Snapshot& b) { return a.id < b.id; });
    for (const auto& snap : store.snapshots_) {
        for (const auto& [path, digest] : snap.manifest) {
            if (store.blobs_.contains(digest)) continue;
            auto bytes = read_file(dir / "blobs" / digest);
            if (sha256_hex(bytes) != digest) fail(ErrorCode::CorruptProject, "blob " + digest);
            store.blobs_.emplace(digest, std::make_shared<const std::string>(std::move(bytes)));
        }
    }
    if (fs::exists(dir / "head.json")) {
        auto doc = nlohmann::json::parse(read_file(dir / "head.json"));
        if (!doc.at("head").is_null()) store.head_ = SnapshotId{doc.at("head").get<std::uint64_t>()};
        for (auto id : doc.at("superseded")) store.superseded_.insert(id.get<std::uint64_t>());
    }
    return store;
}

bool operator==(const SnapshotStore& a, const SnapshotStore& b) {
    if (a.snapshots_ != b.snapshots_ || a.superseded_ != b.superseded_ || a.head_ != b.head_ ||
        a.blobs_.size() != b.blobs_.size()) {
        return false;
    }
    return std::equal(a.blobs_.begin(), a.blobs_.end(), b.blobs_.begin(),
                      [](const auto& x, const auto& y) {
                          return x.first == y.first && *x.second == *y.second;
                      });
}

nlohmann::json manifest_to_json(const Snapshot& snapshot) {
    return {{"version", 1},
            {"id", snapshot.id.value},
            {"task_id", snapshot.task_id.value},
            {"created_at", snapshot.created_at},
            {"digest_algorithm", kDigestAlgorithm},
            {"files", snapshot.manifest}};
}

Snapshot manifest_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("digest_algorithm").get<std::string>() != kDigestAlgorithm) {
            fail(ErrorCode::UnsupportedDigest, doc.at("digest_algorithm").get<std::string>());
        }
        Snapshot snap;
        snap.id = SnapshotId{doc.at("id").get<std::uint64_t>()};
        snap.task_id = TaskId{doc.at("task_id").get<std::uint64_t>()};
        snap.created_at = doc.at("created_at").get<std::string>();
        snap.manifest = doc.at("files").get<std::map<std::string, std::string>>();
        return snap;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptProject, std::string("malformed manifest: ") + e.what());
    }
}

nlohmann::json summaries_to_json(const std::vector<SnapshotSummary>& summaries) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : summaries) {
        out.push_back({{"id", s.id.value},
                       {"task_id", s.task_id.value},
                       {"file_count", s.file_count},
                       {"superseded", s.superseded},
                       {"created_at", s.created_at}});
    }
    return out;
}

}  // namespace protoloop
