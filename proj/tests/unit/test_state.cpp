#include <gtest/gtest.h>

#include <filesystem>

#include "generators.hpp"
#include "protoloop/error.hpp"
#include "protoloop/fsutil.hpp"
#include "protoloop/state.hpp"
#include "walkthrough.hpp"

using namespace protoloop;
using namespace protoloop::testing;

namespace {

Workspace mutate(Rng& rng, Workspace ws) {
    const std::size_t edits = rng.between(1, 3);
    for (std::size_t i = 0; i < edits; ++i) {
        switch (rng.below(3)) {
            case 0:
                ws.put("gen/f" + std::to_string(rng.below(12)) + ".txt", random_text(rng, 8));
                break;
            case 1:
                if (!ws.empty()) ws.erase(ws.files().begin()->first);
                break;
            default:
                ws.put("app.js", random_text(rng, 15));
        }
    }
    return ws;
}

}  // namespace

TEST(SnapshotStore, CommitAndRollback) {
    SnapshotStore store;
    Workspace a;
    a.put("index.html", "<p>1</p>\n");
    const auto s1 = store.commit(TaskId{1}, a, "t1");
    Workspace b = a;
    b.put("app.js", "x();\n");
    const auto s2 = store.commit(TaskId{2}, b, "t2");
    EXPECT_EQ(s1.value, 1u);
    EXPECT_EQ(s2.value, 2u);
    EXPECT_EQ(store.head(), s2);
    EXPECT_EQ(store.blob_count(), 2u);  // index.html is shared

    auto out = store.rollback(s1);
    EXPECT_EQ(out.workspace, a);
    EXPECT_FALSE(out.workspace.contains("app.js"));
    ASSERT_EQ(out.superseded_tasks.size(), 1u);
    EXPECT_EQ(out.superseded_tasks[0], TaskId{2});
    EXPECT_TRUE(store.superseded(s2));
    EXPECT_EQ(store.head(), s1);
    EXPECT_EQ(store.size(), 2u);  // history is never deleted

    EXPECT_THROW(store.rollback(SnapshotId{9}), Error);
    EXPECT_THROW(store.commit(TaskId{1}, a, "again"), Error);
    EXPECT_EQ(store.commit(TaskId{2}, b, "redo").value, 3u);  // task 2's old snapshot is superseded
}

TEST(SnapshotStore, PersistenceRoundTrip) {
    const auto dir = scratch_dir("store");
    SnapshotStore store;
    Rng rng(7);
    Workspace ws = random_workspace(rng);
    for (std::uint64_t t = 1; t <= 5; ++t) {
        store.commit(TaskId{t}, ws, "ts");
        store.write_snapshot(dir, SnapshotId{t});
        ws = mutate(rng, ws);
    }
    store.rollback(SnapshotId{3});
    store.write_head(dir);
    const auto loaded = SnapshotStore::load(dir);
    EXPECT_TRUE(loaded == store);
    EXPECT_EQ(manifest_to_json(store.at(SnapshotId{2})).at("digest_algorithm"), "sha256");

    // a tampered blob is caught on load
    const auto blob = *std::filesystem::directory_iterator(dir / "blobs");
    write_file_atomic(blob.path(), "tampered");
    EXPECT_THROW(SnapshotStore::load(dir), Error);
    std::filesystem::remove_all(dir);
}

// Reference model: a plain map of snapshot id -> captured file map.
TEST(SnapshotProperty, RollbackReproducesCapturedBytes) {
    for (std::uint64_t seed = 0; seed < 250; ++seed) {
        Rng rng(seed);
        SnapshotStore store;
        std::map<std::uint64_t, std::map<std::string, std::string>> model;
        Workspace ws = random_workspace(rng);
        std::uint64_t task = 0;
        const std::size_t ops = rng.between(1, 20);
        for (std::size_t i = 0; i < ops; ++i) {
            if (model.empty() || rng.chance(0.65)) {
                ws = mutate(rng, ws);
                const auto id = store.commit(TaskId{++task}, ws, "t");
                model[id.value] = as_map(ws);
            } else {
                auto it = model.begin();
                std::advance(it, static_cast<std::ptrdiff_t>(rng.below(model.size())));
                ws = store.rollback(SnapshotId{it->first}).workspace;
                ASSERT_EQ(as_map(ws), it->second) << "seed " << seed;
            }
        }
        for (const auto& [id, files] : model) {
            ASSERT_EQ(as_map(store.rollback(SnapshotId{id}).workspace), files) << "seed " << seed << " id " << id;
            ASSERT_EQ(as_map(store.materialize(SnapshotId{id})), files);
        }
    }
}
