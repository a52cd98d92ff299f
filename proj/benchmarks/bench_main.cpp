#include <benchmark/benchmark.h>

#include <string>

#include "protoloop/injection.hpp"
#include "protoloop/provider.hpp"
#include "protoloop/state.hpp"
#include "protoloop/workspace.hpp"

using namespace protoloop;

namespace {

// `files` files of `lines` lines each, roughly prototype-shaped.
Workspace make_workspace(std::size_t files, std::size_t lines) {
    Workspace ws;
    for (std::size_t f = 0; f < files; ++f) {
        std::string text;
        for (std::size_t i = 0; i < lines; ++i) {
            text += (i % 7 == 0) ? "}\n" : "  const value" + std::to_string(i) + " = render(item, " + std::to_string(f) + ");\n";
        }
        ws.put("src/file" + std::to_string(f) + ".js", text);
    }
    return ws;
}

std::vector<Snippet> make_batch(std::size_t n) {
    std::vector<Snippet> batch;
    for (std::size_t i = 0; i < n; ++i) {
        Anchor a{AnchorKind::AfterMatch, "src/file" + std::to_string(i % 4) + ".js", "}", {}, i + 1};
        batch.push_back({"s" + std::to_string(i), a, "function added" + std::to_string(i) + "() {}\n", ""});
    }
    return batch;
}

void BM_apply_batch(benchmark::State& state) {
    const auto ws = make_workspace(4, static_cast<std::size_t>(state.range(0)));
    const auto batch = make_batch(8);
    for (auto _ : state) benchmark::DoNotOptimize(apply_batch(ws, batch));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_apply_batch)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_apply_and_revert(benchmark::State& state) {
    const auto ws = make_workspace(4, 1000);
    const auto batch = make_batch(8);
    for (auto _ : state) {
        auto [next, results] = apply_batch(ws, batch);
        benchmark::DoNotOptimize(revert(next, results));
    }
}
BENCHMARK(BM_apply_and_revert);

void BM_workspace_digest(benchmark::State& state) {
    const auto ws = make_workspace(static_cast<std::size_t>(state.range(0)), 500);
    for (auto _ : state) benchmark::DoNotOptimize(ws.digest());
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0) * 500 * 40);
}
BENCHMARK(BM_workspace_digest)->Range(1, 64);

void BM_snapshot_commit(benchmark::State& state) {
    auto ws = make_workspace(16, 500);
    for (auto _ : state) {
        state.PauseTiming();
        SnapshotStore store;
        state.ResumeTiming();
        for (std::uint64_t t = 1; t <= 10; ++t) {
            ws.put("src/file" + std::to_string(t % 16) + ".js", "// v" + std::to_string(t) + "\n");
            store.commit(TaskId{t}, ws, "t");
        }
        benchmark::DoNotOptimize(store.size());
    }
}
BENCHMARK(BM_snapshot_commit);

void BM_snapshot_rollback(benchmark::State& state) {
    SnapshotStore store;
    auto ws = make_workspace(16, 500);
    for (std::uint64_t t = 1; t <= 10; ++t) {
        ws.put("later" + std::to_string(t) + ".js", "x\n");
        store.commit(TaskId{t}, ws, "t");
    }
    for (auto _ : state) benchmark::DoNotOptimize(store.materialize(SnapshotId{3}));
}
BENCHMARK(BM_snapshot_rollback);

void BM_summarize_workspace(benchmark::State& state) {
    const auto ws = make_workspace(8, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(summarize_workspace(ws, 64 * 1024));
}
BENCHMARK(BM_summarize_workspace)->RangeMultiplier(4)->Range(64, 4096);

}  // namespace

BENCHMARK_MAIN();
