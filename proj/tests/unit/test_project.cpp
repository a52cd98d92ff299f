#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "generators.hpp"
#include "protoloop/error.hpp"
#include "protoloop/fsutil.hpp"
#include "protoloop/project.hpp"
#include "walkthrough.hpp"

using namespace protoloop;
using namespace protoloop::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorCode::IoError;
}

ProjectConfig scripted_config() {
    return ProjectConfig::from_provider_flag("scripted:" + (fixtures_dir() / "walkthrough.json").string());
}

// First five events of the walkthrough: session, spec, plan, task 1 run and approve.
fs::path started_project() {
    const auto root = scratch_dir("project");
    auto p = Project::create(root, scripted_config());
    p->execute("start_session", {{"goal", golden().goal}, {"session_id", "golden"}});
    p->execute("review_spec", {{"action", "approve"}});
    p->execute("review_plan", {{"action", "approve"}});
    p->execute("run_task", {{"id", 1}});
    p->execute("resolve_task", {{"action", "approve"}});
    return root;
}

}  // namespace

TEST(Project, CachesMirrorTheSession) {
    const auto root = started_project();
    auto p = Project::open(root);
    const auto s = p->current();
    EXPECT_EQ(s->event_log.size(), 5u);
    EXPECT_EQ(s->event_log.back().outcome, golden().events[4].second);
    EXPECT_EQ(read_tree(root / "workspace"), as_map(s->workspace));
    EXPECT_EQ(json::parse(read_file(root / "plan.json")), plan_to_json(s->plan));
    EXPECT_TRUE(fs::exists(root / "snapshots/manifest-1.json"));
    EXPECT_EQ(json::parse(read_file(root / "config.json")).at("provider"), "scripted");
    // the fixture cursor survives a reopen
    p->execute("run_task", {{"id", 2}});
    EXPECT_EQ(p->current()->event_log.back().outcome, golden().events[5].second);
    fs::remove_all(root);
}

TEST(Project, CreateAndLockErrors) {
    const auto root = started_project();
    EXPECT_EQ(code_of([&] { Project::create(root, scripted_config()); }), ErrorCode::ProjectExists);
    auto p = Project::open(root);
    EXPECT_EQ(code_of([&] { Project::open(root); }), ErrorCode::ProjectLocked);
    p.reset();
    EXPECT_NO_THROW(Project::open(root));
    EXPECT_EQ(code_of([&] { Project::open(root / "nowhere"); }), ErrorCode::CorruptProject);
    fs::remove_all(root);
}

TEST(Project, TornTailIsDroppedAndStaleCachesRewritten) {
    const auto root = started_project();
    const auto log_before = read_file(root / "session.jsonl");
    {
        std::ofstream out(root / "session.jsonl", std::ios::app | std::ios::binary);
        out << R"({"seq": 6, "ts": "2026-)";
    }
    fs::remove_all(root / "workspace");
    write_file_atomic(root / "snapshots/manifest-9.json", "{}");
    write_file_atomic(root / "plan.json", "stale");

    auto p = Project::open(root);
    EXPECT_EQ(read_file(root / "session.jsonl"), log_before);
    EXPECT_EQ(p->current()->event_log.size(), 5u);
    EXPECT_FALSE(fs::exists(root / "snapshots/manifest-9.json"));
    EXPECT_EQ(read_tree(root / "workspace"), as_map(p->current()->workspace));
    EXPECT_EQ(json::parse(read_file(root / "plan.json")), plan_to_json(p->current()->plan));
    fs::remove_all(root);
}

TEST(Project, CorruptLogIsReported) {
    const auto root = started_project();
    auto text = read_file(root / "session.jsonl");
    const auto second = text.find('\n') + 1;
    write_file_atomic(root / "session.jsonl", text.substr(0, second) + "garbage\n" + text.substr(second));
    EXPECT_EQ(code_of([&] { Project::open(root); }), ErrorCode::CorruptProject);

    // a recorded outcome that the engine cannot reproduce
    auto lines = text;
    const auto at = lines.find(golden().events[4].second);
    ASSERT_NE(at, std::string::npos);
    lines.replace(at, 4, "0000");
    write_file_atomic(root / "session.jsonl", lines);
    EXPECT_EQ(code_of([&] { Project::open(root); }), ErrorCode::CorruptProject);

    write_file_atomic(root / "session.jsonl", text);
    auto config = json::parse(read_file(root / "config.json"));
    config["digest_algorithm"] = "md5";
    write_file_atomic(root / "config.json", config.dump());
    EXPECT_EQ(code_of([&] { Project::open(root); }), ErrorCode::UnsupportedDigest);
    fs::remove_all(root);
}

TEST(Project, FailedOperationsAreNotPersistedUnlessLogged) {
    const auto root = started_project();
    auto p = Project::open(root);
    EXPECT_EQ(code_of([&] { p->execute("rollback_to", {{"snapshot_id", 1}}); }), ErrorCode::Unconfirmed);
    EXPECT_EQ(code_of([&] { p->execute("review_spec", {{"action", "approve"}}); }), ErrorCode::WrongStage);
    EXPECT_EQ(Project::read_log(root).size(), 5u);
    fs::remove_all(root);
}

TEST(Project, WaitForEventsWakesOnPublish) {
    const auto root = started_project();
    auto p = Project::open(root);
    EXPECT_EQ(p->wait_for_events(5, std::chrono::milliseconds(20)), 5u);
    std::thread writer([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        p->execute("run_task", {{"id", 2}});
    });
    const auto start = std::chrono::steady_clock::now();
    EXPECT_EQ(p->wait_for_events(5, std::chrono::seconds(10)), 6u);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
    writer.join();
    fs::remove_all(root);
}

TEST(Project, ProviderFlagParsing) {
    EXPECT_EQ(ProjectConfig::from_provider_flag("live").provider, "live");
    const auto c = ProjectConfig::from_provider_flag("scripted:rel/fix.json");
    EXPECT_TRUE(c.fixture.is_absolute());
    EXPECT_EQ(code_of([] { ProjectConfig::from_provider_flag("scripted:"); }), ErrorCode::BadRequest);
    EXPECT_EQ(code_of([] { ProjectConfig::from_provider_flag("magic"); }), ErrorCode::BadRequest);
    const auto back = ProjectConfig::from_json(c.to_json());
    EXPECT_EQ(back.fixture, c.fixture);
    EXPECT_EQ(back.provider, "scripted");
}
