#include <gtest/gtest.h>

#include "generators.hpp"
#include "protoloop/error.hpp"
#include "protoloop/fsutil.hpp"
#include "protoloop/orchestrator.hpp"
#include "protoloop/scripted_provider.hpp"
#include "walkthrough.hpp"

using namespace protoloop;
using namespace protoloop::testing;
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

json snippet(const std::string& id, const std::string& kind, const std::string& file, const std::string& content,
             const std::string& match = {}) {
    json anchor{{"kind", kind}, {"file", file}};
    if (!match.empty()) anchor["match"] = match;
    return {{"id", id}, {"rationale", ""}, {"anchor", anchor}, {"content", content}};
}

json exchange(const std::string& kind, const std::string& match, json response) {
    return {{"kind", kind}, {"match", match}, {"response", std::move(response)}};
}

// A two-task session: goal "notes", tasks "Page" and "Style".
std::vector<json> base_exchanges() {
    return {
        exchange("spec", "notes", {{"specification", "A notes page."}}),
        exchange("data", "notes", {{"records", json::array({{{"text", "hello"}}})}}),
        exchange("plan", "notes page", {{"tasks", {{{"title", "Page"}, {"description", ""}},
                                                   {{"title", "Style"}, {"description", ""}}}}}),
        exchange("snippets", "Page",
                 {{"snippets", json::array({snippet("html", "create_file", "index.html", "<main>\n</main>\n")})}}),
    };
}

std::shared_ptr<ScriptedProvider> scripted(std::vector<json> exchanges) {
    return std::make_shared<ScriptedProvider>(
        ScriptedFixture::from_json({{"version", 1}, {"exchanges", std::move(exchanges)}}));
}

Engine fresh(std::vector<json> exchanges) {
    Engine e(scripted(std::move(exchanges)), [] { return std::string("2026-01-01T00:00:00Z"); });
    e.start_session("notes", "s1");
    e.review_spec(SpecAction::approve());
    e.review_plan(PlanAction::approve());
    return e;
}

void expect_invariants(const Engine& e) {
    auto broken = check_invariants(e.session());
    EXPECT_FALSE(broken) << *broken;
}

}  // namespace

TEST(Engine, WalkthroughMatchesOracle) {
    Engine engine(std::make_shared<ScriptedProvider>(ScriptedFixture::load(fixtures_dir() / "walkthrough.json")));
    run_walkthrough(engine);
    const auto& s = engine.session();
    EXPECT_EQ(s.workspace.digest(), golden().final_digest);
    EXPECT_EQ(as_map(s.workspace), read_tree(fixtures_dir() / "golden/final"));
    ASSERT_EQ(s.event_log.size(), golden().events.size());
    for (std::size_t i = 0; i < s.event_log.size(); ++i) {
        EXPECT_EQ(s.event_log[i].verb, golden().events[i].first) << i;
        EXPECT_EQ(s.event_log[i].outcome, golden().events[i].second) << i;
    }
    EXPECT_EQ(s.history.materialize(SnapshotId{6}).digest(), golden().snapshot6_digest);
    expect_invariants(engine);
}

TEST(Engine, RebuildFromLogReproducesSession) {
    Engine engine(std::make_shared<ScriptedProvider>(ScriptedFixture::load(fixtures_dir() / "walkthrough.json")));
    run_walkthrough(engine);
    const Session loaded = Engine::rebuild(engine.session().event_log);
    EXPECT_EQ(loaded.workspace, engine.session().workspace);
    EXPECT_EQ(loaded.plan, engine.session().plan);
    EXPECT_TRUE(loaded.history == engine.session().history);
    EXPECT_EQ(loaded.event_log, engine.session().event_log);

    const Session replayed = replay(engine.session().event_log,
                                    std::make_shared<ScriptedProvider>(
                                        ScriptedFixture::load(fixtures_dir() / "walkthrough.json")));
    EXPECT_EQ(replayed.workspace.digest(), golden().final_digest);
}

TEST(Engine, ReplayDivergenceNamesTheEvent) {
    Engine engine(std::make_shared<ScriptedProvider>(ScriptedFixture::load(fixtures_dir() / "walkthrough.json")));
    run_walkthrough(engine);
    auto doc = json::parse(read_file(fixtures_dir() / "walkthrough.json"));
    // the third snippets exchange belongs to task 3
    int seen = 0;
    for (auto& ex : doc.at("exchanges")) {
        if (ex.at("kind") == "snippets" && ++seen == 3) {
            ex["response"]["snippets"][0]["content"] = "/* changed */";
        }
    }
    try {
        replay(engine.session().event_log, std::make_shared<ScriptedProvider>(ScriptedFixture::from_json(doc)));
        FAIL();
    } catch (const ReplayError& e) {
        EXPECT_EQ(e.sequence(), 8u);
        EXPECT_EQ(e.code(), ErrorCode::ReplayDivergence);
    }
}

TEST(Engine, StageGuards) {
    Engine e(scripted(base_exchanges()));
    EXPECT_EQ(code_of([&] { e.review_spec(SpecAction::approve()); }), ErrorCode::WrongStage);
    EXPECT_EQ(code_of([&] { e.run_task(TaskId{1}); }), ErrorCode::WrongStage);
    EXPECT_EQ(code_of([&] { e.start_session(""); }), ErrorCode::EmptyGoal);
    EXPECT_TRUE(e.session().event_log.empty());  // nothing reached the provider

    e.start_session("notes", "s1");
    EXPECT_EQ(e.session().stage, Stage::SpecReview);
    EXPECT_EQ(code_of([&] { e.review_plan(PlanAction::approve()); }), ErrorCode::WrongStage);
    EXPECT_EQ(code_of([&] { e.add_task({"x", ""}); }), ErrorCode::WrongStage);
    e.review_spec(SpecAction::approve());
    EXPECT_EQ(e.session().workspace.at("data.json"), "[\n  {\n    \"text\": \"hello\"\n  }\n]\n");
    EXPECT_EQ(code_of([&] { e.run_task(TaskId{1}); }), ErrorCode::WrongStage);
    e.review_plan(PlanAction::approve());
    EXPECT_EQ(code_of([&] { e.run_task(TaskId{2}); }), ErrorCode::NotNextTask);
    EXPECT_EQ(code_of([&] { e.resolve_task(TaskAction::approve()); }), ErrorCode::WrongStage);
    e.run_task(TaskId{1});
    EXPECT_EQ(code_of([&] { e.run_task(TaskId{2}); }), ErrorCode::ActiveTaskExists);
    EXPECT_EQ(code_of([&] { e.resolve_task(TaskAction::approve(), TaskId{2}); }), ErrorCode::NoActiveTask);
    EXPECT_EQ(code_of([&] { e.execute("fly", json::object()); }), ErrorCode::BadRequest);
    EXPECT_EQ(code_of([&] { e.execute("add_task", {{"title", 5}}); }), ErrorCode::BadRequest);
    expect_invariants(e);
}

TEST(Engine, SpecEditValidatesRecords) {
    Engine e(scripted(base_exchanges()));
    e.start_session("notes", "s1");
    EXPECT_EQ(code_of([&] { e.review_spec(SpecAction::edit("New text", json::array())); }),
              ErrorCode::SchemaViolation);
    e.review_spec(SpecAction::edit("A notes page, edited.", json::array({{{"text", "x"}}})));
    EXPECT_EQ(e.session().spec->specification, "A notes page, edited.");
    EXPECT_EQ(e.session().spec->dataset, json::array({{{"text", "x"}}}));
}

TEST(Engine, RedoRevertsAndCarriesFeedback) {
    auto ex = base_exchanges();
    ex.push_back(exchange("redo", "bigger",
                          {{"snippets", json::array({snippet("html2", "create_file", "index.html", "<main class=\"big\">\n</main>\n")})}}));
    Engine e = fresh(ex);
    e.run_task(TaskId{1});
    const auto before = e.session().workspace;
    e.resolve_task(TaskAction::redo("bigger"));
    const auto& s = e.session();
    EXPECT_EQ(s.workspace.at("index.html"), "<main class=\"big\">\n</main>\n");
    EXPECT_NE(s.workspace, before);
    ASSERT_TRUE(s.pending);
    EXPECT_EQ(s.pending->feedback, std::vector<std::string>{"bigger"});
    EXPECT_EQ(s.plan.at(TaskId{1}).status, TaskStatus::AwaitingApproval);
    EXPECT_EQ(session_view(s).at("pending").at("snippets").at(0).at("id"), "html2");
    expect_invariants(e);
}

TEST(Engine, FailedBatchLeavesStateAndIsLogged) {
    auto ex = base_exchanges();
    ex.push_back(exchange("snippets", "Style",
                          {{"snippets", json::array({snippet("a", "file_end", "index.html", "<p></p>"),
                                         snippet("b", "after_match", "index.html", "x", "<nav>")})}}));
    Engine e = fresh(ex);
    e.run_task(TaskId{1});
    e.resolve_task(TaskAction::approve());
    const auto digest = e.session().workspace.digest();
    const auto plan = e.session().plan;
    const auto events = e.session().event_log.size();
    try {
        e.run_task(TaskId{2});
        FAIL();
    } catch (const BatchError& err) {
        EXPECT_EQ(err.index(), 2u);
        EXPECT_EQ(err.cause(), ErrorCode::MatchNotFound);
    }
    EXPECT_EQ(e.session().workspace.digest(), digest);
    EXPECT_EQ(e.session().plan, plan);
    EXPECT_EQ(e.session().stage, Stage::Idle);
    ASSERT_EQ(e.session().event_log.size(), events + 1);
    EXPECT_EQ(e.session().event_log.back().error, "BatchFailed");
    EXPECT_EQ(e.session().event_log.back().generations.size(), 1u);
    // the failure is replayable from the log alone
    EXPECT_EQ(Engine::rebuild(e.session().event_log).workspace.digest(), digest);
    expect_invariants(e);
}

TEST(Engine, ManualOverrideCommitsEditedFiles) {
    Engine e = fresh(base_exchanges());
    e.run_task(TaskId{1});
    e.resolve_task(TaskAction::manual_override({{"index.html", "<main>edited</main>\n"}, {"data.json", std::nullopt}}));
    const auto& s = e.session();
    EXPECT_EQ(s.workspace.at("index.html"), "<main>edited</main>\n");
    EXPECT_FALSE(s.workspace.contains("data.json"));
    EXPECT_EQ(s.history.materialize(SnapshotId{1}), s.workspace);
    EXPECT_EQ(s.plan.at(TaskId{1}).status, TaskStatus::Approved);
    EXPECT_EQ(code_of([&] { e.execute("resolve_task", {{"action", "approve"}}); }), ErrorCode::WrongStage);
}

TEST(Engine, RollbackGuards) {
    auto ex = base_exchanges();
    ex.push_back(exchange("snippets", "Style", {{"snippets", json::array({snippet("css", "create_file", "style.css", "a {}\n")})}}));
    Engine e = fresh(ex);
    e.run_task(TaskId{1});
    e.resolve_task(TaskAction::approve());
    const auto snap1 = e.session().workspace;
    e.run_task(TaskId{2});
    EXPECT_EQ(code_of([&] { e.rollback_to(SnapshotId{1}, true); }), ErrorCode::ActiveTaskExists);
    e.resolve_task(TaskAction::approve());

    EXPECT_EQ(code_of([&] { e.rollback_to(SnapshotId{1}, false); }), ErrorCode::Unconfirmed);
    EXPECT_EQ(code_of([&] { e.rollback_to(SnapshotId{7}, true); }), ErrorCode::UnknownSnapshot);
    const auto events = e.session().event_log.size();
    e.rollback_to(SnapshotId{1}, true);
    EXPECT_EQ(e.session().event_log.size(), events + 1);
    EXPECT_EQ(e.session().workspace, snap1);
    EXPECT_EQ(e.session().plan.at(TaskId{2}).status, TaskStatus::RolledBack);
    EXPECT_EQ(code_of([&] { e.rollback_to(SnapshotId{2}, true); }), ErrorCode::SupersededSnapshot);
    expect_invariants(e);

    const auto view = session_view(e.session());
    EXPECT_EQ(view.at("head"), 1);
    EXPECT_EQ(view.at("stage"), "idle");
    EXPECT_EQ(view.at("snapshots").size(), 2u);
    EXPECT_TRUE(view.at("next_task").is_null());
    EXPECT_EQ(view.at("workspace").at("files"), json({"data.json", "index.html"}));
}

TEST(Engine, PlanEditsAndRegenerate) {
    auto ex = base_exchanges();
    ex.insert(ex.begin() + 3, exchange("plan", "", {{"tasks", json::array({{{"title", "Page"}, {"description", "v2"}}})}}));
    Engine e(scripted(ex));
    e.start_session("notes", "s1");
    e.review_spec(SpecAction::approve());
    e.review_plan(PlanAction::regenerate("fewer tasks"));
    ASSERT_EQ(e.session().plan.tasks().size(), 1u);
    EXPECT_EQ(e.session().plan.tasks()[0].description, "v2");
    PlanMutation add{PlanMutation::Op::Add, {}, {"Footer", ""}, {}};
    PlanMutation update{PlanMutation::Op::Update, TaskId{3}, {"Page", "v3"}, {}};
    e.review_plan(PlanAction::edit({add, update}));
    ASSERT_EQ(e.session().plan.tasks().size(), 2u);
    EXPECT_EQ(e.session().plan.tasks()[0].description, "v3");
    e.review_plan(PlanAction::approve());
    e.run_task(TaskId{3});
    e.resolve_task(TaskAction::approve());
    e.add_task({"Header", ""}, 2);
    EXPECT_EQ(e.session().plan.tasks()[1].title, "Header");
    EXPECT_EQ(code_of([&] { e.add_task({"Early", ""}, 1); }), ErrorCode::PositionBeforeApproved);
    EXPECT_EQ(code_of([&] { e.remove_task(TaskId{3}); }), ErrorCode::TaskNotPending);
    e.remove_task(TaskId{4});
    expect_invariants(e);
}

TEST(Engine, ProviderFailureIsLoggedWithoutStateChange) {
    auto ex = base_exchanges();
    ex.pop_back();  // no snippets for "Page"
    Engine e = fresh(ex);
    const auto events = e.session().event_log.size();
    EXPECT_EQ(code_of([&] { e.run_task(TaskId{1}); }), ErrorCode::FixtureExhausted);
    EXPECT_EQ(e.session().plan.at(TaskId{1}).status, TaskStatus::Pending);
    EXPECT_EQ(e.session().event_log.size(), events + 1);
    EXPECT_EQ(e.session().event_log.back().error, "FixtureExhausted");
    expect_invariants(e);
}

TEST(Engine, EventJsonRoundTrip) {
    Engine e = fresh(base_exchanges());
    for (const auto& ev : e.session().event_log) EXPECT_EQ(event_from_json(event_to_json(ev)), ev);
    EXPECT_EQ(code_of([] { event_from_json(json{{"seq", 1}}); }), ErrorCode::CorruptProject);
}
