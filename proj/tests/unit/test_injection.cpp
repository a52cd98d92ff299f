#include <gtest/gtest.h>

#include "generators.hpp"
#include "protoloop/error.hpp"
#include "protoloop/injection.hpp"

using namespace protoloop;
using namespace protoloop::testing;

namespace {

Snippet make(AnchorKind kind, std::string file, std::string content, std::optional<std::string> match = {},
             std::optional<std::size_t> line = {}, std::size_t occurrence = 1) {
    return Snippet{"s", Anchor{kind, std::move(file), std::move(match), line, occurrence}, std::move(content), ""};
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorCode::IoError;
}

Workspace sample() {
    Workspace ws;
    ws.put("app.js", "function a() {\n  return 1;\n}\n\nfunction b() {\n  return 2;\n}\n");
    ws.put("index.html", "<main>\n</main>");
    return ws;
}

}  // namespace

TEST(Anchor, Validation) {
    EXPECT_EQ(code_of([] { validate(Anchor{AnchorKind::AfterMatch, "a.js", {}, {}, 1}); }),
              ErrorCode::InvalidAnchor);
    EXPECT_EQ(code_of([] { validate(Anchor{AnchorKind::FileEnd, "a.js", "x", {}, 1}); }), ErrorCode::InvalidAnchor);
    EXPECT_EQ(code_of([] { validate(Anchor{AnchorKind::AtLine, "a.js", {}, 0, 1}); }), ErrorCode::InvalidAnchor);
    EXPECT_EQ(code_of([] { validate(Anchor{AnchorKind::AfterMatch, "a.js", "x\ny", {}, 1}); }),
              ErrorCode::InvalidAnchor);
    EXPECT_EQ(code_of([] { validate(Anchor{AnchorKind::FileEnd, "../etc/passwd", {}, {}, 1}); }),
              ErrorCode::InvalidPath);
    EXPECT_EQ(code_of([] { validate(Anchor{AnchorKind::FileEnd, "/abs", {}, {}, 1}); }), ErrorCode::InvalidPath);
}

TEST(Anchor, Resolution) {
    const Workspace ws = sample();
    EXPECT_EQ(resolve_anchor(ws, {AnchorKind::FileStart, "app.js", {}, {}, 1}).line, 1u);
    EXPECT_EQ(resolve_anchor(ws, {AnchorKind::FileEnd, "app.js", {}, {}, 1}).line, 8u);
    EXPECT_EQ(resolve_anchor(ws, {AnchorKind::AfterMatch, "app.js", "}", {}, 2}).line, 8u);
    EXPECT_EQ(resolve_anchor(ws, {AnchorKind::BeforeMatch, "app.js", "  return 2;  ", {}, 1}).line, 6u);
    EXPECT_EQ(resolve_anchor(ws, {AnchorKind::AtLine, "app.js", {}, 8, 1}).line, 8u);
    EXPECT_EQ(code_of([&] { resolve_anchor(ws, {AnchorKind::AtLine, "app.js", {}, 9, 1}); }),
              ErrorCode::LineOutOfRange);
    EXPECT_EQ(code_of([&] { resolve_anchor(ws, {AnchorKind::AfterMatch, "app.js", "}", {}, 3}); }),
              ErrorCode::MatchNotFound);
    // leading indentation is significant
    EXPECT_EQ(code_of([&] { resolve_anchor(ws, {AnchorKind::AfterMatch, "app.js", "return 1;", {}, 1}); }),
              ErrorCode::MatchNotFound);
    EXPECT_EQ(code_of([&] { resolve_anchor(ws, {AnchorKind::FileEnd, "nope.js", {}, {}, 1}); }),
              ErrorCode::FileMissing);
    EXPECT_EQ(code_of([&] { resolve_anchor(ws, {AnchorKind::CreateFile, "app.js", {}, {}, 1}); }),
              ErrorCode::FileExists);
    EXPECT_TRUE(resolve_anchor(ws, {AnchorKind::CreateFile, "new/file.css", {}, {}, 1}).creates_file);
}

TEST(Injection, InsertsAndReportsSpan) {
    const Workspace ws = sample();
    auto [next, r] = apply_snippet(ws, make(AnchorKind::AfterMatch, "app.js", "// one\r\n// two\n\n\n", "}", {}, 1));
    EXPECT_EQ(next.at("app.js"),
              "function a() {\n  return 1;\n}\n// one\n// two\n\nfunction b() {\n  return 2;\n}\n");
    EXPECT_EQ(r.start_line, 4u);
    EXPECT_EQ(r.line_count, 2u);
    EXPECT_EQ(r.file, "app.js");
    EXPECT_EQ(next.at("index.html"), ws.at("index.html"));
    EXPECT_EQ(revert(next, std::vector<InjectionResult>{r}), ws);
}

TEST(Injection, AppendToFileWithoutTrailingNewline) {
    const Workspace ws = sample();
    auto [next, r] = apply_snippet(ws, make(AnchorKind::FileEnd, "index.html", "<footer></footer>"));
    EXPECT_EQ(next.at("index.html"), "<main>\n</main>\n<footer></footer>\n");
    EXPECT_EQ(r.start_line, 3u);
    EXPECT_EQ(revert(next, std::vector<InjectionResult>{r}), ws);
}

TEST(Injection, CreateFileAndRevertRemovesIt) {
    const Workspace ws = sample();
    auto [next, r] = apply_snippet(ws, make(AnchorKind::CreateFile, "css/site.css", "body {}\n"));
    EXPECT_EQ(next.at("css/site.css"), "body {}\n");
    EXPECT_TRUE(r.inverse.remove_file);
    EXPECT_EQ(revert(next, std::vector<InjectionResult>{r}), ws);
    EXPECT_EQ(code_of([&] { validate(make(AnchorKind::FileEnd, "app.js", "")); }), ErrorCode::InvalidSnippet);
}

TEST(Injection, StaleInverseIsDetected) {
    const Workspace ws = sample();
    auto [next, r] = apply_snippet(ws, make(AnchorKind::FileStart, "app.js", "// header"));
    next.put("app.js", next.at("app.js") + "// edited by hand\n");
    EXPECT_EQ(code_of([&] { revert(next, std::vector<InjectionResult>{r}); }), ErrorCode::StaleInverse);
}

TEST(Injection, BatchFailureReportsIndexAndLeavesInputAlone) {
    const Workspace ws = sample();
    std::vector<Snippet> batch = {make(AnchorKind::FileStart, "app.js", "// 1"),
                                  make(AnchorKind::AfterMatch, "app.js", "// 2", "no such line")};
    try {
        apply_batch(ws, batch);
        FAIL();
    } catch (const BatchError& e) {
        EXPECT_EQ(e.index(), 2u);
        EXPECT_EQ(e.cause(), ErrorCode::MatchNotFound);
    }
    EXPECT_EQ(ws, sample());
}

TEST(Injection, LaterSnippetsMayAnchorOnEarlierOnes) {
    const Workspace ws = sample();
    std::vector<Snippet> batch = {make(AnchorKind::FileEnd, "app.js", "function c() {}"),
                                  make(AnchorKind::BeforeMatch, "app.js", "// c follows", "function c() {}")};
    auto [next, results] = apply_batch(ws, batch);
    EXPECT_EQ(next.at("app.js").substr(next.at("app.js").size() - 29), "// c follows\nfunction c() {}\n");
    EXPECT_EQ(revert(next, results), ws);
}

TEST(Injection, ResultJsonRoundTrip) {
    auto [next, r] = apply_snippet(sample(), make(AnchorKind::AtLine, "app.js", "x();", {}, 3));
    EXPECT_EQ(result_from_json(result_to_json(r)), r);
    EXPECT_EQ(result_to_json(r).at("inserted_span").at("start"), 3);
}

// Engine vs. the independent line-list model.
TEST(InjectionProperty, MatchesOracleAndRoundTrips) {
    for (std::uint64_t seed = 0; seed < 1500; ++seed) {
        Rng rng(seed);
        const Workspace ws = random_workspace(rng);
        const Snippet s = random_valid_snippet(rng, ws, "p");
        const auto expected = oracle_apply(as_map(ws), s);
        ASSERT_TRUE(expected) << "seed " << seed;
        auto [next, r] = apply_snippet(ws, s);
        ASSERT_EQ(as_map(next), *expected) << "seed " << seed;
        for (const auto& [path, content] : ws.files()) {
            if (path != s.anchor.file) {
                ASSERT_EQ(next.at(path), content) << "seed " << seed;
            }
        }
        ASSERT_EQ(revert(next, std::vector<InjectionResult>{r}), ws) << "seed " << seed;
    }
}

TEST(InjectionProperty, FailingSnippetsMatchOracleRejection) {
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        Rng rng(seed);
        const Workspace ws = random_workspace(rng);
        const Snippet s = random_failing_snippet(rng, ws, "f");
        EXPECT_FALSE(oracle_apply(as_map(ws), s)) << "seed " << seed;
        EXPECT_THROW(apply_snippet(ws, s), Error) << "seed " << seed;
    }
}
