#include "protoloop/injection.hpp"

#include <algorithm>
#include <array>

#include "protoloop/error.hpp"

namespace protoloop {
namespace {

constexpr std::array<std::pair<AnchorKind, std::string_view>, 6> kKindNames{{
    {AnchorKind::FileStart, "file_start"},
    {AnchorKind::FileEnd, "file_end"},
    {AnchorKind::AfterMatch, "after_match"},
    {AnchorKind::BeforeMatch, "before_match"},
    {AnchorKind::AtLine, "at_line"},
    {AnchorKind::CreateFile, "create_file"},
}};

bool needs_match(AnchorKind k) { return k == AnchorKind::AfterMatch || k == AnchorKind::BeforeMatch; }

std::size_t count_lines(std::string_view text) { return split_lines(text).size(); }

// Byte offset where 1-based line `line` starts; text.size() past the end.
std::size_t line_offset(std::string_view text, std::size_t line) {
    std::size_t offset = 0;
    for (std::size_t current = 1; current < line; ++current) {
        auto nl = text.find('\n', offset);
        if (nl == std::string_view::npos) return text.size();
        offset = nl + 1;
    }
    return offset;
}

}  // namespace

std::string_view to_string(AnchorKind kind) noexcept {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "file_end";
}

std::optional<AnchorKind> anchor_kind_from_string(std::string_view text) noexcept {
    for (const auto& [k, name] : kKindNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

void validate(const Anchor& anchor) {
    validate_relative_path(anchor.file);
    if (needs_match(anchor.kind) != anchor.match.has_value()) {
        fail(ErrorCode::InvalidAnchor, std::string(to_string(anchor.kind)) +
                                           (anchor.match ? " does not take" : " requires") +
                                           " a match line");
    }
    if ((anchor.kind == AnchorKind::AtLine) != anchor.line.has_value()) {
        fail(ErrorCode::InvalidAnchor, std::string(to_string(anchor.kind)) +
                                           (anchor.line ? " does not take" : " requires") +
                                           " a line number");
    }
    if (anchor.line && *anchor.line == 0) fail(ErrorCode::InvalidAnchor, "line numbers are 1-based");
    if (anchor.occurrence == 0) fail(ErrorCode::InvalidAnchor, "occurrence is 1-based");
    if (anchor.match && anchor.match->find('\n') != std::string::npos) {
        fail(ErrorCode::InvalidAnchor, "match must be a single line");
    }
}

void validate(const Snippet& snippet) {
    validate(snippet.anchor);
    if (snippet.content.empty() && snippet.anchor.kind != AnchorKind::CreateFile) {
        fail(ErrorCode::InvalidSnippet, "snippet " + snippet.id + " has no content");
    }
}

ResolvedAnchor resolve_anchor(const Workspace& workspace, const Anchor& anchor) {
    validate(anchor);
    if (anchor.kind == AnchorKind::CreateFile) {
        if (workspace.contains(anchor.file)) fail(ErrorCode::FileExists, anchor.file);
        return {anchor.file, 1, true};
    }
    if (!workspace.contains(anchor.file)) fail(ErrorCode::FileMissing, anchor.file);

    const auto lines = split_lines(workspace.at(anchor.file));
    const std::size_t n = lines.size();
    switch (anchor.kind) {
        case AnchorKind::FileStart:
            return {anchor.file, 1, false};
        case AnchorKind::FileEnd:
            return {anchor.file, n + 1, false};
        case AnchorKind::AtLine:
            if (*anchor.line > n + 1) {
                fail(ErrorCode::LineOutOfRange, anchor.file + " has " + std::to_string(n) +
                                                    " lines; cannot insert before line " +
                                                    std::to_string(*anchor.line));
            }
            return {anchor.file, *anchor.line, false};
        case AnchorKind::AfterMatch:
        case AnchorKind::BeforeMatch: {
            const auto wanted = trim_trailing(*anchor.match);
            std::size_t seen = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (trim_trailing(lines[i]) != wanted) continue;
                if (++seen == anchor.occurrence) {
                    const std::size_t line = i + 1;
                    return {anchor.file, anchor.kind == AnchorKind::AfterMatch ? line + 1 : line,
                            false};
                }
            }
            fail(ErrorCode::MatchNotFound,
                 "'" + *anchor.match + "' occurs " + std::to_string(seen) + " time(s) in " +
                     anchor.file + ", wanted occurrence " + std::to_string(anchor.occurrence));
        }
        case AnchorKind::CreateFile:
            break;
    }
    fail(ErrorCode::InvalidAnchor, "unhandled anchor kind");
}

std::string normalize_snippet_content(std::string_view content) {
    std::string out = normalize_newlines(content);
    while (!out.empty() && out.back() == '\n') out.pop_back();
    // all-newline content collapses to one empty line
    if (!out.empty() || !content.empty()) out.push_back('\n');
    return out;
}

std::pair<Workspace, InjectionResult> apply_snippet(const Workspace& workspace,
                                                    const Snippet& snippet) {
    validate(snippet);
    const ResolvedAnchor at = resolve_anchor(workspace, snippet.anchor);

    InjectionResult result;
    result.snippet_id = snippet.id;
    result.file = at.file;
    result.start_line = at.line;

    Workspace next = workspace;
    if (at.creates_file) {
        const std::string body = normalize_snippet_content(snippet.content);
        result.line_count = count_lines(body);
        result.inverse.remove_file = true;
        result.post_digest = sha256_hex(body);
        next.put(at.file, body);
        return {std::move(next), std::move(result)};
    }

    const std::string& text = workspace.at(at.file);
    const std::string body = normalize_snippet_content(snippet.content);
    std::size_t offset = line_offset(text, at.line);
    std::string insert = body;
    if (offset == text.size() && !text.empty() && text.back() != '\n') insert.insert(0, "\n");

    std::string updated;
    updated.reserve(text.size() + insert.size());
    updated.append(text, 0, offset).append(insert).append(text, offset);

    result.line_count = count_lines(body);
    result.inverse.offset = offset;
    result.inverse.length = insert.size();
    result.pre_digest = sha256_hex(text);
    result.post_digest = sha256_hex(updated);
    next.put(at.file, updated);
    return {std::move(next), std::move(result)};
}

std::pair<Workspace, std::vector<InjectionResult>> apply_batch(const Workspace& workspace,
                                                               std::span<const Snippet> snippets) {
    Workspace current = workspace;
    std::vector<InjectionResult> results;
    results.reserve(snippets.size());
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        try {
            auto [next, result] = apply_snippet(current, snippets[i]);
            current = std::move(next);
            results.push_back(std::move(result));
        } catch (const Error& e) {
            throw BatchError(i + 1, e);
        }
    }
    return {std::move(current), std::move(results)};
}

Workspace revert(const Workspace& workspace, std::span<const InjectionResult> results) {
    Workspace current = workspace;
    for (auto it = results.rbegin(); it != results.rend(); ++it) {
        const InjectionResult& r = *it;
        if (!current.contains(r.file) || sha256_hex(current.at(r.file)) != r.post_digest) {
            fail(ErrorCode::StaleInverse, r.file + " changed since snippet " + r.snippet_id +
                                              " was applied");
        }
        if (r.inverse.remove_file) {
            current.erase(r.file);
            continue;
        }
        std::string text = current.at(r.file);
        if (r.inverse.offset + r.inverse.length > text.size()) {
            fail(ErrorCode::StaleInverse, "inverse patch out of range for " + r.file);
        }
        text.replace(r.inverse.offset, r.inverse.length, r.inverse.original);
        if (sha256_hex(text) != r.pre_digest) {
            fail(ErrorCode::StaleInverse, "inverse patch did not restore " + r.file);
        }
        current.put(r.file, text);
    }
    return current;
}

nlohmann::json anchor_to_json(const Anchor& anchor) {
    nlohmann::json j{{"kind", to_string(anchor.kind)}, {"file", anchor.file}};
    if (anchor.match) j["match"] = *anchor.match;
    if (anchor.line) j["line"] = *anchor.line;
    if (anchor.occurrence != 1) j["occurrence"] = anchor.occurrence;
    return j;
}

nlohmann::json snippet_to_json(const Snippet& snippet) {
    return {{"id", snippet.id},
            {"rationale", snippet.rationale},
            {"anchor", anchor_to_json(snippet.anchor)},
            {"content", snippet.content}};
}

nlohmann::json result_to_json(const InjectionResult& r) {
    return {{"snippet_id", r.snippet_id},
            {"file", r.file},
            {"inserted_span", {{"start", r.start_line}, {"count", r.line_count}}},
            {"inverse",
             {{"remove_file", r.inverse.remove_file},
              {"offset", r.inverse.offset},
              {"length", r.inverse.length},
              {"original", r.inverse.original}}},
            {"pre_digest", r.pre_digest},
            {"post_digest", r.post_digest}};
}

InjectionResult result_from_json(const nlohmann::json& doc) {
    InjectionResult r;
    r.snippet_id = doc.at("snippet_id").get<std::string>();
    r.file = doc.at("file").get<std::string>();
    r.start_line = doc.at("inserted_span").at("start").get<std::size_t>();
    r.line_count = doc.at("inserted_span").at("count").get<std::size_t>();
    const auto& inv = doc.at("inverse");
    r.inverse.remove_file = inv.at("remove_file").get<bool>();
    r.inverse.offset = inv.at("offset").get<std::size_t>();
    r.inverse.length = inv.at("length").get<std::size_t>();
    r.inverse.original = inv.at("original").get<std::string>();
    r.pre_digest = doc.at("pre_digest").get<std::string>();
    r.post_digest = doc.at("post_digest").get<std::string>();
    return r;
}

}  // namespace protoloop
