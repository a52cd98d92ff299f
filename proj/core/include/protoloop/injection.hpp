#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoloop/workspace.hpp"

namespace protoloop {

enum class AnchorKind { FileStart, FileEnd, AfterMatch, BeforeMatch, AtLine, CreateFile };

std::string_view to_string(AnchorKind kind) noexcept;
std::optional<AnchorKind> anchor_kind_from_string(std::string_view text) noexcept;

/// Where a snippet lands. Anchors are literal line matchers: `match` is
/// compared against whole lines after trimming trailing whitespace from both
/// sides; leading whitespace is significant.
struct Anchor {
    AnchorKind kind = AnchorKind::FileEnd;
    std::string file;
    std::optional<std::string> match;  // AfterMatch, BeforeMatch
    std::optional<std::size_t> line;   // AtLine, 1-based
    std::size_t occurrence = 1;

    friend bool operator==(const Anchor&, const Anchor&) = default;
};

/// Throws InvalidAnchor / InvalidPath when the fields do not fit the kind.
void validate(const Anchor& anchor);

struct Snippet {
    std::string id;
    Anchor anchor;
    std::string content;
    std::string rationale;

    friend bool operator==(const Snippet&, const Snippet&) = default;
};

void validate(const Snippet& snippet);

/// Insertion point: the new lines go before 1-based line `line` of `file`
/// (line == line count + 1 appends).
struct ResolvedAnchor {
    std::string file;
    std::size_t line = 1;
    bool creates_file = false;

    friend bool operator==(const ResolvedAnchor&, const ResolvedAnchor&) = default;
};

/// Replace `length` bytes at `offset` of the post-image with `original`.
/// For a created file the inverse deletes it.
struct InversePatch {
    bool remove_file = false;
    std::size_t offset = 0;
    std::size_t length = 0;
    std::string original;

    friend bool operator==(const InversePatch&, const InversePatch&) = default;
};

struct InjectionResult {
    std::string snippet_id;
    std::string file;
    std::size_t start_line = 1;  // first inserted line, 1-based
    std::size_t line_count = 0;
    InversePatch inverse;
    std::string pre_digest;   // empty when the file did not exist
    std::string post_digest;

    friend bool operator==(const InjectionResult&, const InjectionResult&) = default;
};

/// Pure function of (files, anchor).
ResolvedAnchor resolve_anchor(const Workspace& workspace, const Anchor& anchor);

/// Content with CRLF converted and exactly one trailing newline (an empty
/// string stays empty).
std::string normalize_snippet_content(std::string_view content);

std::pair<Workspace, InjectionResult> apply_snippet(const Workspace& workspace,
                                                    const Snippet& snippet);

/// All-or-nothing: on failure throws BatchError carrying the 1-based index of
/// the failing snippet, and the caller's workspace is untouched.
std::pair<Workspace, std::vector<InjectionResult>> apply_batch(const Workspace& workspace,
                                                               std::span<const Snippet> snippets);

/// Undoes `results` (most recent batch) in reverse order. Throws StaleInverse
/// when a file no longer matches its recorded post-image.
Workspace revert(const Workspace& workspace, std::span<const InjectionResult> results);

nlohmann::json anchor_to_json(const Anchor& anchor);
nlohmann::json snippet_to_json(const Snippet& snippet);
nlohmann::json result_to_json(const InjectionResult& result);
InjectionResult result_from_json(const nlohmann::json& doc);

}  // namespace protoloop
