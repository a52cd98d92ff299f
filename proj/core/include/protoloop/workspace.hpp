#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace protoloop {

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

inline constexpr std::string_view kDigestAlgorithm = "sha256";

/// The live prototype files, keyed by workspace-relative path. A plain value:
/// copying it is how callers keep pre-images.
class Workspace {
public:
    using Files = std::map<std::string, std::string, std::less<>>;

    Workspace() = default;
    explicit Workspace(Files files);

    const Files& files() const noexcept { return files_; }
    bool contains(std::string_view path) const;
    const std::string& at(std::string_view path) const;
    std::size_t size() const noexcept { return files_.size(); }
    bool empty() const noexcept { return files_.empty(); }

    /// Writes `content` with line endings normalized to LF.
    void put(std::string_view path, std::string_view content);
    void erase(std::string_view path);

    /// Hex hash over the sorted (path, content digest) list.
    std::string digest() const;

    /// Reads every regular file below `root`; CRLF is converted on ingest.
    static Workspace load(const std::filesystem::path& root);

    /// Makes `root` mirror this workspace: writes changed files and removes
    /// files that are not part of it.
    void flush(const std::filesystem::path& root) const;

    friend bool operator==(const Workspace&, const Workspace&) = default;

private:
    Files files_;
};

/// Throws InvalidPath unless `path` is a non-empty relative path with no
/// `..`/`.` segments, backslashes, or empty segments.
void validate_relative_path(std::string_view path);

std::string normalize_newlines(std::string_view text);

/// Lines without their terminators. "a\nb" and "a\nb\n" both yield {a, b}.
std::vector<std::string_view> split_lines(std::string_view text);

/// `line` without trailing spaces, tabs and CRs.
std::string_view trim_trailing(std::string_view line);

}  // namespace protoloop
