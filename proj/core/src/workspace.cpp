#include "protoloop/workspace.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

#include "protoloop/error.hpp"
#include "protoloop/fsutil.hpp"

namespace fs = std::filesystem;

namespace protoloop {

std::string sha256_hex(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                 &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0x0f]);
    }
    return out;
}

std::string normalize_newlines(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

std::string_view trim_trailing(std::string_view line) {
    auto end = line.find_last_not_of(" \t\r");
    return end == std::string_view::npos ? std::string_view{} : line.substr(0, end + 1);
}

void validate_relative_path(std::string_view path) {
    if (path.empty()) fail(ErrorCode::InvalidPath, "empty path");
    if (path.front() == '/') fail(ErrorCode::InvalidPath, "absolute path: " + std::string(path));
    if (path.find('\\') != std::string_view::npos || path.find('\0') != std::string_view::npos) {
        fail(ErrorCode::InvalidPath, "illegal character in path: " + std::string(path));
    }
    std::size_t start = 0;
    while (start <= path.size()) {
        auto slash = path.find('/', start);
        auto segment = path.substr(start, slash == std::string_view::npos ? std::string_view::npos
                                                                          : slash - start);
        if (segment.empty() || segment == "." || segment == "..") {
            fail(ErrorCode::InvalidPath, "bad segment in path: " + std::string(path));
        }
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
}

Workspace::Workspace(Files files) {
    for (auto& [path, content] : files) put(path, content);
}

bool Workspace::contains(std::string_view path) const { return files_.find(path) != files_.end(); }

const std::string& Workspace::at(std::string_view path) const {
    auto it = files_.find(path);
    if (it == files_.end()) fail(ErrorCode::FileMissing, std::string(path));
    return it->second;
}

void Workspace::put(std::string_view path, std::string_view content) {
    validate_relative_path(path);
    files_.insert_or_assign(std::string(path), normalize_newlines(content));
}

void Workspace::erase(std::string_view path) {
    auto it = files_.find(path);
    if (it != files_.end()) files_.erase(it);
}

std::string Workspace::digest() const {
    std::string listing;
    for (const auto& [path, content] : files_) {
        listing += path;
        listing.push_back('\0');
        listing += sha256_hex(content);
        listing.push_back('\n');
    }
    return sha256_hex(listing);
}

Workspace Workspace::load(const fs::path& root) {
    Workspace ws;
    if (!fs::exists(root)) return ws;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        if (is_temp_file(entry.path())) continue;
        auto rel = fs::relative(entry.path(), root).generic_string();
        ws.put(rel, read_file(entry.path()));
    }
    return ws;
}

void Workspace::flush(const fs::path& root) const {
    fs::create_directories(root);
    std::vector<fs::path> stale;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        auto rel = fs::relative(entry.path(), root).generic_string();
        if (is_temp_file(entry.path()) || !contains(rel)) stale.push_back(entry.path());
    }
    for (const auto& p : stale) fs::remove(p);

    for (const auto& [path, content] : files_) {
        auto target = root / fs::path(path);
        if (fs::exists(target) && read_file(target) == content) continue;
        write_file_atomic(target, content);
        crash_point("workspace-partial");
    }
    remove_empty_dirs(root);
}

}  // namespace protoloop
