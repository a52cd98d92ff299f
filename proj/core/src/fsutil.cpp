#include "protoloop/fsutil.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "protoloop/error.hpp"

namespace fs = std::filesystem;

namespace protoloop {
namespace {

constexpr std::string_view kTempSuffix = ".plt-tmp";

void write_all(int fd, std::string_view bytes, const fs::path& path) {
    while (!bytes.empty()) {
        auto n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            fail(ErrorCode::IoError, "write " + path.string() + ": " + std::strerror(errno));
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

void fsync_dir(const fs::path& dir) {
    int fd = ::open(dir.empty() ? "." : dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

}  // namespace

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto tmp = path.parent_path() / ("." + path.filename().string() + std::string(kTempSuffix));
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) fail(ErrorCode::IoError, "open " + tmp.string() + ": " + std::strerror(errno));
    write_all(fd, bytes, tmp);
    ::fsync(fd);
    ::close(fd);
    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        fail(ErrorCode::IoError, "rename " + path.string() + ": " + std::strerror(errno));
    }
    fsync_dir(path.parent_path());
}

void append_line_durable(const fs::path& path, std::string_view line) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) fail(ErrorCode::IoError, "open " + path.string() + ": " + std::strerror(errno));
    std::string buf(line);
    buf.push_back('\n');
    write_all(fd, buf, path);
    ::fsync(fd);
    ::close(fd);
}

bool is_temp_file(const fs::path& path) {
    auto name = path.filename().string();
    return name.size() > kTempSuffix.size() &&
           name.compare(name.size() - kTempSuffix.size(), kTempSuffix.size(), kTempSuffix) == 0;
}

void remove_empty_dirs(const fs::path& root) {
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_directory()) dirs.push_back(entry.path());
    }
    // deepest first
    for (auto it = dirs.rbegin(); it != dirs.rend(); ++it) {
        if (fs::is_empty(*it)) fs::remove(*it);
    }
}

namespace {
thread_local int crash_points_disabled = 0;
}

CrashPointsDisabled::CrashPointsDisabled() { ++crash_points_disabled; }
CrashPointsDisabled::~CrashPointsDisabled() { --crash_points_disabled; }

bool crash_requested(std::string_view point) {
    if (crash_points_disabled > 0) return false;
    const char* target = std::getenv("PROTOLOOP_CRASH_AT");
    return target != nullptr && point == target;
}

void crash_point(std::string_view point) {
    if (crash_requested(point)) std::_Exit(137);
}

}  // namespace protoloop
