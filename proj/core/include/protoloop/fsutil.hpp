#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace protoloop {

std::string read_file(const std::filesystem::path& path);

/// Write to a sibling temp file, fsync, then rename over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Append `line` plus '\n' and fsync before returning.
void append_line_durable(const std::filesystem::path& path, std::string_view line);

bool is_temp_file(const std::filesystem::path& path);

/// Removes empty directories below (not including) `root`.
void remove_empty_dirs(const std::filesystem::path& root);

/// Fault-injection hook for crash-safety testing. When the environment
/// variable PROTOLOOP_CRASH_AT equals `point`, the process exits immediately
/// with status 137 without running destructors or flushing buffers.
void crash_point(std::string_view point);

/// True when PROTOLOOP_CRASH_AT names `point`; for hooks that need to do
/// some damage of their own before exiting.
bool crash_requested(std::string_view point);

/// Suppresses crash points on this thread while alive (project recovery
/// rewrites the same caches and must not trip the hooks meant for writes).
class CrashPointsDisabled {
public:
    CrashPointsDisabled();
    ~CrashPointsDisabled();
    CrashPointsDisabled(const CrashPointsDisabled&) = delete;
    CrashPointsDisabled& operator=(const CrashPointsDisabled&) = delete;
};

}  // namespace protoloop
