#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace protoloop {

/// Every failure the engine can report. The enumerator name is the wire name
/// surfaced on the CLI (stderr) and in API `error` fields.
enum class ErrorCode {
    // plan
    EmptyPlan,
    PositionBeforeApproved,
    TaskNotPending,
    UnknownTask,
    IllegalTransition,
    ActiveTaskExists,
    NotNextTask,
    MissingSnapshotRef,
    PlanLocked,
    PositionOutOfRange,
    // injection
    InvalidAnchor,
    InvalidPath,
    InvalidSnippet,
    FileMissing,
    MatchNotFound,
    LineOutOfRange,
    FileExists,
    BatchFailed,
    StaleInverse,
    // state
    DuplicateTaskSnapshot,
    UnknownSnapshot,
    SupersededSnapshot,
    UnsupportedDigest,
    // provider
    SchemaViolation,
    SchemaInvalidAfterRetries,
    TransportError,
    FixtureExhausted,
    FixtureMismatch,
    InvalidRequest,
    Cancelled,
    // orchestrator
    EmptyGoal,
    WrongStage,
    NoActiveTask,
    Unconfirmed,
    ReplayDivergence,
    // service
    PortInUse,
    CorruptProject,
    ProjectExists,
    ProjectLocked,
    BadRequest,
    IoError,
};

std::string_view error_name(ErrorCode code) noexcept;
std::optional<ErrorCode> error_from_name(std::string_view name) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return error_name(code_); }

private:
    ErrorCode code_;
};

/// Raised by validate_response; `path` names the first violated location
/// (e.g. "snippets[0].anchor.match").
class SchemaError : public Error {
public:
    SchemaError(std::string path, std::string reason);

    const std::string& path() const noexcept { return path_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string path_;
    std::string reason_;
};

/// apply_batch failure. `index` is 1-based.
class BatchError : public Error {
public:
    BatchError(std::size_t index, const Error& cause);

    std::size_t index() const noexcept { return index_; }
    ErrorCode cause() const noexcept { return cause_; }

private:
    std::size_t index_;
    ErrorCode cause_;
};

class ReplayError : public Error {
public:
    ReplayError(std::uint64_t sequence, const std::string& detail);

    std::uint64_t sequence() const noexcept { return sequence_; }

private:
    std::uint64_t sequence_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace protoloop
