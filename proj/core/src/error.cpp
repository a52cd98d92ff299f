#include "protoloop/error.hpp"

#include <array>
#include <cstdint>
#include <utility>

namespace protoloop {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 41> kNames{{
    {ErrorCode::EmptyPlan, "EmptyPlan"},
    {ErrorCode::PositionBeforeApproved, "PositionBeforeApproved"},
    {ErrorCode::TaskNotPending, "TaskNotPending"},
    {ErrorCode::UnknownTask, "UnknownTask"},
    {ErrorCode::IllegalTransition, "IllegalTransition"},
    {ErrorCode::ActiveTaskExists, "ActiveTaskExists"},
    {ErrorCode::NotNextTask, "NotNextTask"},
    {ErrorCode::MissingSnapshotRef, "MissingSnapshotRef"},
    {ErrorCode::PlanLocked, "PlanLocked"},
    {ErrorCode::PositionOutOfRange, "PositionOutOfRange"},
    {ErrorCode::InvalidAnchor, "InvalidAnchor"},
    {ErrorCode::InvalidPath, "InvalidPath"},
    {ErrorCode::InvalidSnippet, "InvalidSnippet"},
    {ErrorCode::FileMissing, "FileMissing"},
    {ErrorCode::MatchNotFound, "MatchNotFound"},
    {ErrorCode::LineOutOfRange, "LineOutOfRange"},
    {ErrorCode::FileExists, "FileExists"},
    {ErrorCode::BatchFailed, "BatchFailed"},
    {ErrorCode::StaleInverse, "StaleInverse"},
    {ErrorCode::DuplicateTaskSnapshot, "DuplicateTaskSnapshot"},
    {ErrorCode::UnknownSnapshot, "UnknownSnapshot"},
    {ErrorCode::SupersededSnapshot, "SupersededSnapshot"},
    {ErrorCode::UnsupportedDigest, "UnsupportedDigest"},
    {ErrorCode::SchemaViolation, "SchemaViolation"},
    {ErrorCode::SchemaInvalidAfterRetries, "SchemaInvalidAfterRetries"},
    {ErrorCode::TransportError, "TransportError"},
    {ErrorCode::FixtureExhausted, "FixtureExhausted"},
    {ErrorCode::FixtureMismatch, "FixtureMismatch"},
    {ErrorCode::InvalidRequest, "InvalidRequest"},
    {ErrorCode::Cancelled, "Cancelled"},
    {ErrorCode::EmptyGoal, "EmptyGoal"},
    {ErrorCode::WrongStage, "WrongStage"},
    {ErrorCode::NoActiveTask, "NoActiveTask"},
    {ErrorCode::Unconfirmed, "Unconfirmed"},
    {ErrorCode::ReplayDivergence, "ReplayDivergence"},
    {ErrorCode::PortInUse, "PortInUse"},
    {ErrorCode::CorruptProject, "CorruptProject"},
    {ErrorCode::ProjectExists, "ProjectExists"},
    {ErrorCode::ProjectLocked, "ProjectLocked"},
    {ErrorCode::BadRequest, "BadRequest"},
    {ErrorCode::IoError, "IoError"},
}};

}  // namespace

std::string_view error_name(ErrorCode code) noexcept {
    for (const auto& [c, name] : kNames) {
        if (c == code) return name;
    }
    return "UnknownError";
}

std::optional<ErrorCode> error_from_name(std::string_view name) noexcept {
    for (const auto& [c, n] : kNames) {
        if (n == name) return c;
    }
    return std::nullopt;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

SchemaError::SchemaError(std::string path, std::string reason)
    : Error(ErrorCode::SchemaViolation, path + ": " + reason),
      path_(std::move(path)),
      reason_(std::move(reason)) {}

BatchError::BatchError(std::size_t index, const Error& cause)
    : Error(ErrorCode::BatchFailed,
            "snippet " + std::to_string(index) + " failed (" + cause.what() + ")"),
      index_(index),
      cause_(cause.code()) {}

ReplayError::ReplayError(std::uint64_t sequence, const std::string& detail)
    : Error(ErrorCode::ReplayDivergence,
            "event " + std::to_string(sequence) + ": " + detail),
      sequence_(sequence) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace protoloop
