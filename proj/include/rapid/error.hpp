#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rapid {

enum class ErrorKind {
  Validation,       // malformed input value or document
  NoSolution,       // IK / selection produced nothing usable
  Size,             // problem too large for the requested solver
  Degenerate,       // geometrically undefined input
  BehindCamera,
  InvalidDepth,
  NoDepth,
  GoalSetEmpty,
  Timeout,
  UnknownId,
  AlreadyRemoved,
  Workspace,
  Unreachable,
  Io,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::NoSolution: return "no_solution";
    case ErrorKind::Size: return "size";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::BehindCamera: return "behind_camera";
    case ErrorKind::InvalidDepth: return "invalid_depth";
    case ErrorKind::NoDepth: return "no_depth";
    case ErrorKind::GoalSetEmpty: return "goal_set_empty";
    case ErrorKind::Timeout: return "timeout";
    case ErrorKind::UnknownId: return "unknown_id";
    case ErrorKind::AlreadyRemoved: return "already_removed";
    case ErrorKind::Workspace: return "workspace";
    case ErrorKind::Unreachable: return "unreachable";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

// Every library failure is reported through this type so callers (CLI,
// skill server) can map the category to an exit code or wire status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rapid
