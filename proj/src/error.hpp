#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace domq {

// Error categories. Mirrored one-to-one by the C API status codes, so
// every exception thrown by the core maps to a stable numeric code.
enum class ErrorCode {
  ok = 0,
  invalid_argument,
  parse_error,
  tree_too_large,
  unknown_task,
  invalid_action,
  shape_mismatch,
  not_scalar,
  goal_too_long,
  empty_page,
  invalid_config,
  buffer_too_small,
  index_out_of_range,
  io_error,
  missing_log,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct ParseError : Error {
  ParseError(std::size_t byte_offset, const std::string& what)
      : Error(ErrorCode::parse_error,
              what + " (at byte " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
  std::size_t offset;
};

struct TreeTooLarge : Error {
  explicit TreeTooLarge(std::size_t n, std::size_t cap)
      : Error(ErrorCode::tree_too_large,
              "document has " + std::to_string(n) + " elements, cap is " +
                  std::to_string(cap)) {}
};

struct UnknownTask : Error {
  explicit UnknownTask(const std::string& id)
      : Error(ErrorCode::unknown_task, "unknown task: " + id) {}
};

struct InvalidAction : Error {
  explicit InvalidAction(const std::string& what)
      : Error(ErrorCode::invalid_action, what) {}
};

struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& what)
      : Error(ErrorCode::shape_mismatch, what) {}
};

struct GoalTooLong : Error {
  explicit GoalTooLong(std::size_t n, std::size_t cap)
      : Error(ErrorCode::goal_too_long,
              "goal has " + std::to_string(n) + " tokens, cap is " +
                  std::to_string(cap)) {}
};

}  // namespace domq
