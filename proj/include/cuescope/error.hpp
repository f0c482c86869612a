#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cuescope {

enum class ErrorKind {
  schema,             // document does not match the expected shape
  validation,         // well-formed but semantically invalid
  ordering,           // frame index out of order, duplicated or missing
  dimension,          // vector length mismatch
  insufficient_data,  // not enough frames / warm-up vectors / windows
  data,               // non-finite numeric input
  index,              // bad dimension subset for marginalization
  parameter,          // invalid caller-supplied parameter
  contract,           // precondition on pipeline state violated
  not_found,
  not_ready,
  conflict,
  range,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace cuescope
