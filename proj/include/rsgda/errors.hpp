#pragma once

#include <stdexcept>
#include <string>

namespace rsgda {

enum class ErrorKind {
  Dimension,
  Parameter,
  Construction,
  OracleViolation,
  Capability,
  Constraint,
  Config,
  Diagnostic,
  UndefinedRatio,
  InsufficientData,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so the C boundary can map
// it onto a status code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace rsgda
