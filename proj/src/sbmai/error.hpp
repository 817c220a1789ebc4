#pragma once

#include <stdexcept>
#include <string>

namespace sbmai {

enum class ErrorKind {
  kParameter,       // invalid model parametrization or option value
  kDomain,          // log of a nonpositive argument, negative q, ...
  kSize,            // enumeration cap exceeded
  kIo,              // unreadable / unwritable file
  kEstimator,       // numerical estimator failure
  kUnknownCommand,
};

const char* to_string(ErrorKind kind);

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

}  // namespace sbmai
