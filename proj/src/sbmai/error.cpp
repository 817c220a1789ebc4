#include "sbmai/error.hpp"

namespace sbmai {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kSize: return "size";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kEstimator: return "estimator";
    case ErrorKind::kUnknownCommand: return "unknown-command";
  }
  return "unknown";
}

}  // namespace sbmai
