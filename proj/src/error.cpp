#include "objrec/error.hpp"

namespace objrec {

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::PoolConstruction: return "pool-construction";
    case ErrorKind::Ingestion: return "ingestion";
    case ErrorKind::Partition: return "partition";
    case ErrorKind::NoThreshold: return "no-threshold";
    case ErrorKind::ZeroVariance: return "zero-variance";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::StaleTrial: return "stale-trial";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::Layout: return "layout";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace objrec
