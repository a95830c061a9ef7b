#pragma once

#include <stdexcept>
#include <string>

namespace objrec {

enum class ErrorKind {
  InvalidInput,
  InvalidParameter,
  Protocol,
  Capacity,
  PoolConstruction,
  Ingestion,
  Partition,
  NoThreshold,
  ZeroVariance,
  Conflict,
  StaleTrial,
  NotFound,
  Layout,
  Io,
};

const char* error_kind_name(ErrorKind kind) noexcept;

/// Single exception type for the toolkit; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace objrec
