#pragma once

#include <stdexcept>
#include <string>

namespace statflow {

/// Caller violated a precondition (bad dimension, bad parameter, empty input).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input is well formed but outside the operator's domain
/// (vanishing gradient for a singular operator, missing sign change, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Something that should be impossible happened (NaN produced mid-step).
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

}  // namespace detail
}  // namespace statflow
