#pragma once

#include <stdexcept>
#include <string>

namespace cdbmm {

/// Malformed or out-of-contract arguments (bad sizes, non-finite values, unknown names).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arguments that are well-formed but describe an empty or impossible support.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Failures of numerical routines (factorization, convergence).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cdbmm
