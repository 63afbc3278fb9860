#ifndef GPCAL_ERRORS_HPP
#define GPCAL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gpcal {

// Violated precondition or inconsistent arguments (dimension mismatch,
// bad configuration, misuse of the API).
class contract_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or unusable input data (files, datasets).
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: singular covariance after jitter escalation,
// non-finite model output, failed estimation.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gpcal

#endif
