#ifndef LOGITDYN_ERRORS_H_
#define LOGITDYN_ERRORS_H_

#include <stdexcept>
#include <string>

namespace logitdyn {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration (bad flag values, empty grids, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, inconsistent or unusable data: bad file headers, truncation,
// corrupted labels, precondition violations on the data itself.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure during training (non-finite loss, singular matrix).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace logitdyn

#endif  // LOGITDYN_ERRORS_H_
