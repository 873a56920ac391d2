#pragma once

#include <stdexcept>
#include <string>

namespace vmmix {

// Bad input data: malformed trace rows, config documents, invalid arguments to
// numerical routines. The CLI maps these to exit status 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value parsed fine but violates a documented invariant.
class InvariantError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace vmmix
