#pragma once

#include <stdexcept>
#include <string>

namespace ntkcv {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Shape or width mismatch between arguments.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Invalid specification, configuration or argument value.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Unreadable, truncated or malformed input file.
class DataError : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public Error {
public:
  using Error::Error;
};

// Numerical result that is undefined for the given input (zero variance,
// all-zero spectrum, too few samples).
class UndefinedResult : public Error {
public:
  using Error::Error;
};

}  // namespace ntkcv
