#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pagpass {

// Base for every error raised by the library. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate a precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data is malformed: bad file, corrupt checkpoint, empty corpus.
class DataError : public Error {
 public:
  using Error::Error;
};

// Token sequence that does not follow <BOS> pattern <SEP> password <EOS>.
class DecodeError : public DataError {
 public:
  DecodeError(std::size_t position, const std::string& what)
      : DataError("decode error at position " + std::to_string(position) + ": " + what),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Training or sampling diverged (non-finite loss, unusable model).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace pagpass
