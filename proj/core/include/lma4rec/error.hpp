#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lma4rec {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not fit an operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An index outside the valid range of a table or catalog.
class IndexError : public Error {
 public:
  using Error::Error;
};

// A value outside the mathematical domain of an operation (e.g. log of 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A precondition of an API call was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed input data. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A persisted artifact with an unexpected format tag, version or checksum.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A loss became NaN or infinite during training.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace lma4rec
