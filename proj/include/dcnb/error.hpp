#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcnb {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, missing configuration entries, malformed parameters.
// The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Inputs that parse but violate the data contract (unregistered nodes,
// missing pairs, unmatchable patterns). CLI exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

// Byte-level parse failure; carries the offset where parsing stopped.
class ParseError : public DataError {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : DataError(message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Recognized but unhandled input format (e.g. pcapng).
class UnsupportedFormatError : public DataError {
 public:
  using DataError::DataError;
};

// Not enough data to compute the requested result. CLI exit code 4.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcnb
