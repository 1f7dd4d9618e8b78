#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace structalign {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied value violates an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed binary input. `offset()` is the byte position where decoding
// stopped making sense.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error("parse error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Well-formed input in a variant this library does not handle (compressed
// WAV, SMF format 2, ...).
class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

// Tensor or matrix dimensions disagree. `dimension()` names the offending axis.
class ShapeError : public Error {
 public:
  ShapeError(std::string dimension, const std::string& what)
      : Error("shape mismatch in " + dimension + ": " + what),
        dimension_(std::move(dimension)) {}

  const std::string& dimension() const noexcept { return dimension_; }

 private:
  std::string dimension_;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class TooShortError : public Error {
 public:
  using Error::Error;
};

// Raised by the trainer when the loss stops being finite.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace structalign
