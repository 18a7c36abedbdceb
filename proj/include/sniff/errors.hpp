#pragma once

#include <stdexcept>
#include <string>

namespace sniff {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (bad index, dimension mismatch, bad flag).
class UsageError : public Error {
public:
  using Error::Error;
};

/// A NaN or infinity appeared where a finite value is required.
class NumericDomainError : public Error {
public:
  using Error::Error;
};

/// Malformed model file. `path()` names the offending JSON location.
class FormatError : public Error {
public:
  FormatError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

/// Fault spec string could not be parsed. `position()` is a 0-based offset.
class ParseError : public Error {
public:
  ParseError(std::size_t position, const std::string& token, const std::string& what)
      : Error("at position " + std::to_string(position) + " ('" + token + "'): " + what),
        position_(position), token_(token) {}
  std::size_t position() const noexcept { return position_; }
  const std::string& token() const noexcept { return token_; }

private:
  std::size_t position_;
  std::string token_;
};

/// Softmax output saturated to 0 or 1 so the log-odds ratio is unusable.
class DegenerateObservationError : public Error {
public:
  using Error::Error;
};

/// Weight recovery was handed a zero feature value.
class VanishingInputError : public Error {
public:
  using Error::Error;
};

/// Non-vanishing input search exhausted its budget.
class SearchFailureError : public Error {
public:
  using Error::Error;
};

/// More than one fault was requested for a single forward pass.
class SessionDisciplineError : public Error {
public:
  using Error::Error;
};

}  // namespace sniff
