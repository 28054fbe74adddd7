#pragma once

#include <stdexcept>
#include <string>

namespace xview {

// Root of every error raised by the library. The CLI maps any Error to exit
// status 1; usage problems are handled separately by the argument parser.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

// Value outside an operation's mathematical domain (negative input to NMF,
// zero-mass heatmap, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// NSS on a constant prediction map.
class DegeneratePredictionError : public DomainError {
 public:
  using DomainError::DomainError;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class AnnotationError : public Error {
 public:
  using Error::Error;
};

// Malformed FTM1 tensor or checkpoint container.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace xview
