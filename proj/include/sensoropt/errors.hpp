#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sensoropt {

enum class ErrorKind {
  Config,    // malformed configuration or spec
  Domain,    // argument outside the mathematical domain of an operation
  Range,     // value outside a recorded normalization range
  Shape,     // dimension mismatch
  Parse,     // malformed text input
  Load,      // corrupt or incompatible model file
  Io,        // filesystem failure
  Fit,       // not enough data to fit a line
  Overflow,  // integer result does not fit
  Diverged,  // training produced a non-finite loss
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);

  // 1-based line number in the source file (the header is line 1).
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t batch, double parameter_norm);

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }
  double parameter_norm() const noexcept { return parameter_norm_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
  double parameter_norm_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace sensoropt
