#include "sensoropt/errors.hpp"

#include <sstream>

namespace sensoropt {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Range: return "range error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Load: return "load error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Fit: return "fit error";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::Diverged: return "training diverged";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + message), line_(line) {}

namespace {
std::string diverged_message(std::size_t epoch, std::size_t batch, double norm) {
  std::ostringstream os;
  os << "non-finite loss at epoch " << epoch << ", batch " << batch
     << " (parameter L2 norm " << norm << ")";
  return os.str();
}
}  // namespace

TrainingDiverged::TrainingDiverged(std::size_t epoch, std::size_t batch, double parameter_norm)
    : Error(ErrorKind::Diverged, diverged_message(epoch, batch, parameter_norm)),
      epoch_(epoch),
      batch_(batch),
      parameter_norm_(parameter_norm) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace sensoropt
