#include "crisk/error.hpp"

namespace crisk {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kParse: return "parse_error";
    case ErrorKind::kCoverage: return "coverage_error";
    case ErrorKind::kDomain: return "domain_error";
    case ErrorKind::kInsufficientData: return "insufficient_data";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kUndefinedRatio: return "undefined_ratio";
    case ErrorKind::kEmptyPortfolio: return "empty_portfolio";
    case ErrorKind::kEmptyUniverse: return "empty_universe";
    case ErrorKind::kIo: return "io_error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

ParseError::ParseError(std::string file, std::size_t line, const std::string& message)
    : Error(ErrorKind::kParse, file + ":" + std::to_string(line) + ": " + message),
      file_(std::move(file)),
      line_(line) {}

}  // namespace crisk
