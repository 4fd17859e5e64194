/**
 * @file error.hpp
 * @brief Exception hierarchy shared by every crisk module.
 *
 * All library failures derive from crisk::Error and carry an ErrorKind so
 * callers (the CLI in particular) can map them to structured messages
 * without string matching.
 */
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace crisk {

enum class ErrorKind {
  kParse,             ///< malformed input row
  kCoverage,          ///< a symbol or date lacks required data
  kDomain,            ///< value outside its mathematical domain
  kInsufficientData,  ///< not enough observations for the operation
  kInfeasible,        ///< constraint set is empty
  kUndefinedRatio,    ///< ratio with zero denominator
  kEmptyPortfolio,    ///< no collateral to form a portfolio from
  kEmptyUniverse,     ///< no tokens survive coverage filtering
  kIo,                ///< file could not be opened or written
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure pinned to a file and 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& message);

  [[nodiscard]] const std::string& file() const noexcept { return file_; }
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class CoverageError : public Error {
 public:
  explicit CoverageError(const std::string& message)
      : Error(ErrorKind::kCoverage, message) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& message)
      : Error(ErrorKind::kDomain, message) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& message)
      : Error(ErrorKind::kInsufficientData, message) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& message)
      : Error(ErrorKind::kInfeasible, message) {}
};

class UndefinedRatioError : public Error {
 public:
  explicit UndefinedRatioError(const std::string& message)
      : Error(ErrorKind::kUndefinedRatio, message) {}
};

class EmptyPortfolioError : public Error {
 public:
  explicit EmptyPortfolioError(const std::string& message)
      : Error(ErrorKind::kEmptyPortfolio, message) {}
};

class EmptyUniverseError : public Error {
 public:
  explicit EmptyUniverseError(const std::string& message)
      : Error(ErrorKind::kEmptyUniverse, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::kIo, message) {}
};

}  // namespace crisk
