/**
 * @file csv.hpp
 * @brief Minimal RFC-4180 reader/writer used by every file interface.
 *
 * Quoted fields with doubled-quote escapes are supported; embedded newlines
 * inside quotes are not (none of the exported schemas need them).
 */
#pragma once

#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace crisk::csv {

/// Splits one CSV record. Returns false on an unterminated quote.
bool split_record(std::string_view line, std::vector<std::string>& fields);

/// Line-oriented reader that tracks 1-based line numbers and validates the
/// header row on construction.
class Reader {
 public:
  /// Throws IoError if the file cannot be opened and ParseError if the
  /// header does not match `expected_header` exactly (after trimming).
  Reader(std::string path, std::initializer_list<std::string_view> expected_header);

  /// Reads the next non-blank record into `fields`. Returns false at EOF.
  /// Throws ParseError on a wrong field count or bad quoting.
  bool next(std::vector<std::string>& fields);

  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] const std::string& path() const noexcept { return path_; }

  /// Throws ParseError pointing at the current line.
  [[noreturn]] void fail(const std::string& message) const;

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_ = 0;
  std::size_t n_fields_ = 0;
  std::string buffer_;
};

/// Shortest round-trip decimal representation; identical bytes for
/// identical doubles on every run.
[[nodiscard]] std::string format_number(double value);

/// Quotes a field only when it contains a delimiter, quote or newline.
[[nodiscard]] std::string quote(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

[[nodiscard]] std::string_view trim(std::string_view s);

/// Strict decimal parse of the whole field (no trailing junk).
[[nodiscard]] bool parse_double(std::string_view text, double& out);

}  // namespace crisk::csv
