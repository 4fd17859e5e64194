#include "crisk/csv.hpp"

#include <charconv>
#include <cmath>

#include "crisk/error.hpp"

namespace crisk::csv {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool split_record(std::string_view line, std::vector<std::string>& fields) {
  fields.clear();
  std::string current;
  bool in_quotes = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && trim(current).empty()) {
      current.clear();
      in_quotes = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.emplace_back(was_quoted ? current : std::string(trim(current)));
      current.clear();
      was_quoted = false;
    } else if (!was_quoted || (c != ' ' && c != '\t')) {
      current.push_back(c);
    }
  }
  if (in_quotes) return false;
  fields.emplace_back(was_quoted ? current : std::string(trim(current)));
  return true;
}

Reader::Reader(std::string path, std::initializer_list<std::string_view> expected_header)
    : path_(std::move(path)), in_(path_), n_fields_(expected_header.size()) {
  if (!in_) throw IoError("cannot open '" + path_ + "'");
  std::vector<std::string> fields;
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (line_ == 1 && buffer_.rfind("\xEF\xBB\xBF", 0) == 0) buffer_.erase(0, 3);
    if (trim(buffer_).empty()) continue;
    if (!split_record(buffer_, fields)) fail("unterminated quote in header");
    bool ok = fields.size() == expected_header.size();
    std::size_t i = 0;
    for (auto it = expected_header.begin(); ok && it != expected_header.end(); ++it, ++i) {
      ok = trim(fields[i]) == *it;
    }
    if (!ok) {
      std::string want;
      for (auto h : expected_header) {
        if (!want.empty()) want += ',';
        want += h;
      }
      fail("expected header '" + want + "'");
    }
    return;
  }
  fail("missing header");
}

bool Reader::next(std::vector<std::string>& fields) {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (trim(buffer_).empty()) continue;
    if (!split_record(buffer_, fields)) fail("unterminated quote");
    if (fields.size() != n_fields_) {
      fail("expected " + std::to_string(n_fields_) + " fields, found " +
           std::to_string(fields.size()));
    }
    return true;
  }
  return false;
}

void Reader::fail(const std::string& message) const { throw ParseError(path_, line_, message); }

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << '\n';
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

}  // namespace crisk::csv
