#include "crisk/dates.hpp"

#include <cstdio>

namespace crisk {
namespace {

bool parse_fixed_int(std::string_view text, std::size_t pos, std::size_t width, int& out) {
  if (pos + width > text.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + width; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

std::optional<Date> parse_date_prefix(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!parse_fixed_int(text, 0, 4, y) || !parse_fixed_int(text, 5, 2, m) ||
      !parse_fixed_int(text, 8, 2, d)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10) return std::nullopt;
  return parse_date_prefix(text);
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  const auto day = parse_date_prefix(text);
  if (!day || text.size() < 19 || (text[10] != 'T' && text[10] != ' ')) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!parse_fixed_int(text, 11, 2, hh) || text[13] != ':' ||
      !parse_fixed_int(text, 14, 2, mm) || text[16] != ':' ||
      !parse_fixed_int(text, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  if (pos >= text.size()) return std::nullopt;  // offset is mandatory

  int offset_minutes = 0;
  if (text[pos] == 'Z' || text[pos] == 'z') {
    if (pos + 1 != text.size()) return std::nullopt;
  } else if (text[pos] == '+' || text[pos] == '-') {
    const int sign = text[pos] == '-' ? -1 : 1;
    int oh = 0, om = 0;
    std::string_view rest = text.substr(pos + 1);
    if (rest.size() == 5 && rest[2] == ':') {
      if (!parse_fixed_int(rest, 0, 2, oh) || !parse_fixed_int(rest, 3, 2, om)) return std::nullopt;
    } else if (rest.size() == 4) {
      if (!parse_fixed_int(rest, 0, 2, oh) || !parse_fixed_int(rest, 2, 2, om)) return std::nullopt;
    } else if (rest.size() == 2) {
      if (!parse_fixed_int(rest, 0, 2, oh)) return std::nullopt;
    } else {
      return std::nullopt;
    }
    offset_minutes = sign * (oh * 60 + om);
  } else {
    return std::nullopt;
  }

  using namespace std::chrono;
  const Timestamp local = *day + hours{hh} + minutes{mm} + seconds{ss};
  return local - minutes{offset_minutes};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  const int y = static_cast<int>(ymd.year());
  const unsigned m = static_cast<unsigned>(ymd.month());
  const unsigned dd = static_cast<unsigned>(ymd.day());
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, dd);
  return buf;
}

Date minus_years(Date d, int years) {
  using namespace std::chrono;
  year_month_day ymd{d};
  year_month_day shifted = ymd - std::chrono::years{years};
  if (!shifted.ok()) shifted = shifted.year() / shifted.month() / last;
  return Date{shifted};
}

}  // namespace crisk
