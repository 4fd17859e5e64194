#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace crisk {

/// Calendar day at UTC midnight.
using Date = std::chrono::sys_days;
/// UTC instant with one-second resolution.
using Timestamp = std::chrono::sys_seconds;

/// Inclusive [start, end] range of calendar days.
struct DateRange {
  Date start;
  Date end;

  [[nodiscard]] bool contains(Date d) const noexcept { return start <= d && d <= end; }
  friend bool operator==(const DateRange&, const DateRange&) = default;
};

/// Parses `YYYY-MM-DD`. Returns nullopt for anything else, including
/// calendar-invalid days such as 2023-02-29.
[[nodiscard]] std::optional<Date> parse_date(std::string_view text);

/// Parses ISO-8601 date-times with an explicit offset, e.g.
/// `2021-03-09T14:02:11Z`, `2021-03-09T14:02:11+00:00` or
/// `2021-03-09 22:02:11+08:00`. Fractional seconds are truncated.
[[nodiscard]] std::optional<Timestamp> parse_timestamp(std::string_view text);

[[nodiscard]] std::string format_date(Date d);

[[nodiscard]] inline Date day_of(Timestamp ts) {
  return std::chrono::floor<std::chrono::days>(ts);
}

/// `d` shifted back by whole calendar years, clamping Feb 29 to Feb 28.
[[nodiscard]] Date minus_years(Date d, int years);

}  // namespace crisk
