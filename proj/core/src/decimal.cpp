#include "crisk/decimal.hpp"

#include <algorithm>

namespace crisk {

std::optional<TokenAmount> TokenAmount::parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  if (text.front() == '-' || text.front() == '+') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() && frac.empty()) return std::nullopt;
  if (frac.size() > static_cast<std::size_t>(kDecimals)) return std::nullopt;
  if (dot != std::string_view::npos && frac.empty() && whole.empty()) return std::nullopt;

  // 10^20 whole tokens is far above any real supply and keeps the product
  // with kScale inside __int128.
  if (whole.size() > 20) return std::nullopt;
  Raw value = 0;
  for (char c : whole) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  value *= kScale;
  Raw frac_units = 0;
  for (char c : frac) {
    if (c < '0' || c > '9') return std::nullopt;
    frac_units = frac_units * 10 + (c - '0');
  }
  for (std::size_t i = frac.size(); i < static_cast<std::size_t>(kDecimals); ++i) frac_units *= 10;
  value += frac_units;
  return from_raw(negative ? -value : value);
}

double TokenAmount::to_double() const noexcept {
  // Split so the whole part converts exactly for realistic balances.
  const Raw whole = units_ / kScale;
  const Raw frac = units_ % kScale;
  return static_cast<double>(whole) + static_cast<double>(frac) / 1e18;
}

std::string TokenAmount::to_string() const {
  Raw v = units_;
  const bool negative = v < 0;
  if (negative) v = -v;
  Raw whole = v / kScale;
  Raw frac = v % kScale;

  std::string digits;
  do {
    digits.push_back(static_cast<char>('0' + static_cast<int>(whole % 10)));
    whole /= 10;
  } while (whole != 0);
  std::reverse(digits.begin(), digits.end());

  if (frac != 0) {
    std::string f(kDecimals, '0');
    for (int i = kDecimals - 1; i >= 0; --i) {
      f[static_cast<std::size_t>(i)] = static_cast<char>('0' + static_cast<int>(frac % 10));
      frac /= 10;
    }
    while (!f.empty() && f.back() == '0') f.pop_back();
    digits += '.';
    digits += f;
  }
  return negative ? "-" + digits : digits;
}

}  // namespace crisk
