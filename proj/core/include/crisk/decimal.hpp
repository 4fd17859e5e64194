#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace crisk {

/// Signed token quantity with 18 fractional digits (one ERC-20 "wei" unit
/// of resolution). Arithmetic is exact; conversion to double happens only
/// at valuation time.
class TokenAmount {
 public:
  __extension__ using Raw = __int128;
  static constexpr int kDecimals = 18;
  static constexpr Raw kScale = static_cast<Raw>(1'000'000'000'000'000'000LL);

  constexpr TokenAmount() = default;

  [[nodiscard]] static constexpr TokenAmount from_raw(Raw units) {
    TokenAmount t;
    t.units_ = units;
    return t;
  }
  [[nodiscard]] static constexpr TokenAmount from_integer(std::int64_t whole) {
    return from_raw(static_cast<Raw>(whole) * kScale);
  }

  /// Accepts `[-+]digits[.digits]` with at most 18 fractional digits.
  [[nodiscard]] static std::optional<TokenAmount> parse(std::string_view text);

  [[nodiscard]] constexpr Raw raw() const noexcept { return units_; }
  [[nodiscard]] constexpr bool is_zero() const noexcept { return units_ == 0; }
  [[nodiscard]] double to_double() const noexcept;
  [[nodiscard]] std::string to_string() const;

  constexpr TokenAmount& operator+=(TokenAmount o) noexcept {
    units_ += o.units_;
    return *this;
  }
  friend constexpr TokenAmount operator+(TokenAmount a, TokenAmount b) noexcept { return a += b; }
  friend constexpr TokenAmount operator-(TokenAmount a) noexcept { return from_raw(-a.units_); }
  friend constexpr auto operator<=>(TokenAmount, TokenAmount) = default;

 private:
  Raw units_ = 0;
};

}  // namespace crisk
