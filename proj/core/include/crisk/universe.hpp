/**
 * @file universe.hpp
 * @brief Token universe configuration.
 *
 * Plain-text `key = value` file, `#` starts a comment:
 *
 *     symbols = BTC, ETH, WBTC, USDC
 *     default_cap = 0.2
 *     BTC.launch_date = 2009-01-03
 *     USDC.stablecoin = true
 *     WBTC.btc_variant = true
 *     ETH.rank = 2
 *
 * Per-symbol keys: `cap`, `rank`, `launch_date`, `stablecoin`,
 * `btc_variant`, `eth_variant`. A symbol's rank defaults to its 1-based
 * position in `symbols`.
 */
#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "crisk/dates.hpp"

namespace crisk {

inline constexpr double kDefaultCap = 0.2;

struct UniverseEntry {
  std::string symbol;
  int rank = 0;
  double cap = kDefaultCap;
  std::optional<Date> launch_date;
  bool stablecoin = false;
  /// Grouped with WBTC in the BTC collateral category.
  bool btc_variant = false;
  /// Grouped with ETH in the ETH collateral category.
  bool eth_variant = false;
};

struct UniverseConfig {
  std::vector<UniverseEntry> entries;

  [[nodiscard]] const UniverseEntry* find(const std::string& symbol) const;
  [[nodiscard]] std::vector<std::string> symbols() const;
  /// Caps for `symbols`; unknown symbols get kDefaultCap.
  [[nodiscard]] std::vector<double> caps_for(const std::vector<std::string>& symbols) const;
};

[[nodiscard]] UniverseConfig parse_universe(std::istream& in, const std::string& source_name);
[[nodiscard]] UniverseConfig load_universe(const std::string& path);

}  // namespace crisk
