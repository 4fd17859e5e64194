/**
 * @file dss_ledger.hpp
 * @brief Replays decoded vault Join events and oracle (Pip) updates into a
 *        daily collateral series and the historical crypto portfolio.
 *
 * Inputs are pre-decoded CSV exports:
 *
 *   events: block_number,timestamp,vault_type,token_symbol,delta_tokens
 *   pips:   block_number,timestamp,vault_type,value_usd
 *
 * Daily snapshot convention: the balance on date d includes every event
 * timestamped before 00:00 UTC of d+1, valued at d's close (ERC-20) or at
 * the latest Pip value published by then (LP, RWA). PSM balances are
 * valued 1:1 in USD.
 */
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crisk/dates.hpp"
#include "crisk/decimal.hpp"
#include "crisk/market_data.hpp"
#include "crisk/universe.hpp"

namespace crisk {

enum class VaultClass { kErc20, kLp, kPsm, kRwa };

/// Collateral categories, in output-column order.
enum class CollateralCategory { kEth, kBtc, kMinor, kLp, kPsm, kRwa };
inline constexpr std::size_t kCategoryCount = 6;
inline constexpr std::array<const char*, kCategoryCount> kCategoryNames = {"eth", "btc", "minor",
                                                                           "lp",  "psm", "rwa"};

/// Vault-type naming: `PSM-*` peg stability modules, `RWA*` real-world
/// assets, `UNIV2*`, `GUNIV3*`, `CRVV1*` liquidity-pool tokens, everything
/// else a plain ERC-20 vault.
[[nodiscard]] VaultClass classify_vault(const std::string& vault_type);

/// Vault types known to have existed in the DSS.
class VaultRegistry {
 public:
  VaultRegistry() = default;
  explicit VaultRegistry(std::set<std::string> known) : known_(std::move(known)) {}

  [[nodiscard]] static const VaultRegistry& dss();
  [[nodiscard]] bool contains(const std::string& vault_type) const { return known_.count(vault_type) != 0; }
  [[nodiscard]] std::size_t size() const noexcept { return known_.size(); }

 private:
  std::set<std::string> known_;
};

struct VaultEvent {
  std::uint64_t block_number = 0;
  Timestamp timestamp{};
  std::string vault_type;
  std::string token_symbol;
  TokenAmount delta_tokens;
  /// 1-based line in the source file.
  std::size_t source_line = 0;
};

struct EventLog {
  /// Sorted by block number; file order within a block.
  std::vector<VaultEvent> events;
  /// Vault types missing from the registry (sorted, retained in events).
  std::vector<std::string> unknown_vault_types;
  /// Lines dropped because delta_tokens was zero.
  std::vector<std::size_t> dropped_zero_lines;
};

/// Parses an events CSV. Malformed rows raise ParseError; rows with a zero
/// delta are dropped and reported; a timestamp that goes backwards within
/// one vault type after block ordering raises ParseError.
[[nodiscard]] EventLog load_events(const std::string& path,
                                   const VaultRegistry& registry = VaultRegistry::dss());

struct PipUpdate {
  std::uint64_t block_number = 0;
  Timestamp timestamp{};
  std::string vault_type;
  double value_usd = 0.0;
};

/// Parses a pip-updates CSV, sorted by block number (file order within a
/// block). Values must be finite and non-negative.
[[nodiscard]] std::vector<PipUpdate> load_pip_updates(const std::string& path);

struct LedgerOptions {
  /// LP collateral is folded into "minor" when its share of the total never
  /// reaches this fraction. Zero or less disables folding.
  double lp_visibility_threshold = 0.005;
  /// Last snapshot date; defaults to the day of the last event.
  std::optional<Date> end_date;
  std::set<std::string> eth_symbols = {"ETH", "WETH"};
  std::set<std::string> btc_symbols = {"WBTC"};

  /// Adds the universe's `eth_variant` / `btc_variant` symbols.
  void add_variants(const UniverseConfig& universe);
};

struct CollateralSeries {
  std::vector<Date> dates;
  /// Vault types in lexicographic order.
  std::vector<std::string> vault_types;
  std::vector<std::string> vault_tokens;
  std::vector<VaultClass> vault_classes;
  /// balances[d][v]: exact token balance of vault type v at the close of d.
  std::vector<std::vector<TokenAmount>> balances;
  /// dates x vault types, USD.
  Eigen::MatrixXd vault_usd;
  /// dates x kCategoryCount, USD.
  Eigen::MatrixXd category_usd;
  Eigen::VectorXd total_usd;
  bool lp_folded = false;

  [[nodiscard]] std::optional<std::size_t> date_index(Date d) const;
};

/// Replays sorted events into daily balances and USD values.
///
/// Throws DomainError naming the offending event when a running balance
/// drops below -1e-9 tokens, and CoverageError naming the symbol (or vault
/// type) and date when a non-zero balance has no price.
[[nodiscard]] CollateralSeries build_collateral_series(const std::vector<VaultEvent>& events,
                                                       const PricePanel& prices,
                                                       const std::vector<PipUpdate>& pip_updates,
                                                       const LedgerOptions& options = {});

struct HistoricalPortfolio {
  DateRange as_of;
  Symbols symbols;
  Eigen::VectorXd weights;
};

/// Averages each ERC-20 token's share of the ERC-20 USD total over the
/// days in `range` that hold any ERC-20 collateral (each day weighted
/// equally), keeps the `top_k` largest and renormalizes.
[[nodiscard]] HistoricalPortfolio historical_portfolio(const CollateralSeries& series,
                                                       const DateRange& range, int top_k);

/// `date,eth,btc,minor,lp,psm,rwa,total`, one row per date.
void write_category_csv(std::ostream& out, const CollateralSeries& series);
/// `date,vault_type,token_symbol,balance_tokens,value_usd`, long format.
void write_vault_csv(std::ostream& out, const CollateralSeries& series);

}  // namespace crisk
