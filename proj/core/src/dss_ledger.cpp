#include "crisk/dss_ledger.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "crisk/csv.hpp"
#include "crisk/error.hpp"

namespace crisk {
namespace {

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

bool parse_block(std::string_view text, std::uint64_t& out) {
  if (text.empty()) return false;
  std::uint64_t v = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  out = v;
  return true;
}

/// -1e-9 tokens in 18-decimal units.
constexpr TokenAmount::Raw kNegativeSlack = 1'000'000'000;

}  // namespace

VaultClass classify_vault(const std::string& vault_type) {
  if (starts_with(vault_type, "PSM-")) return VaultClass::kPsm;
  if (starts_with(vault_type, "RWA")) return VaultClass::kRwa;
  if (starts_with(vault_type, "UNIV2") || starts_with(vault_type, "GUNIV3") ||
      starts_with(vault_type, "CRVV1")) {
    return VaultClass::kLp;
  }
  return VaultClass::kErc20;
}

const VaultRegistry& VaultRegistry::dss() {
  static const VaultRegistry registry(std::set<std::string>{
      "AAVE-A",          "BAL-A",           "BAT-A",           "COMP-A",
      "CRVV1ETHSTETH-A", "ETH-A",           "ETH-B",           "ETH-C",
      "GUNIV3DAIUSDC1-A", "GUNIV3DAIUSDC2-A", "GUSD-A",        "KNC-A",
      "LINK-A",          "LRC-A",           "MANA-A",          "MATIC-A",
      "PAXUSD-A",        "PSM-GUSD-A",      "PSM-PAX-A",       "PSM-USDC-A",
      "RENBTC-A",        "RETH-A",          "RWA001-A",        "RWA002-A",
      "RWA003-A",        "RWA004-A",        "RWA005-A",        "RWA006-A",
      "RWA007-A",        "RWA008-A",        "RWA009-A",        "RWA010-A",
      "RWA011-A",        "RWA012-A",        "RWA013-A",        "RWA014-A",
      "RWA015-A",        "TUSD-A",          "UNI-A",           "UNIV2AAVEETH-A",
      "UNIV2DAIETH-A",   "UNIV2DAIUSDC-A",  "UNIV2DAIUSDT-A",  "UNIV2ETHUSDT-A",
      "UNIV2LINKETH-A",  "UNIV2UNIETH-A",   "UNIV2USDCETH-A",  "UNIV2WBTCDAI-A",
      "UNIV2WBTCETH-A",  "USDC-A",          "USDC-B",          "USDT-A",
      "WBTC-A",          "WBTC-B",          "WBTC-C",          "WSTETH-A",
      "WSTETH-B",        "YFI-A",           "ZRX-A",
  });
  return registry;
}

EventLog load_events(const std::string& path, const VaultRegistry& registry) {
  csv::Reader reader(path, {"block_number", "timestamp", "vault_type", "token_symbol", "delta_tokens"});
  EventLog log;
  std::set<std::string> unknown;
  std::vector<std::string> f;
  while (reader.next(f)) {
    VaultEvent e;
    if (!parse_block(f[0], e.block_number)) reader.fail("invalid block_number '" + f[0] + "'");
    const auto ts = parse_timestamp(f[1]);
    if (!ts) reader.fail("invalid timestamp '" + f[1] + "' (ISO-8601 with UTC offset expected)");
    e.timestamp = *ts;
    if (f[2].empty()) reader.fail("empty vault_type");
    if (f[3].empty()) reader.fail("empty token_symbol");
    e.vault_type = f[2];
    e.token_symbol = f[3];
    const auto delta = TokenAmount::parse(f[4]);
    if (!delta) reader.fail("invalid delta_tokens '" + f[4] + "'");
    e.delta_tokens = *delta;
    e.source_line = reader.line();
    if (e.delta_tokens.is_zero()) {
      log.dropped_zero_lines.push_back(e.source_line);
      continue;
    }
    if (!registry.contains(e.vault_type)) unknown.insert(e.vault_type);
    log.events.push_back(std::move(e));
  }
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const VaultEvent& a, const VaultEvent& b) { return a.block_number < b.block_number; });

  std::map<std::string, const VaultEvent*> last;
  for (const auto& e : log.events) {
    auto [it, fresh] = last.try_emplace(e.vault_type, &e);
    if (!fresh) {
      if (e.timestamp < it->second->timestamp) {
        throw ParseError(path, e.source_line,
                         "timestamp goes backwards for vault type " + e.vault_type +
                             " (block order vs time order disagree)");
      }
      if (it->second->token_symbol != e.token_symbol) {
        throw ParseError(path, e.source_line,
                         "vault type " + e.vault_type + " changes token from " +
                             it->second->token_symbol + " to " + e.token_symbol);
      }
      it->second = &e;
    }
  }
  log.unknown_vault_types.assign(unknown.begin(), unknown.end());
  return log;
}

std::vector<PipUpdate> load_pip_updates(const std::string& path) {
  csv::Reader reader(path, {"block_number", "timestamp", "vault_type", "value_usd"});
  std::vector<PipUpdate> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    PipUpdate u;
    if (!parse_block(f[0], u.block_number)) reader.fail("invalid block_number '" + f[0] + "'");
    const auto ts = parse_timestamp(f[1]);
    if (!ts) reader.fail("invalid timestamp '" + f[1] + "'");
    u.timestamp = *ts;
    if (f[2].empty()) reader.fail("empty vault_type");
    u.vault_type = f[2];
    if (!csv::parse_double(f[3], u.value_usd) || !std::isfinite(u.value_usd) || u.value_usd < 0.0) {
      reader.fail("invalid value_usd '" + f[3] + "'");
    }
    out.push_back(std::move(u));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PipUpdate& a, const PipUpdate& b) { return a.block_number < b.block_number; });
  return out;
}

void LedgerOptions::add_variants(const UniverseConfig& universe) {
  for (const auto& e : universe.entries) {
    if (e.btc_variant) btc_symbols.insert(e.symbol);
    if (e.eth_variant) eth_symbols.insert(e.symbol);
  }
}

std::optional<std::size_t> CollateralSeries::date_index(Date d) const {
  const auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || *it != d) return std::nullopt;
  return static_cast<std::size_t>(it - dates.begin());
}

CollateralSeries build_collateral_series(const std::vector<VaultEvent>& events, const PricePanel& prices,
                                         const std::vector<PipUpdate>& pip_updates,
                                         const LedgerOptions& options) {
  CollateralSeries s;
  if (events.empty()) {
    s.vault_usd.resize(0, 0);
    s.category_usd.resize(0, static_cast<Eigen::Index>(kCategoryCount));
    s.total_usd.resize(0);
    return s;
  }
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].block_number < events[i - 1].block_number) {
      throw DomainError("events must be sorted by block number");
    }
  }

  std::map<std::string, std::size_t> vault_index;
  for (const auto& e : events) vault_index.emplace(e.vault_type, 0);
  for (auto& [name, idx] : vault_index) {
    idx = s.vault_types.size();
    s.vault_types.push_back(name);
    s.vault_classes.push_back(classify_vault(name));
  }
  s.vault_tokens.resize(s.vault_types.size());
  for (const auto& e : events) s.vault_tokens[vault_index[e.vault_type]] = e.token_symbol;

  Date first = day_of(events.front().timestamp);
  Date last = first;
  for (const auto& e : events) {
    first = std::min(first, day_of(e.timestamp));
    last = std::max(last, day_of(e.timestamp));
  }
  if (options.end_date) {
    if (*options.end_date < first) throw DomainError("end date precedes the first event");
    last = *options.end_date;
  }
  for (Date d = first; d <= last; d += std::chrono::days{1}) s.dates.push_back(d);

  const std::size_t n_days = s.dates.size();
  const std::size_t n_vaults = s.vault_types.size();
  s.balances.assign(n_days, std::vector<TokenAmount>(n_vaults));

  // Replay in block order; snapshot each day's closing balances.
  std::vector<TokenAmount> running(n_vaults);
  std::size_t next = 0;
  for (std::size_t d = 0; d < n_days; ++d) {
    while (next < events.size() && day_of(events[next].timestamp) <= s.dates[d]) {
      const auto& e = events[next];
      const std::size_t v = vault_index[e.vault_type];
      running[v] += e.delta_tokens;
      if (running[v].raw() < -kNegativeSlack) {
        throw DomainError("balance of " + e.vault_type + " goes negative (" + running[v].to_string() +
                          " tokens) at block " + std::to_string(e.block_number) + ", line " +
                          std::to_string(e.source_line));
      }
      ++next;
    }
    s.balances[d] = running;
  }

  std::map<std::string, std::vector<const PipUpdate*>> pips;
  for (const auto& u : pip_updates) pips[u.vault_type].push_back(&u);

  s.vault_usd = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_days), static_cast<Eigen::Index>(n_vaults));
  for (std::size_t v = 0; v < n_vaults; ++v) {
    const VaultClass cls = s.vault_classes[v];
    const auto price_col = prices.symbol_index(s.vault_tokens[v]);
    const auto pip_it = pips.find(s.vault_types[v]);
    std::size_t pip_pos = 0;
    double pip_value = 0.0;
    bool have_pip = false;

    for (std::size_t d = 0; d < n_days; ++d) {
      if (pip_it != pips.end()) {
        const auto& stream = pip_it->second;
        while (pip_pos < stream.size() && day_of(stream[pip_pos]->timestamp) <= s.dates[d]) {
          pip_value = stream[pip_pos]->value_usd;
          have_pip = true;
          ++pip_pos;
        }
      }
      const TokenAmount bal = s.balances[d][v];
      if (bal.is_zero()) continue;
      const double tokens = bal.to_double();
      double usd = 0.0;
      switch (cls) {
        case VaultClass::kPsm:
          usd = tokens;
          break;
        case VaultClass::kLp:
        case VaultClass::kRwa:
          if (!have_pip) {
            throw CoverageError("no Pip value for " + s.vault_types[v] + " on " + format_date(s.dates[d]));
          }
          usd = tokens * pip_value;
          break;
        case VaultClass::kErc20: {
          const auto row = prices.date_index(s.dates[d]);
          if (!price_col || !row || !prices.has(*row, *price_col)) {
            throw CoverageError("no price for " + s.vault_tokens[v] + " on " + format_date(s.dates[d]));
          }
          usd = tokens * prices.prices()(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(*price_col));
          break;
        }
      }
      s.vault_usd(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(v)) = usd;
    }
  }

  auto category_of = [&](std::size_t v) {
    switch (s.vault_classes[v]) {
      case VaultClass::kLp: return CollateralCategory::kLp;
      case VaultClass::kPsm: return CollateralCategory::kPsm;
      case VaultClass::kRwa: return CollateralCategory::kRwa;
      case VaultClass::kErc20: break;
    }
    if (options.eth_symbols.count(s.vault_tokens[v])) return CollateralCategory::kEth;
    if (options.btc_symbols.count(s.vault_tokens[v])) return CollateralCategory::kBtc;
    return CollateralCategory::kMinor;
  };

  s.category_usd = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_days), static_cast<Eigen::Index>(kCategoryCount));
  for (std::size_t v = 0; v < n_vaults; ++v) {
    s.category_usd.col(static_cast<Eigen::Index>(category_of(v))) += s.vault_usd.col(static_cast<Eigen::Index>(v));
  }
  s.total_usd = s.vault_usd.rowwise().sum();

  if (options.lp_visibility_threshold > 0.0) {
    const auto lp = static_cast<Eigen::Index>(CollateralCategory::kLp);
    double peak = 0.0;
    for (Eigen::Index d = 0; d < s.total_usd.size(); ++d) {
      if (s.total_usd[d] > 0.0) peak = std::max(peak, s.category_usd(d, lp) / s.total_usd[d]);
    }
    if (peak < options.lp_visibility_threshold) {
      s.category_usd.col(static_cast<Eigen::Index>(CollateralCategory::kMinor)) += s.category_usd.col(lp);
      s.category_usd.col(lp).setZero();
      s.lp_folded = true;
    }
  }
  return s;
}

HistoricalPortfolio historical_portfolio(const CollateralSeries& series, const DateRange& range, int top_k) {
  if (top_k < 1) throw DomainError("top_k must be >= 1");
  if (series.dates.empty() || range.start < series.dates.front() || range.end > series.dates.back() ||
      range.end < range.start) {
    throw DomainError("date range lies outside the collateral series");
  }

  std::map<std::string, double> share_sum;
  std::size_t days = 0;
  for (std::size_t d = 0; d < series.dates.size(); ++d) {
    if (!range.contains(series.dates[d])) continue;
    std::map<std::string, double> usd;
    double total = 0.0;
    for (std::size_t v = 0; v < series.vault_types.size(); ++v) {
      if (series.vault_classes[v] != VaultClass::kErc20) continue;
      const double value = series.vault_usd(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(v));
      if (value <= 0.0) continue;
      usd[series.vault_tokens[v]] += value;
      total += value;
    }
    if (total <= 0.0) continue;
    ++days;
    for (const auto& [sym, value] : usd) share_sum[sym] += value / total;
  }
  if (days == 0) {
    throw EmptyPortfolioError("no ERC-20 collateral between " + format_date(range.start) + " and " +
                              format_date(range.end));
  }

  std::vector<std::pair<std::string, double>> ranked(share_sum.begin(), share_sum.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > static_cast<std::size_t>(top_k)) ranked.resize(static_cast<std::size_t>(top_k));

  HistoricalPortfolio out;
  out.as_of = range;
  double kept = 0.0;
  for (const auto& [sym, sum] : ranked) kept += sum;
  out.weights.resize(static_cast<Eigen::Index>(ranked.size()));
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    out.symbols.push_back(ranked[i].first);
    out.weights[static_cast<Eigen::Index>(i)] = ranked[i].second / kept;
  }
  return out;
}

void write_category_csv(std::ostream& out, const CollateralSeries& series) {
  std::vector<std::string> row = {"date"};
  for (const char* name : kCategoryNames) row.emplace_back(name);
  row.emplace_back("total");
  csv::write_row(out, row);
  for (std::size_t d = 0; d < series.dates.size(); ++d) {
    row.assign(1, format_date(series.dates[d]));
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      row.push_back(csv::format_number(
          series.category_usd(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(c))));
    }
    row.push_back(csv::format_number(series.total_usd[static_cast<Eigen::Index>(d)]));
    csv::write_row(out, row);
  }
}

void write_vault_csv(std::ostream& out, const CollateralSeries& series) {
  csv::write_row(out, {"date", "vault_type", "token_symbol", "balance_tokens", "value_usd"});
  for (std::size_t d = 0; d < series.dates.size(); ++d) {
    for (std::size_t v = 0; v < series.vault_types.size(); ++v) {
      csv::write_row(out, {format_date(series.dates[d]), series.vault_types[v], series.vault_tokens[v],
                           series.balances[d][v].to_string(),
                           csv::format_number(series.vault_usd(static_cast<Eigen::Index>(d),
                                                               static_cast<Eigen::Index>(v)))});
    }
  }
}

}  // namespace crisk
