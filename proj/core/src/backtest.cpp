#include "crisk/backtest.hpp"

#include <algorithm>
#include <map>

#include "crisk/error.hpp"

namespace crisk {
namespace {

using Eigen::VectorXd;

OptimizedPortfolio solve(Objective objective, const ReturnMatrix& returns, const VectorXd& caps,
                         SemivarianceMethod method, const SolverOptions& solver) {
  if (objective == Objective::kVariance) {
    const RiskModel model = estimate_risk_model(returns);
    OptimizedPortfolio out = min_variance(model, caps, solver);
    out.portfolio.symbols = returns.symbols;
    return out;
  }
  OptimizedPortfolio out = min_semivariance(returns, caps, method, solver);
  out.portfolio.symbols = returns.symbols;
  return out;
}

VectorXd caps_for(const Symbols& symbols, const Symbols& universe, const std::vector<double>& caps) {
  VectorXd out(static_cast<Eigen::Index>(symbols.size()));
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const auto it = std::find(universe.begin(), universe.end(), symbols[i]);
    out[static_cast<Eigen::Index>(i)] =
        it == universe.end() ? kDefaultCap : caps[static_cast<std::size_t>(it - universe.begin())];
  }
  return out;
}

ComparisonRow measure(const NamedPortfolio& p, const PriceTable& table, const SimConfig& config) {
  ComparisonRow row;
  row.portfolio_name = p.name;
  row.n_dates = table.n_dates();
  const SimReport hist = simulate_historical(p.weights, table, config);
  const SimReport gbm = simulate_gbm(p.weights, table, config);
  row.annual_volatility = hist.annual_volatility;
  row.annual_semideviation = hist.annual_semideviation;
  row.historical_failure_prob = hist.failure_probability;
  row.historical_std_error = hist.std_error;
  row.gbm_failure_prob = gbm.failure_probability;
  row.gbm_std_error = gbm.std_error;
  return row;
}

template <typename Fn>
ComparisonRow guarded(const NamedPortfolio& p, Fn fn) {
  try {
    if (static_cast<std::size_t>(p.weights.size()) != p.symbols.size()) {
      throw DomainError("portfolio " + p.name + " has mismatched symbols and weights");
    }
    if (p.symbols.empty()) throw EmptyPortfolioError("portfolio " + p.name + " holds no symbols");
    return fn();
  } catch (const Error& e) {
    ComparisonRow row;
    row.portfolio_name = p.name;
    row.error = e.what();
    row.error_kind = to_string(e.kind());
    return row;
  }
}

}  // namespace

const char* to_string(Objective objective) noexcept {
  return objective == Objective::kVariance ? "variance" : "semivariance";
}

std::optional<Objective> parse_objective(const std::string& text) {
  if (text == "variance") return Objective::kVariance;
  if (text == "semivariance") return Objective::kSemivariance;
  return std::nullopt;
}

void RollingSpec::validate() const {
  if (window_days < 2) throw DomainError("window_days must be >= 2");
  if (step_days < 1) throw DomainError("step_days must be >= 1");
  if (universe.empty()) throw EmptyUniverseError("rolling universe is empty");
  if (caps.size() != universe.size()) throw DomainError("caps must line up with the universe");
}

double RollingPoint::weight_of(const std::string& symbol) const {
  const auto it = std::find(symbols.begin(), symbols.end(), symbol);
  return it == symbols.end() ? 0.0 : weights[it - symbols.begin()];
}

std::vector<RollingPoint> rolling_optimal(const PricePanel& prices, const RollingSpec& spec) {
  spec.validate();
  const auto window = static_cast<std::size_t>(spec.window_days);
  const std::size_t n = prices.dates().size();
  if (n < window + 1) {
    throw InsufficientDataError("prices span " + std::to_string(n) + " dates; a " +
                                std::to_string(window) + "-day window needs " + std::to_string(window + 1));
  }

  std::vector<std::optional<std::size_t>> columns;
  for (const auto& s : spec.universe) columns.push_back(prices.symbol_index(s));

  std::vector<RollingPoint> out;
  for (std::size_t d = window; d < n; d += static_cast<std::size_t>(spec.step_days)) {
    const Date date = prices.dates()[d];
    if (spec.range && !spec.range->contains(date)) continue;
    RollingPoint point;
    point.date = date;
    const std::size_t first = d - window;

    std::vector<std::size_t> kept;
    for (std::size_t u = 0; u < spec.universe.size(); ++u) {
      bool full = columns[u].has_value();
      for (std::size_t r = first; full && r <= d; ++r) full = prices.has(r, *columns[u]);
      if (full) {
        kept.push_back(u);
      } else {
        point.excluded.push_back(spec.universe[u]);
      }
    }

    try {
      if (kept.empty()) {
        throw EmptyUniverseError("no symbol has a full " + std::to_string(window) + "-day history on " +
                                 format_date(date));
      }
      Eigen::MatrixXd block(static_cast<Eigen::Index>(window + 1), static_cast<Eigen::Index>(kept.size()));
      Symbols symbols;
      std::vector<double> caps;
      for (std::size_t k = 0; k < kept.size(); ++k) {
        symbols.push_back(spec.universe[kept[k]]);
        caps.push_back(spec.caps[kept[k]]);
        block.col(static_cast<Eigen::Index>(k)) =
            prices.prices().block(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(*columns[kept[k]]),
                                  static_cast<Eigen::Index>(window + 1), 1);
      }
      std::vector<Date> dates(prices.dates().begin() + static_cast<std::ptrdiff_t>(first),
                              prices.dates().begin() + static_cast<std::ptrdiff_t>(d + 1));
      const PriceTable table(std::move(dates), symbols, std::move(block));
      const OptimizedPortfolio opt =
          solve(spec.objective, log_returns(table), Eigen::Map<const VectorXd>(caps.data(), static_cast<Eigen::Index>(caps.size())),
                spec.semivariance_method, spec.solver);
      point.symbols = std::move(symbols);
      point.weights = opt.portfolio.weights;
      point.report = opt.report;
    } catch (const Error& e) {
      point.symbols.clear();
      point.weights.resize(0);
      point.error = e.what();
      point.error_kind = to_string(e.kind());
    }
    out.push_back(std::move(point));
  }
  return out;
}

std::vector<ComparisonRow> compare_portfolios(const std::vector<NamedPortfolio>& portfolios,
                                              const PricePanel& prices, const CompareOptions& options) {
  std::vector<ComparisonRow> rows;
  rows.reserve(portfolios.size());
  for (const auto& p : portfolios) {
    rows.push_back(guarded(p, [&] {
      AlignOptions align_opts;
      align_opts.range = options.range;
      align_opts.symbols = p.symbols;
      align_opts.min_coverage = options.min_coverage;
      return measure(p, align(prices, align_opts), options.sim);
    }));
  }
  return rows;
}

std::vector<ComparisonRow> compare_portfolios(const std::vector<NamedPortfolio>& portfolios,
                                              const PriceTable& prices, const SimConfig& config) {
  std::vector<ComparisonRow> rows;
  rows.reserve(portfolios.size());
  for (const auto& p : portfolios) {
    rows.push_back(guarded(p, [&] { return measure(p, prices.select(p.symbols), config); }));
  }
  return rows;
}

std::vector<NamedPortfolio> build_reference_portfolios(const PricePanel& prices, const ReferenceSetSpec& spec) {
  if (spec.caps.size() != spec.universe.size()) throw DomainError("caps must line up with the universe");
  if (spec.window_days < 2) throw DomainError("window_days must be >= 2");
  const auto end = prices.date_index(spec.as_of);
  if (!end) throw CoverageError("no prices on " + format_date(spec.as_of));
  const auto window = static_cast<std::size_t>(spec.window_days);
  if (*end < window) {
    throw InsufficientDataError("estimation window before " + format_date(spec.as_of) + " is too short");
  }
  const DateRange range{prices.dates()[*end - window], spec.as_of};

  auto optimize = [&](const std::string& name, const Symbols& symbols, Objective objective) {
    AlignOptions align_opts;
    align_opts.range = range;
    align_opts.symbols = symbols;
    align_opts.min_coverage = 1.0;
    const PriceTable table = align(prices, align_opts);
    const VectorXd caps = caps_for(symbols, spec.universe, spec.caps);
    const OptimizedPortfolio opt = solve(objective, log_returns(table), caps, spec.semivariance_method, spec.solver);
    return NamedPortfolio{name, symbols, opt.portfolio.weights};
  };

  std::vector<NamedPortfolio> out;
  out.push_back(NamedPortfolio{"DAI", spec.dai.symbols, spec.dai.weights});
  out.push_back(optimize("A-Vol", spec.universe, Objective::kVariance));
  out.push_back(optimize("A-Sem", spec.universe, Objective::kSemivariance));
  out.push_back(optimize("DAI-Vol", spec.dai.symbols, Objective::kVariance));
  out.push_back(optimize("DAI-Sem", spec.dai.symbols, Objective::kSemivariance));
  return out;
}

OrderingCheck check_reference_ordering(const std::vector<ComparisonRow>& rows) {
  OrderingCheck check;
  std::map<std::string, const ComparisonRow*> by_name;
  for (const auto& r : rows) by_name[r.portfolio_name] = &r;
  for (const char* name : {"DAI", "A-Vol", "A-Sem", "DAI-Vol", "DAI-Sem"}) {
    const auto it = by_name.find(name);
    if (it == by_name.end() || !it->second->ok()) {
      check.violations.push_back(std::string("row ") + name + " missing or failed");
    }
  }
  if (!check.holds()) return check;

  auto expect = [&](const char* a, const char* b, bool strict) {
    const ComparisonRow& x = *by_name[a];
    const ComparisonRow& y = *by_name[b];
    const bool vol = strict ? x.annual_volatility < y.annual_volatility : x.annual_volatility <= y.annual_volatility;
    const bool sem = strict ? x.annual_semideviation < y.annual_semideviation
                            : x.annual_semideviation <= y.annual_semideviation;
    const std::string rel = strict ? " < " : " <= ";
    if (!vol) check.violations.push_back(std::string("volatility ") + a + rel + b);
    if (!sem) check.violations.push_back(std::string("semideviation ") + a + rel + b);
  };
  for (const char* name : {"A-Vol", "A-Sem", "DAI-Vol", "DAI-Sem"}) expect(name, "DAI", true);
  expect("A-Vol", "DAI-Vol", false);
  expect("A-Sem", "DAI-Sem", false);
  return check;
}

}  // namespace crisk
