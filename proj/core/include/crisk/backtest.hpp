/**
 * @file backtest.hpp
 * @brief Rolling-window optimal portfolios and side-by-side comparison of
 *        named portfolios under the risk metrics and both simulators.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crisk/market_data.hpp"
#include "crisk/portfolio_opt.hpp"
#include "crisk/risk_sim.hpp"

namespace crisk {

enum class Objective { kVariance, kSemivariance };

[[nodiscard]] const char* to_string(Objective objective) noexcept;
[[nodiscard]] std::optional<Objective> parse_objective(const std::string& text);

struct RollingSpec {
  /// Returns per estimation window.
  int window_days = 200;
  int step_days = 1;
  Objective objective = Objective::kSemivariance;
  /// Candidate symbols, in output-column order.
  Symbols universe;
  /// Per-symbol caps aligned with `universe`.
  std::vector<double> caps;
  /// Evaluation dates are restricted to this range when set.
  std::optional<DateRange> range;
  SemivarianceMethod semivariance_method = SemivarianceMethod::kScenario;
  SolverOptions solver;

  /// Throws DomainError unless window_days >= 2, step_days >= 1, the
  /// universe is non-empty and caps line up with it.
  void validate() const;
};

struct RollingPoint {
  Date date{};
  /// Symbols with a full price history over the window, with their weights.
  Symbols symbols;
  Eigen::VectorXd weights;
  /// Universe members dropped on this date for missing prices.
  Symbols excluded;
  /// Set when no portfolio could be formed on this date.
  std::optional<std::string> error;
  std::string error_kind;
  SolverReport report;

  [[nodiscard]] bool ok() const noexcept { return !error.has_value(); }
  /// Weight of `symbol`, 0 when it is not held.
  [[nodiscard]] double weight_of(const std::string& symbol) const;
};

/// For each evaluation row d (every step_days-th row starting at
/// window_days), estimates the risk model from the returns on rows
/// (d - window_days, d] and solves the configured objective.
///
/// Window positions are panel rows, which are calendar days for a
/// gap-free daily panel. A symbol missing any of the window_days + 1
/// prices is excluded for that date; an empty or infeasible universe is
/// recorded on the point and the sweep continues.
[[nodiscard]] std::vector<RollingPoint> rolling_optimal(const PricePanel& prices, const RollingSpec& spec);

struct NamedPortfolio {
  std::string name;
  Symbols symbols;
  Eigen::VectorXd weights;
};

struct ComparisonRow {
  std::string portfolio_name;
  double annual_volatility = 0.0;
  double annual_semideviation = 0.0;
  double historical_failure_prob = 0.0;
  double historical_std_error = 0.0;
  double gbm_failure_prob = 0.0;
  double gbm_std_error = 0.0;
  std::size_t n_dates = 0;
  std::optional<std::string> error;
  std::string error_kind;

  [[nodiscard]] bool ok() const noexcept { return !error.has_value(); }
};

struct CompareOptions {
  SimConfig sim;
  /// Price dates used for metrics and both simulators.
  std::optional<DateRange> range;
  double min_coverage = 0.9;
};

/// One row per portfolio. Each portfolio is aligned on its own symbols,
/// then measured with annualized_metrics, simulate_historical and
/// simulate_gbm. Failures are recorded on that portfolio's row.
[[nodiscard]] std::vector<ComparisonRow> compare_portfolios(const std::vector<NamedPortfolio>& portfolios,
                                                            const PricePanel& prices,
                                                            const CompareOptions& options);
/// Same on an already aligned table; symbols absent from it yield a
/// coverage error row.
[[nodiscard]] std::vector<ComparisonRow> compare_portfolios(const std::vector<NamedPortfolio>& portfolios,
                                                            const PriceTable& prices, const SimConfig& config);

struct ReferenceSetSpec {
  /// Average historical collateral portfolio ("DAI").
  NamedPortfolio dai;
  /// Full candidate set for the A-portfolios, with caps.
  Symbols universe;
  std::vector<double> caps;
  /// Returns in the estimation window, ending at `as_of`.
  int window_days = 200;
  Date as_of{};
  SemivarianceMethod semivariance_method = SemivarianceMethod::kScenario;
  SolverOptions solver;
};

/// DAI, A-Vol, A-Sem, DAI-Vol, DAI-Sem. The A-portfolios optimize over the
/// whole universe, the DAI-portfolios over the DAI portfolio's symbols
/// (caps taken from the universe, default cap otherwise).
[[nodiscard]] std::vector<NamedPortfolio> build_reference_portfolios(const PricePanel& prices,
                                                                     const ReferenceSetSpec& spec);

struct OrderingCheck {
  /// Human-readable descriptions of the comparisons that did not hold.
  std::vector<std::string> violations;
  [[nodiscard]] bool holds() const noexcept { return violations.empty(); }
};

/// Optimized portfolios have lower volatility and semideviation than DAI;
/// A-Vol and A-Sem are no worse than DAI-Vol and DAI-Sem on either metric.
[[nodiscard]] OrderingCheck check_reference_ordering(const std::vector<ComparisonRow>& rows);

}  // namespace crisk
