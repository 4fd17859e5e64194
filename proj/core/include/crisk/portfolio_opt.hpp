/**
 * @file portfolio_opt.hpp
 * @brief Minimum-variance and minimum-semivariance collateral portfolios on
 *        the capped simplex, efficient frontier and token filtering.
 *
 * Feasible set everywhere: sum(a) = 1, 0 <= a_i <= cap_i.
 *
 * Both objectives are solved with accelerated projected gradient using
 * the exact capped-simplex projection, followed by an active-set
 * refinement that solves the equality-constrained problem on the free
 * coordinates. The refinement turns an approximately optimal point into
 * the exact minimizer of the identified face, so objectives match
 * brute-force oracles to rounding.
 *
 * Objectives are reported in daily units (daily variance, daily
 * semivariance) as estimated from daily log returns.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crisk/dates.hpp"
#include "crisk/market_data.hpp"
#include "crisk/universe.hpp"

namespace crisk {

struct Portfolio {
  Symbols symbols;
  Eigen::VectorXd weights;
  Eigen::VectorXd caps;

  /// Throws DomainError unless sum(weights) = 1 within 1e-8 and
  /// 0 <= w_i <= cap_i within 1e-10.
  void validate() const;
};

struct SolverOptions {
  /// Stop the gradient phase once the scaled KKT residual drops below this.
  double kkt_tolerance = 1e-7;
  int max_iterations = 10'000;
  /// Run the active-set refinement after the gradient phase.
  bool refine = true;
};

struct SolverReport {
  /// Objective at the returned weights (daily units).
  double objective = 0.0;
  /// KKT residual of the scaled problem at the returned weights.
  double kkt_residual = 0.0;
  int iterations = 0;
  int refine_steps = 0;
  bool converged = false;
  /// Objective is identically zero on the feasible set (no dispersion or
  /// no downside scenarios); any feasible point is optimal and the
  /// uniform start is returned.
  bool degenerate_objective = false;
  /// Semivariance was solved with the semicovariance-matrix approximation.
  bool semicov_approximation = false;
};

struct OptimizedPortfolio {
  Portfolio portfolio;
  SolverReport report;
};

/// Global minimizer of a'Ca over the capped simplex.
/// Throws InfeasibleError when sum(caps) < 1 and DomainError when the
/// covariance is not PSD or shapes disagree.
[[nodiscard]] OptimizedPortfolio min_variance(const RiskModel& model, const Eigen::VectorXd& caps,
                                              const SolverOptions& options = {});

/// Same as above on a bare covariance matrix (symbols are left empty).
[[nodiscard]] OptimizedPortfolio min_variance(const Eigen::MatrixXd& cov, const Eigen::VectorXd& caps,
                                              const SolverOptions& options = {});

enum class SemivarianceMethod {
  /// Exact scenario problem: minimize (1/T) sum_t d_t^2 with
  /// d_t >= mu_p - r_pt, d_t >= 0.
  kScenario,
  /// Fast path: a'Sa with S the below-mean semicovariance matrix.
  kSemicovMatrix,
};

/// Minimizes the portfolio's own-mean semivariance over the capped simplex.
///
/// With the downside variables at their optimal values
/// d_t = max(mu_p - r_pt, 0) the scenario problem reduces to minimizing
/// the convex, piecewise-quadratic function
/// f(a) = (1/T) * sum_t max(-(D a)_t, 0)^2 with D the column-centered
/// return matrix; this is the problem actually solved.
[[nodiscard]] OptimizedPortfolio min_semivariance(
    const ReturnMatrix& returns, const Eigen::VectorXd& caps,
    SemivarianceMethod method = SemivarianceMethod::kScenario, const SolverOptions& options = {});

/// Own-mean semivariance (divisor T) of the portfolio return series.
[[nodiscard]] double portfolio_semivariance(const Eigen::MatrixXd& returns,
                                            const Eigen::VectorXd& weights);
/// T-divisor variance of the portfolio return series.
[[nodiscard]] double portfolio_variance_population(const Eigen::MatrixXd& returns,
                                                   const Eigen::VectorXd& weights);

struct FrontierPoint {
  /// Annualized (x365) expected log return targeted.
  double target_return = 0.0;
  /// Annualized (sqrt 365) volatility of the solution.
  double volatility = 0.0;
  Eigen::VectorXd weights;
  double sharpe = 0.0;
  /// False when the target could not be met; weights are then empty and
  /// volatility/sharpe are NaN.
  bool feasible = true;
};

/// `n_points` targets linearly spaced from the minimum-variance portfolio's
/// annualized return to the highest return reachable under the caps; each
/// point minimizes volatility subject to mu'a = target.
[[nodiscard]] std::vector<FrontierPoint> efficient_frontier(const RiskModel& model,
                                                            const Eigen::VectorXd& caps,
                                                            int n_points, double risk_free = 0.0,
                                                            const SolverOptions& options = {});

/// Solves a single frontier point. Returns nullopt when the target is
/// outside the achievable range.
[[nodiscard]] std::optional<OptimizedPortfolio> min_variance_for_return(
    const RiskModel& model, const Eigen::VectorXd& caps, double annual_target,
    const SolverOptions& options = {});

/// Highest annualized expected return reachable on the capped simplex.
[[nodiscard]] double max_achievable_return(const RiskModel& model, const Eigen::VectorXd& caps);

/// (mu_annual - risk_free) / vol_annual. Throws UndefinedRatioError for a
/// non-positive volatility.
[[nodiscard]] double sharpe_ratio(double mu_annual, double vol_annual, double risk_free = 0.0);

struct UniverseFilter {
  int max_rank = 100;
  double min_age_years = 3.0;
  bool exclude_stablecoins = true;
};

/// Keeps entries with rank <= max_rank, launched at least min_age_years
/// before `as_of` (inclusive; entries without a launch date are dropped
/// whenever min_age_years > 0) and, if requested, not a stablecoin.
/// Output preserves input order.
[[nodiscard]] std::vector<std::string> filter_universe(const std::vector<UniverseEntry>& candidates,
                                                       const UniverseFilter& filter, Date as_of);

}  // namespace crisk
