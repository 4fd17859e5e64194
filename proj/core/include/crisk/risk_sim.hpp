/**
 * @file risk_sim.hpp
 * @brief Failure probability of an overcollateralized portfolio under
 *        historical-bootstrap and correlated-GBM price paths.
 *
 * A stablecoin backed by a portfolio with fixed token counts and initial
 * overcollateralization gamma survives day t while v(t)/v(0) >= theta/gamma,
 * where v(t)/v(0) = sum_i a_i * p_i(t)/p_i(0). A run fails when any daily
 * close in 1..horizon violates that bound.
 *
 * Determinism: run k draws from make_stream(seed, k), so results are
 * bit-identical for a given seed regardless of thread count.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crisk/market_data.hpp"

namespace crisk {

enum class SimMode { kHistorical, kGbm };
enum class CheckFrequency { kDaily };
/// How GBM drift and covariance are obtained for each run.
enum class GbmParameters {
  /// Each run estimates mu and C from its own randomly drawn history window.
  kResampled,
  /// One risk model shared by every run.
  kFixed,
};

[[nodiscard]] const char* to_string(SimMode mode) noexcept;
[[nodiscard]] const char* to_string(GbmParameters p) noexcept;

struct SimConfig {
  double gamma = 2.0;
  double theta = 1.5;
  int horizon_days = 365;
  int n_runs = 10'000;
  std::uint64_t seed = 0;
  SimMode mode = SimMode::kHistorical;
  CheckFrequency check_frequency = CheckFrequency::kDaily;
  /// History window (in returns) each resampled GBM run estimates from.
  int estimation_window_days = 200;
  GbmParameters gbm_parameters = GbmParameters::kResampled;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;

  /// Throws DomainError unless gamma > theta > 1, horizon >= 1, runs >= 1.
  void validate() const;
  /// Survival threshold on v(t)/v(0).
  [[nodiscard]] double barrier() const noexcept { return theta / gamma; }
};

struct SimReport {
  double failure_probability = 0.0;
  /// Monte Carlo standard error sqrt(p(1-p)/n).
  double std_error = 0.0;
  double annual_volatility = 0.0;
  double annual_semideviation = 0.0;
  int n_runs = 0;
  SimMode mode = SimMode::kHistorical;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  double theta = 0.0;
  int horizon_days = 0;
};

/// Per-symbol price multipliers p_i(t)/p_i(0), t = 0..horizon.
struct PricePath {
  /// (horizon + 1) x M; row 0 is all ones.
  Eigen::MatrixXd multipliers;

  [[nodiscard]] int horizon() const noexcept { return static_cast<int>(multipliers.rows()) - 1; }
};

/// v(t)/v(0) = sum_i a_i * multiplier_i(t).
[[nodiscard]] double portfolio_value_ratio(const Eigen::VectorXd& weights, const PricePath& path, int t);

/// True iff ratio < theta/gamma; the boundary itself survives.
[[nodiscard]] bool is_failed(double ratio, const SimConfig& config);

/// Realized multipliers for table rows [window.first, window.last].
[[nodiscard]] PricePath replay_path(const PriceTable& table, const RowWindow& window);

/// Correlated daily log returns z = mu + L*eps, eps ~ N(0, I), with L a
/// Cholesky factor of C, or a clipped eigen-factor when C is only
/// semidefinite. No Ito adjustment: mu is already a mean log return.
class GbmSampler {
 public:
  /// Throws DomainError if `cov` is not PSD.
  GbmSampler(Eigen::VectorXd mu, const Eigen::MatrixXd& cov);

  [[nodiscard]] const Eigen::VectorXd& mu() const noexcept { return mu_; }
  [[nodiscard]] const Eigen::MatrixXd& factor() const noexcept { return factor_; }
  [[nodiscard]] bool used_eigen_fallback() const noexcept { return eigen_fallback_; }

  /// horizon x M matrix of daily log returns.
  [[nodiscard]] Eigen::MatrixXd daily_log_returns(Rng& rng, int horizon) const;
  [[nodiscard]] PricePath path(Rng& rng, int horizon) const;
  /// min over t = 1..horizon of v(t)/v(0) without materializing the path.
  [[nodiscard]] double min_ratio(Rng& rng, int horizon, const Eigen::VectorXd& weights) const;

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd factor_;
  bool eigen_fallback_ = false;
};

/// Per-run minimum of v(t)/v(0) over days 1..horizon. Failure for any
/// (gamma, theta) follows from these by comparison with theta/gamma, so
/// one set of paths answers every threshold.
[[nodiscard]] std::vector<double> historical_min_ratios(const Eigen::VectorXd& weights,
                                                        const PriceTable& table,
                                                        const SimConfig& config);
[[nodiscard]] std::vector<double> gbm_min_ratios(const Eigen::VectorXd& weights,
                                                 const RiskModel& model, const SimConfig& config);
/// Resampled-parameter GBM (or fixed, estimated from the whole table, when
/// config.gbm_parameters == kFixed).
[[nodiscard]] std::vector<double> gbm_min_ratios(const Eigen::VectorXd& weights,
                                                 const PriceTable& table, const SimConfig& config);

/// Fraction of runs whose minimum ratio falls below theta/gamma.
[[nodiscard]] double failure_probability(const std::vector<double>& min_ratios, double gamma,
                                         double theta);

/// Bootstrap over randomly drawn contiguous windows of realized history.
/// `table` columns must line up with `weights`.
[[nodiscard]] SimReport simulate_historical(const Eigen::VectorXd& weights, const PriceTable& table,
                                            const SimConfig& config);

/// GBM with one fixed risk model. Annual semideviation is reported as
/// volatility / sqrt(2), the semideviation of the model's Gaussian
/// portfolio return.
[[nodiscard]] SimReport simulate_gbm(const Eigen::VectorXd& weights, const RiskModel& model,
                                     const SimConfig& config);

/// GBM with parameters estimated from `table` (per run when resampled).
/// Annual metrics are the realized ones over the whole table.
[[nodiscard]] SimReport simulate_gbm(const Eigen::VectorXd& weights, const PriceTable& table,
                                     const SimConfig& config);

struct AnnualMetrics {
  double volatility = 0.0;
  double semideviation = 0.0;
};

/// Annualized (sqrt 365) sample volatility (divisor T-1) and own-mean
/// semideviation (divisor T) of the portfolio's daily log-return series
/// r_pt = sum_i a_i r_it.
[[nodiscard]] AnnualMetrics annualized_metrics(const Eigen::VectorXd& weights,
                                               const ReturnMatrix& returns);

}  // namespace crisk
