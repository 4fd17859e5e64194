#include "crisk/risk_sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "crisk/error.hpp"

namespace crisk {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Evaluates fn(k) for k in [0, n) on `threads` workers with static
/// chunking. Each index writes only its own slot.
template <typename Fn>
std::vector<double> run_indexed(int n, unsigned threads, Fn fn) {
  std::vector<double> out(static_cast<std::size_t>(n));
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max(n, 1)));
  if (workers <= 1) {
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = fn(k);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int k = static_cast<int>(w); k < n; k += static_cast<int>(workers)) {
            out[static_cast<std::size_t>(k)] = fn(k);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void check_weights(const VectorXd& weights, std::size_t n_symbols) {
  if (static_cast<std::size_t>(weights.size()) != n_symbols) {
    throw DomainError("weights have " + std::to_string(weights.size()) + " entries for " +
                      std::to_string(n_symbols) + " symbols");
  }
}

SimReport make_report(const std::vector<double>& minima, const SimConfig& config) {
  SimReport r;
  r.failure_probability = failure_probability(minima, config.gamma, config.theta);
  r.n_runs = config.n_runs;
  r.std_error = std::sqrt(r.failure_probability * (1.0 - r.failure_probability) /
                          static_cast<double>(config.n_runs));
  r.mode = config.mode;
  r.seed = config.seed;
  r.gamma = config.gamma;
  r.theta = config.theta;
  r.horizon_days = config.horizon_days;
  return r;
}

void require_history(const PriceTable& table, int horizon) {
  if (table.n_dates() < static_cast<std::size_t>(horizon) + 1) {
    throw InsufficientDataError("history has " + std::to_string(table.n_dates()) +
                                " dates; a " + std::to_string(horizon) + "-day horizon needs " +
                                std::to_string(horizon + 1));
  }
}

}  // namespace

const char* to_string(SimMode mode) noexcept {
  return mode == SimMode::kHistorical ? "historical" : "gbm";
}

const char* to_string(GbmParameters p) noexcept {
  return p == GbmParameters::kResampled ? "resampled" : "fixed";
}

void SimConfig::validate() const {
  if (!(theta > 1.0)) throw DomainError("theta must exceed 1");
  if (!(gamma > theta)) throw DomainError("gamma must exceed theta");
  if (horizon_days < 1) throw DomainError("horizon_days must be >= 1");
  if (n_runs < 1) throw DomainError("n_runs must be >= 1");
  if (estimation_window_days < 2) throw DomainError("estimation window must be >= 2 days");
}

double portfolio_value_ratio(const Eigen::VectorXd& weights, const PricePath& path, int t) {
  double v = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) v += weights[i] * path.multipliers(t, i);
  return v;
}

bool is_failed(double ratio, const SimConfig& config) { return ratio < config.barrier(); }

PricePath replay_path(const PriceTable& table, const RowWindow& window) {
  const auto n = static_cast<Eigen::Index>(window.last - window.first + 1);
  const MatrixXd block = table.prices().middleRows(static_cast<Eigen::Index>(window.first), n);
  PricePath path;
  path.multipliers = block.array().rowwise() / block.row(0).array();
  return path;
}

GbmSampler::GbmSampler(Eigen::VectorXd mu, const Eigen::MatrixXd& cov) : mu_(std::move(mu)) {
  if (cov.rows() != mu_.size() || cov.cols() != mu_.size()) {
    throw DomainError("drift and covariance sizes differ");
  }
  const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
    return;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
  if (es.eigenvalues().minCoeff() < -kPsdTolerance * scale) {
    throw DomainError("covariance is not positive semidefinite");
  }
  factor_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  eigen_fallback_ = true;
}

Eigen::MatrixXd GbmSampler::daily_log_returns(Rng& rng, int horizon) const {
  std::normal_distribution<double> normal;
  const Eigen::Index m = mu_.size();
  MatrixXd out(horizon, m);
  VectorXd eps(m);
  for (int t = 0; t < horizon; ++t) {
    for (Eigen::Index i = 0; i < m; ++i) eps[i] = normal(rng);
    out.row(t) = (mu_ + factor_ * eps).transpose();
  }
  return out;
}

PricePath GbmSampler::path(Rng& rng, int horizon) const {
  const MatrixXd z = daily_log_returns(rng, horizon);
  PricePath p;
  p.multipliers.resize(horizon + 1, mu_.size());
  p.multipliers.row(0).setOnes();
  VectorXd cum = VectorXd::Zero(mu_.size());
  for (int t = 0; t < horizon; ++t) {
    cum += z.row(t).transpose();
    p.multipliers.row(t + 1) = cum.array().exp().transpose();
  }
  return p;
}

double GbmSampler::min_ratio(Rng& rng, int horizon, const Eigen::VectorXd& weights) const {
  std::normal_distribution<double> normal;
  const Eigen::Index m = mu_.size();
  VectorXd eps(m), z(m), cum = VectorXd::Zero(m);
  double lowest = std::numeric_limits<double>::infinity();
  for (int t = 0; t < horizon; ++t) {
    for (Eigen::Index i = 0; i < m; ++i) eps[i] = normal(rng);
    z = mu_ + factor_ * eps;
    cum += z;
    lowest = std::min(lowest, weights.dot(cum.array().exp().matrix()));
  }
  return lowest;
}

std::vector<double> historical_min_ratios(const Eigen::VectorXd& weights, const PriceTable& table,
                                          const SimConfig& config) {
  config.validate();
  check_weights(weights, table.n_symbols());
  require_history(table, config.horizon_days);
  const auto horizon = static_cast<std::size_t>(config.horizon_days);
  const MatrixXd& prices = table.prices();

  return run_indexed(config.n_runs, config.threads, [&](int k) {
    Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(k));
    const RowWindow w = sample_row_window(table.n_dates(), horizon, rng);
    const auto base = static_cast<Eigen::Index>(w.first);
    double lowest = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = base + 1; t <= static_cast<Eigen::Index>(w.last); ++t) {
      double v = 0.0;
      for (Eigen::Index i = 0; i < weights.size(); ++i) v += weights[i] * (prices(t, i) / prices(base, i));
      lowest = std::min(lowest, v);
    }
    return lowest;
  });
}

std::vector<double> gbm_min_ratios(const Eigen::VectorXd& weights, const RiskModel& model,
                                   const SimConfig& config) {
  config.validate();
  check_weights(weights, static_cast<std::size_t>(model.mu.size()));
  const GbmSampler sampler(model.mu, model.cov);
  return run_indexed(config.n_runs, config.threads, [&](int k) {
    Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(k));
    return sampler.min_ratio(rng, config.horizon_days, weights);
  });
}

std::vector<double> gbm_min_ratios(const Eigen::VectorXd& weights, const PriceTable& table,
                                   const SimConfig& config) {
  config.validate();
  check_weights(weights, table.n_symbols());
  if (config.gbm_parameters == GbmParameters::kFixed) {
    return gbm_min_ratios(weights, estimate_risk_model(log_returns(table)), config);
  }
  const auto window = static_cast<std::size_t>(config.estimation_window_days);
  if (table.n_dates() < window + 1) {
    throw InsufficientDataError("GBM estimation window of " + std::to_string(window) +
                                " days needs " + std::to_string(window + 1) + " dates");
  }
  return run_indexed(config.n_runs, config.threads, [&](int k) {
    Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(k));
    const RowWindow w = sample_row_window(table.n_dates(), window, rng);
    const RiskModel model = estimate_risk_model(log_returns_rows(table, w.first, w.last));
    const GbmSampler sampler(model.mu, model.cov);
    return sampler.min_ratio(rng, config.horizon_days, weights);
  });
}

double failure_probability(const std::vector<double>& min_ratios, double gamma, double theta) {
  if (min_ratios.empty()) return 0.0;
  const double barrier = theta / gamma;
  const auto failures = std::count_if(min_ratios.begin(), min_ratios.end(),
                                      [barrier](double r) { return r < barrier; });
  return static_cast<double>(failures) / static_cast<double>(min_ratios.size());
}

SimReport simulate_historical(const Eigen::VectorXd& weights, const PriceTable& table,
                              const SimConfig& config) {
  SimConfig cfg = config;
  cfg.mode = SimMode::kHistorical;
  SimReport r = make_report(historical_min_ratios(weights, table, cfg), cfg);
  const AnnualMetrics m = annualized_metrics(weights, log_returns(table));
  r.annual_volatility = m.volatility;
  r.annual_semideviation = m.semideviation;
  return r;
}

SimReport simulate_gbm(const Eigen::VectorXd& weights, const RiskModel& model, const SimConfig& config) {
  SimConfig cfg = config;
  cfg.mode = SimMode::kGbm;
  SimReport r = make_report(gbm_min_ratios(weights, model, cfg), cfg);
  r.annual_volatility = std::sqrt(std::max(0.0, kDaysPerYear * weights.dot(model.cov * weights)));
  r.annual_semideviation = r.annual_volatility / std::sqrt(2.0);
  return r;
}

SimReport simulate_gbm(const Eigen::VectorXd& weights, const PriceTable& table, const SimConfig& config) {
  SimConfig cfg = config;
  cfg.mode = SimMode::kGbm;
  SimReport r = make_report(gbm_min_ratios(weights, table, cfg), cfg);
  const AnnualMetrics m = annualized_metrics(weights, log_returns(table));
  r.annual_volatility = m.volatility;
  r.annual_semideviation = m.semideviation;
  return r;
}

AnnualMetrics annualized_metrics(const Eigen::VectorXd& weights, const ReturnMatrix& returns) {
  if (returns.n_obs() < 2) throw InsufficientDataError("annualized metrics need at least 2 returns");
  check_weights(weights, returns.n_assets());
  const VectorXd rp = returns.returns * weights;
  const auto t = static_cast<double>(rp.size());
  const Eigen::ArrayXd dev = rp.array() - rp.mean();
  AnnualMetrics m;
  m.volatility = std::sqrt(dev.square().sum() / (t - 1.0) * kDaysPerYear);
  m.semideviation = std::sqrt(dev.min(0.0).square().sum() / t * kDaysPerYear);
  return m;
}

}  // namespace crisk
