#include <gtest/gtest.h>

#include <cmath>

#include "crisk/error.hpp"
#include "crisk/risk_sim.hpp"
#include "support.hpp"

using namespace crisk;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

PriceTable sample_table(std::uint64_t seed, Eigen::Index t = 400, Eigen::Index m = 4) {
  std::mt19937_64 rng(seed);
  return crisk::testing::table_from_returns(crisk::testing::random_returns(rng, t, m), crisk::testing::numbered_symbols(m));
}

SimConfig small_config(int runs = 500, int horizon = 60) {
  SimConfig c;
  c.n_runs = runs;
  c.horizon_days = horizon;
  c.seed = 9;
  c.estimation_window_days = 50;
  return c;
}

}  // namespace

TEST(SimConfig, ValidatesThresholds) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  c.theta = 1.0;
  EXPECT_THROW(c.validate(), DomainError);
  c.theta = 2.5;
  EXPECT_THROW(c.validate(), DomainError);
  c = SimConfig{};
  c.horizon_days = 0;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(SimConfig, BoundaryRatioSurvives) {
  const SimConfig c;
  EXPECT_FALSE(is_failed(0.75, c));
  EXPECT_TRUE(is_failed(std::nextafter(0.75, 0.0), c));
}

TEST(Historical, ReplayOfSampledWindowMatchesEngine) {
  const PriceTable table = sample_table(1);
  const VectorXd w = VectorXd::Constant(4, 0.25);
  const SimConfig cfg = small_config(50);
  const auto minima = historical_min_ratios(w, table, cfg);
  for (int k = 0; k < cfg.n_runs; ++k) {
    Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(k));
    const RowWindow win = sample_row_window(table.n_dates(), static_cast<std::size_t>(cfg.horizon_days), rng);
    const PricePath path = replay_path(table, win);
    ASSERT_EQ(path.horizon(), cfg.horizon_days);
    double lowest = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= path.horizon(); ++t) lowest = std::min(lowest, portfolio_value_ratio(w, path, t));
    EXPECT_EQ(lowest, minima[static_cast<std::size_t>(k)]);
  }
}

TEST(Historical, DeterministicDeclineFailsOnDayFifteen) {
  // ln-price falls 0.02 per day: exp(-0.28) > 0.75 > exp(-0.30).
  MatrixXd r = MatrixXd::Constant(15, 1, -0.02);
  SimConfig cfg = small_config(20, 14);
  const PriceTable short_table = crisk::testing::table_from_returns(r.topRows(14), {"X"});
  EXPECT_EQ(simulate_historical(VectorXd::Ones(1), short_table, cfg).failure_probability, 0.0);
  cfg.horizon_days = 15;
  const PriceTable table = crisk::testing::table_from_returns(r, {"X"});
  EXPECT_EQ(simulate_historical(VectorXd::Ones(1), table, cfg).failure_probability, 1.0);
}

TEST(Gbm, DeterministicDeclineFailsOnDayFifteen) {
  RiskModel model;
  model.mu = VectorXd::Constant(1, -0.02);
  model.cov = MatrixXd::Zero(1, 1);
  SimConfig cfg = small_config(20, 14);
  EXPECT_EQ(simulate_gbm(VectorXd::Ones(1), model, cfg).failure_probability, 0.0);
  cfg.horizon_days = 15;
  EXPECT_EQ(simulate_gbm(VectorXd::Ones(1), model, cfg).failure_probability, 1.0);
}

TEST(Historical, ConstantPricesNeverFail) {
  const PriceTable table(crisk::testing::daily_dates("2023-01-01", 100), {"A", "B"}, MatrixXd::Constant(100, 2, 3.0));
  const SimReport r = simulate_historical(VectorXd::Constant(2, 0.5), table, small_config(200, 30));
  EXPECT_EQ(r.failure_probability, 0.0);
  EXPECT_EQ(r.annual_volatility, 0.0);
  EXPECT_EQ(r.std_error, 0.0);
}

TEST(Historical, NeedsEnoughHistory) {
  const PriceTable table = sample_table(2, 30, 2);
  EXPECT_THROW((void)simulate_historical(VectorXd::Constant(2, 0.5), table, small_config(10, 31)),
               InsufficientDataError);
  EXPECT_THROW((void)simulate_historical(VectorXd::Ones(3) / 3.0, table, small_config(10, 10)), DomainError);
}

TEST(Determinism, ThreadCountDoesNotChangeResults) {
  const PriceTable table = sample_table(3);
  const VectorXd w = (VectorXd(4) << 0.4, 0.3, 0.2, 0.1).finished();
  SimConfig one = small_config(300);
  one.threads = 1;
  SimConfig many = one;
  many.threads = 4;
  EXPECT_EQ(historical_min_ratios(w, table, one), historical_min_ratios(w, table, many));
  EXPECT_EQ(gbm_min_ratios(w, table, one), gbm_min_ratios(w, table, many));
  one.gbm_parameters = many.gbm_parameters = GbmParameters::kFixed;
  EXPECT_EQ(gbm_min_ratios(w, table, one), gbm_min_ratios(w, table, many));
  SimConfig other = one;
  other.seed = 10;
  EXPECT_NE(gbm_min_ratios(w, table, one), gbm_min_ratios(w, table, other));
}

TEST(Monotonicity, PropertyFailureOrderedInThetaAndGamma) {
  const PriceTable table = sample_table(4);
  const VectorXd w = VectorXd::Constant(4, 0.25);
  SimConfig cfg = small_config(400, 120);
  for (const auto& minima : {historical_min_ratios(w, table, cfg), gbm_min_ratios(w, table, cfg)}) {
    double prev = 0.0;
    for (double theta = 1.05; theta < 2.0; theta += 0.05) {
      const double p = failure_probability(minima, 2.0, theta);
      EXPECT_GE(p, prev);
      prev = p;
    }
    prev = 1.0;
    for (double gamma = 1.6; gamma < 4.0; gamma += 0.1) {
      const double p = failure_probability(minima, gamma, 1.5);
      EXPECT_LE(p, prev);
      prev = p;
    }
  }
}

TEST(Gbm, MinRatioMatchesMaterializedPath) {
  RiskModel model;
  model.mu = (VectorXd(2) << 0.001, -0.0005).finished();
  model.cov = (MatrixXd(2, 2) << 0.0004, 0.0001, 0.0001, 0.0009).finished();
  const GbmSampler sampler(model.mu, model.cov);
  const VectorXd w = (VectorXd(2) << 0.6, 0.4).finished();
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng a = make_stream(5, k), b = make_stream(5, k);
    const PricePath path = sampler.path(a, 50);
    double lowest = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= 50; ++t) lowest = std::min(lowest, portfolio_value_ratio(w, path, t));
    EXPECT_NEAR(sampler.min_ratio(b, 50, w), lowest, 1e-15);
    EXPECT_EQ(path.multipliers.row(0), Eigen::RowVectorXd::Ones(2));
  }
}

TEST(Gbm, SemidefiniteCovarianceUsesEigenFactor) {
  const MatrixXd c = (MatrixXd(2, 2) << 1e-4, 1e-4, 1e-4, 1e-4).finished();
  const GbmSampler sampler(VectorXd::Zero(2), c);
  EXPECT_TRUE(sampler.used_eigen_fallback());
  EXPECT_LT((sampler.factor() * sampler.factor().transpose() - c).cwiseAbs().maxCoeff(), 1e-18);
  EXPECT_THROW(GbmSampler(VectorXd::Zero(2), (MatrixXd(2, 2) << 1, 2, 2, 1).finished()), DomainError);
}

TEST(Gbm, ReproducesCorrelations) {
  MatrixXd corr(3, 3);
  corr << 1.0, 0.8, 0.2, 0.8, 1.0, 0.5, 0.2, 0.5, 1.0;
  const VectorXd vol = (VectorXd(3) << 0.02, 0.03, 0.05).finished();
  const MatrixXd cov = vol.asDiagonal() * corr * vol.asDiagonal();
  const GbmSampler sampler(VectorXd::Zero(3), cov);
  Rng rng = make_stream(77, 0);
  const MatrixXd z = sampler.daily_log_returns(rng, 20000);
  const MatrixXd centered = z.rowwise() - z.colwise().mean();
  const MatrixXd sample = centered.transpose() * centered / static_cast<double>(z.rows() - 1);
  const VectorXd sd = sample.diagonal().cwiseSqrt();
  const MatrixXd sample_corr = sd.cwiseInverse().asDiagonal() * sample * sd.cwiseInverse().asDiagonal();
  EXPECT_LT((sample_corr - corr).cwiseAbs().maxCoeff(), 0.03);
}

TEST(Metrics, AnnualizedVolatilityAndSemideviation) {
  MatrixXd r(4, 1);
  r << 0.01, -0.01, 0.01, -0.01;
  const AnnualMetrics m = annualized_metrics(VectorXd::Ones(1), crisk::testing::make_returns(r));
  const double var = 4.0 * 1e-4 / 3.0;
  EXPECT_NEAR(m.volatility, std::sqrt(var * 365.0), 1e-15);
  EXPECT_NEAR(m.semideviation, m.volatility * std::sqrt(3.0 / 8.0), 1e-15);
}

TEST(Metrics, GbmFixedReportsHalfNormalSemideviation) {
  RiskModel model;
  model.mu = VectorXd::Zero(1);
  model.cov = MatrixXd::Constant(1, 1, 0.0004);
  const SimReport r = simulate_gbm(VectorXd::Ones(1), model, small_config(10, 5));
  EXPECT_NEAR(r.annual_volatility, 0.02 * std::sqrt(365.0), 1e-15);
  EXPECT_NEAR(r.annual_semideviation, r.annual_volatility / std::sqrt(2.0), 1e-15);
}
