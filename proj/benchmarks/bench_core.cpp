#include <random>

#include <benchmark/benchmark.h>

#include "crisk/capped_simplex.hpp"
#include "crisk/portfolio_opt.hpp"
#include "crisk/risk_sim.hpp"

using namespace crisk;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_returns(Eigen::Index t, Eigen::Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.03);
  MatrixXd r(t, m);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) r(i, j) = n(rng);
  }
  return r;
}

PriceTable table_of(const MatrixXd& r) {
  std::vector<Date> dates;
  Symbols symbols;
  for (Eigen::Index j = 0; j < r.cols(); ++j) symbols.push_back("T" + std::to_string(j));
  MatrixXd p(r.rows() + 1, r.cols());
  p.row(0).setConstant(100.0);
  for (Eigen::Index i = 0; i <= r.rows(); ++i) {
    dates.push_back(*parse_date("2020-01-01") + std::chrono::days(i));
    if (i > 0) p.row(i) = p.row(i - 1).array() * r.row(i - 1).array().exp();
  }
  return PriceTable(dates, symbols, p);
}

ReturnMatrix returns_of(const MatrixXd& r) { return log_returns(table_of(r)); }

void BM_CappedSimplexProjection(benchmark::State& state) {
  const auto m = state.range(0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  VectorXd y(m);
  for (auto& v : y) v = n(rng);
  const VectorXd caps = VectorXd::Constant(m, 2.0 / static_cast<double>(m));
  for (auto _ : state) benchmark::DoNotOptimize(project_capped_simplex(y, caps));
}
BENCHMARK(BM_CappedSimplexProjection)->Arg(6)->Arg(30)->Arg(100);

void BM_MinVariance(benchmark::State& state) {
  const auto m = state.range(0);
  const RiskModel model = estimate_risk_model(returns_of(random_returns(200, m, 2)));
  const VectorXd caps = VectorXd::Constant(m, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(min_variance(model, caps));
}
BENCHMARK(BM_MinVariance)->Arg(6)->Arg(30)->Unit(benchmark::kMicrosecond);

void BM_MinSemivariance(benchmark::State& state) {
  const auto m = state.range(0);
  const ReturnMatrix r = returns_of(random_returns(200, m, 3));
  const VectorXd caps = VectorXd::Constant(m, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(min_semivariance(r, caps));
}
BENCHMARK(BM_MinSemivariance)->Arg(6)->Arg(30)->Unit(benchmark::kMicrosecond);

void BM_SimulateGbm(benchmark::State& state) {
  const PriceTable t = table_of(random_returns(400, 6, 4));
  const VectorXd w = VectorXd::Constant(6, 1.0 / 6.0);
  SimConfig cfg;
  cfg.n_runs = static_cast<int>(state.range(0));
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_gbm(w, t, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.n_runs);
}
BENCHMARK(BM_SimulateGbm)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SimulateHistorical(benchmark::State& state) {
  const PriceTable t = table_of(random_returns(1000, 6, 5));
  const VectorXd w = VectorXd::Constant(6, 1.0 / 6.0);
  SimConfig cfg;
  cfg.n_runs = static_cast<int>(state.range(0));
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_historical(w, t, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.n_runs);
}
BENCHMARK(BM_SimulateHistorical)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
