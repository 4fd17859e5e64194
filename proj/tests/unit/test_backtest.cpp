#include <gtest/gtest.h>

#include "crisk/backtest.hpp"
#include "crisk/error.hpp"
#include "support.hpp"

using namespace crisk;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

PriceTable random_table(std::uint64_t seed, Eigen::Index t, Eigen::Index m) {
  std::mt19937_64 rng(seed);
  return crisk::testing::table_from_returns(crisk::testing::random_returns(rng, t, m), crisk::testing::numbered_symbols(m));
}

RollingSpec spec_for(const Symbols& universe, int window, double cap = 1.0) {
  RollingSpec s;
  s.window_days = window;
  s.universe = universe;
  s.caps.assign(universe.size(), cap);
  return s;
}

SimConfig quick_sim() {
  SimConfig c;
  c.n_runs = 300;
  c.horizon_days = 40;
  c.seed = 3;
  c.estimation_window_days = 40;
  return c;
}

}  // namespace

TEST(Rolling, SingleTokenHoldsEverything) {
  const PriceTable t = random_table(1, 60, 1);
  const auto points = rolling_optimal(PricePanel::from_table(t), spec_for(t.symbols(), 20));
  ASSERT_EQ(points.size(), 41u);
  for (const auto& p : points) {
    ASSERT_TRUE(p.ok());
    EXPECT_EQ(p.weights[0], 1.0);
  }
}

TEST(Rolling, ConstantPricesGiveFlaggedDegeneratePoint) {
  const PriceTable t(crisk::testing::daily_dates("2023-01-01", 30), {"A", "B", "C"}, MatrixXd::Constant(30, 3, 7.0));
  const auto points = rolling_optimal(PricePanel::from_table(t), spec_for(t.symbols(), 10, 0.5));
  for (const auto& p : points) {
    ASSERT_TRUE(p.ok());
    EXPECT_TRUE(p.report.degenerate_objective);
    EXPECT_NEAR(p.weights.sum(), 1.0, 1e-12);
  }
}

TEST(Rolling, PropertyWindowUsesExactlyTrailingReturns) {
  const PriceTable t = random_table(2, 120, 4);
  for (Objective obj : {Objective::kVariance, Objective::kSemivariance}) {
    RollingSpec spec = spec_for(t.symbols(), 30, 0.5);
    spec.objective = obj;
    spec.step_days = 7;
    const auto points = rolling_optimal(PricePanel::from_table(t), spec);
    std::size_t row = 30;
    for (const auto& p : points) {
      ASSERT_TRUE(p.ok());
      ASSERT_EQ(p.date, t.dates()[row]);
      const ReturnMatrix r = log_returns_rows(t, row - 30, row);
      ASSERT_EQ(r.n_obs(), 30u);
      const VectorXd caps = VectorXd::Constant(4, 0.5);
      const VectorXd direct = obj == Objective::kVariance ? min_variance(estimate_risk_model(r), caps).portfolio.weights
                                                          : min_semivariance(r, caps).portfolio.weights;
      EXPECT_EQ(p.weights, direct);
      row += 7;
    }
  }
}

TEST(Rolling, ExcludesTokensWithoutFullWindowAndRecordsErrors) {
  const PriceTable t = random_table(3, 80, 3);
  MatrixXd prices = t.prices();
  for (int r = 0; r < 40; ++r) prices(r, 2) = std::nan("");
  for (int r = 0; r < 15; ++r) prices(r, 1) = std::nan("");
  for (int r = 0; r < 12; ++r) prices(r, 0) = std::nan("");
  const PricePanel panel(t.dates(), t.symbols(), prices);

  RollingSpec spec = spec_for(t.symbols(), 10, 0.6);
  const auto points = rolling_optimal(panel, spec);
  ASSERT_FALSE(points.empty());
  // Row 10..21 lacks T0 history, rows 10..24 lack T1: empty universe.
  EXPECT_FALSE(points[0].ok());
  EXPECT_EQ(points[0].error_kind, "empty_universe");
  EXPECT_EQ(points[0].excluded.size(), 3u);
  // Rows 22..24: T0 alone with cap 0.6 is infeasible, recorded.
  const auto& infeasible = points[22 - 10];
  EXPECT_FALSE(infeasible.ok());
  EXPECT_EQ(infeasible.error_kind, "infeasible");
  // From row 25: T0 and T1; from row 50: all three.
  EXPECT_TRUE(points[25 - 10].ok());
  EXPECT_EQ(points[25 - 10].symbols, (Symbols{"T0", "T1"}));
  EXPECT_EQ(points[25 - 10].excluded, (Symbols{"T2"}));
  EXPECT_EQ(points[50 - 10].symbols.size(), 3u);
  EXPECT_TRUE(points[50 - 10].excluded.empty());
  EXPECT_EQ(points[25 - 10].weight_of("T2"), 0.0);
}

TEST(Rolling, ValidatesSpecAndHistory) {
  const PriceTable t = random_table(4, 10, 2);
  EXPECT_THROW((void)rolling_optimal(PricePanel::from_table(t), spec_for(t.symbols(), 1)), DomainError);
  EXPECT_THROW((void)rolling_optimal(PricePanel::from_table(t), spec_for(t.symbols(), 11)), InsufficientDataError);
  RollingSpec bad = spec_for(t.symbols(), 5);
  bad.step_days = 0;
  EXPECT_THROW((void)rolling_optimal(PricePanel::from_table(t), bad), DomainError);
}

TEST(Compare, IdenticalPortfoliosGiveIdenticalRows) {
  const PriceTable t = random_table(5, 200, 3);
  const VectorXd w = (VectorXd(3) << 0.5, 0.3, 0.2).finished();
  const std::vector<NamedPortfolio> ps = {{"a", t.symbols(), w}, {"b", t.symbols(), w}};
  const auto rows = compare_portfolios(ps, t, quick_sim());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].annual_volatility, rows[1].annual_volatility);
  EXPECT_EQ(rows[0].annual_semideviation, rows[1].annual_semideviation);
  EXPECT_EQ(rows[0].historical_failure_prob, rows[1].historical_failure_prob);
  EXPECT_EQ(rows[0].gbm_failure_prob, rows[1].gbm_failure_prob);
}

TEST(Compare, RowsEqualDirectLibraryCalls) {
  const PriceTable t = random_table(6, 200, 3);
  const VectorXd w = (VectorXd(3) << 0.2, 0.3, 0.5).finished();
  const SimConfig cfg = quick_sim();
  const auto rows = compare_portfolios({{"p", t.symbols(), w}}, PricePanel::from_table(t), CompareOptions{cfg, {}, 0.9});
  ASSERT_TRUE(rows[0].ok());
  const SimReport h = simulate_historical(w, t, cfg);
  const SimReport g = simulate_gbm(w, t, cfg);
  EXPECT_EQ(rows[0].annual_volatility, h.annual_volatility);
  EXPECT_EQ(rows[0].annual_semideviation, h.annual_semideviation);
  EXPECT_EQ(rows[0].historical_failure_prob, h.failure_probability);
  EXPECT_EQ(rows[0].gbm_failure_prob, g.failure_probability);
  EXPECT_EQ(rows[0].gbm_std_error, g.std_error);
}

TEST(Compare, ZeroVolatilityAssetNeverFails) {
  const PriceTable t(crisk::testing::daily_dates("2023-01-01", 120), {"FLAT"}, MatrixXd::Constant(120, 1, 1.0));
  const auto rows = compare_portfolios({{"flat", {"FLAT"}, VectorXd::Ones(1)}}, t, quick_sim());
  ASSERT_TRUE(rows[0].ok());
  EXPECT_EQ(rows[0].annual_volatility, 0.0);
  EXPECT_EQ(rows[0].historical_failure_prob, 0.0);
  EXPECT_EQ(rows[0].gbm_failure_prob, 0.0);
}

TEST(Compare, CoverageGapIsPerPortfolio) {
  const PriceTable t = random_table(7, 150, 2);
  const std::vector<NamedPortfolio> ps = {{"missing", {"T0", "ZZZ"}, (VectorXd(2) << 0.5, 0.5).finished()},
                                          {"fine", {"T0"}, VectorXd::Ones(1)}};
  const auto rows = compare_portfolios(ps, t, quick_sim());
  EXPECT_FALSE(rows[0].ok());
  EXPECT_EQ(rows[0].error_kind, "coverage_error");
  EXPECT_TRUE(rows[1].ok());
  const auto panel_rows = compare_portfolios(ps, PricePanel::from_table(t), CompareOptions{quick_sim(), {}, 0.9});
  EXPECT_FALSE(panel_rows[0].ok());
  EXPECT_TRUE(panel_rows[1].ok());
}

TEST(ReferenceSet, OrderingCheckReportsViolations) {
  auto row = [](const char* name, double vol, double sem) {
    ComparisonRow r;
    r.portfolio_name = name;
    r.annual_volatility = vol;
    r.annual_semideviation = sem;
    return r;
  };
  std::vector<ComparisonRow> rows = {row("DAI", 0.8, 0.57), row("A-Vol", 0.6, 0.45), row("A-Sem", 0.62, 0.44),
                                     row("DAI-Vol", 0.7, 0.5), row("DAI-Sem", 0.71, 0.49)};
  EXPECT_TRUE(check_reference_ordering(rows).holds());
  rows[1].annual_volatility = 0.75;
  const OrderingCheck bad = check_reference_ordering(rows);
  EXPECT_FALSE(bad.holds());
  EXPECT_EQ(bad.violations.size(), 1u);
  rows.pop_back();
  EXPECT_FALSE(check_reference_ordering(rows).holds());
}

TEST(ReferenceSet, BuildsFivePortfoliosOnTheEstimationWindow) {
  const PriceTable t = random_table(8, 300, 5);
  ReferenceSetSpec spec;
  spec.dai = {"DAI", {"T0", "T1"}, (VectorXd(2) << 0.7, 0.3).finished()};
  spec.universe = t.symbols();
  spec.caps.assign(5, 0.5);
  spec.window_days = 100;
  spec.as_of = t.dates()[250];
  const auto ps = build_reference_portfolios(PricePanel::from_table(t), spec);
  ASSERT_EQ(ps.size(), 5u);
  EXPECT_EQ(ps[0].name, "DAI");
  EXPECT_EQ(ps[1].name, "A-Vol");
  EXPECT_EQ(ps[3].symbols, spec.dai.symbols);
  // In-sample, the A-portfolio's variance is no worse than the DAI-restricted one.
  const ReturnMatrix r = log_returns_rows(t, 150, 250);
  const RiskModel m = estimate_risk_model(r);
  EXPECT_LE(ps[1].weights.dot(m.cov * ps[1].weights),
            ps[3].weights.dot(m.cov.topLeftCorner(2, 2) * ps[3].weights) + 1e-15);
  for (const auto& p : ps) EXPECT_NEAR(p.weights.sum(), 1.0, 1e-9);
}
