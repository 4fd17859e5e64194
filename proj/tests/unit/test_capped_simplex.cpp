#include <gtest/gtest.h>

#include <random>

#include "crisk/capped_simplex.hpp"
#include "crisk/error.hpp"

using namespace crisk;
using Eigen::VectorXd;

namespace {

// Bisection on the shift tau of clip(y - tau, 0, cap); independent of the
// breakpoint search in the library.
VectorXd bisection_projection(const VectorXd& y, const VectorXd& caps, double total) {
  double lo = y.minCoeff() - caps.maxCoeff() - 1.0, hi = y.maxCoeff() + 1.0;
  auto mass = [&](double tau) { return (y.array() - tau).max(0.0).min(caps.array()).sum(); };
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > total ? lo : hi) = mid;
  }
  return (y.array() - 0.5 * (lo + hi)).max(0.0).min(caps.array()).matrix();
}

}  // namespace

TEST(CappedSimplex, RejectsBadCaps) {
  EXPECT_THROW(check_caps(VectorXd::Constant(3, 0.2)), InfeasibleError);
  EXPECT_THROW(check_caps((VectorXd(2) << 0.5, 0.0).finished()), DomainError);
  EXPECT_THROW(check_caps((VectorXd(2) << 0.5, 1.5).finished()), DomainError);
  EXPECT_NO_THROW(check_caps(VectorXd::Constant(5, 0.2)));
}

TEST(CappedSimplex, FixedPointsAndKnownCases) {
  const VectorXd caps = VectorXd::Constant(3, 0.5);
  const VectorXd inside = (VectorXd(3) << 0.2, 0.3, 0.5).finished();
  EXPECT_LT((project_capped_simplex(inside, caps) - inside).cwiseAbs().maxCoeff(), 1e-15);
  const VectorXd far = (VectorXd(3) << 10.0, 10.0, -10.0).finished();
  const VectorXd p = project_capped_simplex(far, caps);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
  EXPECT_NEAR(p[2], 0.0, 1e-15);
}

TEST(CappedSimplex, PropertyMatchesBisectionAndIsFeasible) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> cap(0.05, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const int m = 1 + trial % 12;
    VectorXd y(m), caps(m);
    for (int i = 0; i < m; ++i) {
      y[i] = 2.0 * n01(rng);
      caps[i] = cap(rng);
    }
    if (caps.sum() < 1.0) caps.array() /= caps.sum() * 0.999;
    caps = caps.cwiseMin(1.0);
    if (caps.sum() < 1.0) continue;
    const VectorXd p = project_capped_simplex(y, caps);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_LE((p - caps).maxCoeff(), 0.0);
    EXPECT_LT((p - bisection_projection(y, caps, 1.0)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((project_capped_simplex(p, caps) - p).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(CappedSimplex, UniformStartIsFeasible) {
  const VectorXd caps = (VectorXd(4) << 0.1, 0.2, 0.5, 1.0).finished();
  const VectorXd s = uniform_feasible_start(caps);
  EXPECT_NEAR(s.sum(), 1.0, 1e-14);
  EXPECT_LE((s - caps).maxCoeff(), 0.0);
}
