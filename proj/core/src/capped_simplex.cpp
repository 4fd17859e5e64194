#include "crisk/capped_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "crisk/error.hpp"

namespace crisk {

void check_caps(const Eigen::VectorXd& caps, double total) {
  if (caps.size() == 0) throw DomainError("empty cap vector");
  for (Eigen::Index i = 0; i < caps.size(); ++i) {
    if (!(caps[i] > 0.0 && caps[i] <= 1.0)) {
      throw DomainError("cap " + std::to_string(caps[i]) + " outside (0, 1]");
    }
  }
  if (caps.sum() < total - 1e-12) {
    throw InfeasibleError("caps sum to " + std::to_string(caps.sum()) +
                          " < 1; no fully invested portfolio exists");
  }
}

Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& y, const Eigen::VectorXd& caps,
                                       double total) {
  const Eigen::Index m = y.size();
  // Budget function g(tau) = sum clamp(y_i - tau, 0, cap_i) is
  // non-increasing, equals sum(caps) left of every breakpoint and 0 right
  // of every breakpoint.
  std::vector<double> points;
  points.reserve(static_cast<std::size_t>(2 * m));
  for (Eigen::Index i = 0; i < m; ++i) {
    points.push_back(y[i] - caps[i]);
    points.push_back(y[i]);
  }
  std::sort(points.begin(), points.end());

  auto budget = [&](double tau) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) s += std::clamp(y[i] - tau, 0.0, caps[i]);
    return s;
  };

  if (budget(points.front()) <= total) return caps;  // sum(caps) == total

  // Find consecutive breakpoints lo < hi with g(lo) > total >= g(hi).
  std::size_t lo = 0, hi = points.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (budget(points[mid]) > total) lo = mid;
    else hi = mid;
  }
  const double g_lo = budget(points[lo]);
  const double g_hi = budget(points[hi]);
  double tau = points[hi];
  if (g_lo != g_hi) tau = points[lo] + (g_lo - total) * (points[hi] - points[lo]) / (g_lo - g_hi);

  Eigen::VectorXd a(m);
  for (Eigen::Index i = 0; i < m; ++i) a[i] = std::clamp(y[i] - tau, 0.0, caps[i]);
  return a;
}

Eigen::VectorXd uniform_feasible_start(const Eigen::VectorXd& caps) {
  const auto m = static_cast<double>(caps.size());
  return project_capped_simplex(Eigen::VectorXd::Constant(caps.size(), 1.0 / m), caps);
}

}  // namespace crisk
