#pragma once

#include <Eigen/Dense>

namespace crisk {

/// Throws InfeasibleError when sum(caps) < total and DomainError when a
/// cap lies outside (0, 1].
void check_caps(const Eigen::VectorXd& caps, double total = 1.0);

/// Euclidean projection of `y` onto {a : sum(a) = total, 0 <= a <= caps}.
///
/// The projection is a_i = clamp(y_i - tau, 0, caps_i) for the unique
/// shift tau that meets the budget; tau is located exactly by sweeping the
/// 2M breakpoints of the piecewise-linear budget function.
[[nodiscard]] Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& y,
                                                     const Eigen::VectorXd& caps,
                                                     double total = 1.0);

/// Projection of the uniform vector: equal weights where caps allow, the
/// remainder spread evenly over the assets with room left.
[[nodiscard]] Eigen::VectorXd uniform_feasible_start(const Eigen::VectorXd& caps);

}  // namespace crisk
