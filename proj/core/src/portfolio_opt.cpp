#include "crisk/portfolio_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crisk/capped_simplex.hpp"
#include "crisk/error.hpp"

namespace crisk {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kBoundTol = 1e-12;

/// Convex objective with Lipschitz gradient on the scaled problem. The
/// local quadratic model must be exact in a neighbourhood of `a` (true for
/// quadratics and for piecewise quadratics away from kinks).
class Objective {
 public:
  virtual ~Objective() = default;
  [[nodiscard]] virtual double value(const VectorXd& a) const = 0;
  [[nodiscard]] virtual VectorXd gradient(const VectorXd& a) const = 0;
  virtual void local_model(const VectorXd& a, MatrixXd& hessian, VectorXd& linear) const = 0;
  [[nodiscard]] virtual double lipschitz() const = 0;
};

/// f(a) = a'Qa
class QuadraticForm final : public Objective {
 public:
  explicit QuadraticForm(MatrixXd q) : q_(std::move(q)) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(q_, Eigen::EigenvaluesOnly);
    lipschitz_ = 2.0 * std::max(es.eigenvalues().maxCoeff(), 0.0);
  }
  double value(const VectorXd& a) const override { return a.dot(q_ * a); }
  VectorXd gradient(const VectorXd& a) const override { return 2.0 * (q_ * a); }
  void local_model(const VectorXd&, MatrixXd& h, VectorXd& c) const override {
    h = 2.0 * q_;
    c = VectorXd::Zero(q_.rows());
  }
  double lipschitz() const override { return lipschitz_; }

 private:
  MatrixXd q_;
  double lipschitz_ = 0.0;
};

/// f(a) = sum_t max(-(D a)_t, 0)^2 for a column-centered scenario matrix D.
class DownsideSquares final : public Objective {
 public:
  explicit DownsideSquares(MatrixXd d) : d_(std::move(d)) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(d_.transpose() * d_, Eigen::EigenvaluesOnly);
    lipschitz_ = 2.0 * std::max(es.eigenvalues().maxCoeff(), 0.0);
  }
  double value(const VectorXd& a) const override {
    return (d_ * a).cwiseMin(0.0).squaredNorm();
  }
  VectorXd gradient(const VectorXd& a) const override {
    const VectorXd shortfall = (d_ * a).cwiseMin(0.0);
    return 2.0 * (d_.transpose() * shortfall);
  }
  void local_model(const VectorXd& a, MatrixXd& h, VectorXd& c) const override {
    const VectorXd pr = d_ * a;
    h = MatrixXd::Zero(d_.cols(), d_.cols());
    for (Eigen::Index t = 0; t < d_.rows(); ++t) {
      if (pr[t] < 0.0) h.noalias() += d_.row(t).transpose() * d_.row(t);
    }
    h *= 2.0;
    c = VectorXd::Zero(d_.cols());
  }
  double lipschitz() const override { return lipschitz_; }

 private:
  MatrixXd d_;
  double lipschitz_ = 0.0;
};

double natural_residual(const Objective& f, const VectorXd& a, const VectorXd& caps) {
  return (a - project_capped_simplex(a - f.gradient(a), caps)).lpNorm<Eigen::Infinity>();
}

/// Accelerated projected gradient (FISTA with gradient-based restart).
/// Updates `a` in place; returns iterations used.
int projected_gradient(const Objective& f, const VectorXd& caps, VectorXd& a,
                       const SolverOptions& options, double& residual, bool& converged) {
  residual = natural_residual(f, a, caps);
  converged = residual <= options.kkt_tolerance;
  const double lip = f.lipschitz();
  if (converged || lip <= 0.0) {
    converged = true;
    return 0;
  }
  const double step = 1.0 / lip;
  VectorXd y = a;
  double t = 1.0;
  int k = 0;
  while (k < options.max_iterations) {
    ++k;
    const VectorXd next = project_capped_simplex(y - step * f.gradient(y), caps);
    if ((y - next).dot(next - a) > 0.0) {
      t = 1.0;  // momentum is pointing uphill
      y = next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / t_next) * (next - a);
      t = t_next;
    }
    a = next;
    if (k % 10 == 0 || k == options.max_iterations) {
      residual = natural_residual(f, a, caps);
      if (residual <= options.kkt_tolerance) {
        converged = true;
        break;
      }
    }
  }
  return k;
}

enum class Bound { kFree, kLower, kUpper };

std::vector<Bound> classify(VectorXd& a, const VectorXd& caps) {
  std::vector<Bound> state(static_cast<std::size_t>(a.size()), Bound::kFree);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] <= kBoundTol) {
      a[i] = 0.0;
      state[static_cast<std::size_t>(i)] = Bound::kLower;
    } else if (a[i] >= caps[i] - kBoundTol) {
      a[i] = caps[i];
      state[static_cast<std::size_t>(i)] = Bound::kUpper;
    }
  }
  return state;
}

/// Least-squares multipliers for the equality rows on the given index set.
VectorXd equality_multipliers(const MatrixXd& eq, const VectorXd& grad,
                              const std::vector<Eigen::Index>& idx) {
  MatrixXd et(static_cast<Eigen::Index>(idx.size()), eq.rows());
  VectorXd g(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    et.row(static_cast<Eigen::Index>(k)) = eq.col(idx[k]).transpose();
    g[static_cast<Eigen::Index>(k)] = grad[idx[k]];
  }
  return et.completeOrthogonalDecomposition().solve(-g);
}

/// KKT residual: box natural residual of the Lagrangian gradient, with
/// equality multipliers fitted on the interior coordinates, plus the
/// equality violation.
double kkt_residual(const Objective& f, const MatrixXd& eq, const VectorXd& rhs,
                    const VectorXd& caps, const VectorXd& a) {
  const VectorXd g = f.gradient(a);
  std::vector<Eigen::Index> interior;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] > 1e-9 && a[i] < caps[i] - 1e-9) interior.push_back(i);
  }
  VectorXd nu;
  if (!interior.empty()) {
    nu = equality_multipliers(eq, g, interior);
  } else if (eq.rows() == 1) {
    // Vertex: any nu with g_i + nu >= 0 at lower bounds and <= 0 at caps
    // certifies optimality; the interval midpoint minimizes the violation.
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double t = -g[i] / eq(0, i);
      if (a[i] <= 1e-9) lo = std::max(lo, t);
      else hi = std::min(hi, t);
    }
    nu = VectorXd::Constant(1, std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : std::isfinite(lo) ? lo : hi);
  } else {
    interior.resize(static_cast<std::size_t>(a.size()));
    std::iota(interior.begin(), interior.end(), Eigen::Index{0});
    nu = equality_multipliers(eq, g, interior);
  }
  const VectorXd r = g + eq.transpose() * nu;
  double res = (eq * a - rhs).lpNorm<Eigen::Infinity>();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    res = std::max(res, std::abs(a[i] - std::clamp(a[i] - r[i], 0.0, caps[i])));
  }
  return res;
}

/// Primal active-set method on {eq a = rhs, 0 <= a <= caps} started from a
/// feasible `a`. Each step minimizes the local quadratic model on the
/// current face, moves as far as the box allows and either fixes the
/// blocking coordinate or releases the bound with the most negative
/// multiplier. Steps that would raise the true objective are halved, so
/// the method is monotone for piecewise-quadratic objectives as well.
int refine_active_set(const Objective& f, const MatrixXd& eq, const VectorXd& rhs,
                      const VectorXd& caps, VectorXd& a, int max_steps) {
  std::vector<Bound> state = classify(a, caps);
  const Eigen::Index k = eq.rows();
  int steps = 0;
  MatrixXd h;
  VectorXd c;
  while (steps < max_steps) {
    ++steps;
    std::vector<Eigen::Index> free_idx, fixed_idx;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      (state[static_cast<std::size_t>(i)] == Bound::kFree ? free_idx : fixed_idx).push_back(i);
    }
    const auto nf = static_cast<Eigen::Index>(free_idx.size());

    VectorXd step = VectorXd::Zero(nf);
    if (nf > 0) {
      f.local_model(a, h, c);
      MatrixXd kkt = MatrixXd::Zero(nf + k, nf + k);
      VectorXd b = VectorXd::Zero(nf + k);
      VectorXd eq_rhs = rhs;
      for (Eigen::Index j : fixed_idx) eq_rhs -= eq.col(j) * a[j];
      for (Eigen::Index p = 0; p < nf; ++p) {
        const Eigen::Index i = free_idx[static_cast<std::size_t>(p)];
        double lin = c[i];
        for (Eigen::Index j : fixed_idx) lin += h(i, j) * a[j];
        b[p] = -lin;
        for (Eigen::Index q = 0; q < nf; ++q) kkt(p, q) = h(i, free_idx[static_cast<std::size_t>(q)]);
        for (Eigen::Index r = 0; r < k; ++r) {
          kkt(p, nf + r) = eq(r, i);
          kkt(nf + r, p) = eq(r, i);
        }
      }
      b.tail(k) = eq_rhs;
      const VectorXd sol = kkt.completeOrthogonalDecomposition().solve(b);
      for (Eigen::Index p = 0; p < nf; ++p) step[p] = sol[p] - a[free_idx[static_cast<std::size_t>(p)]];
    }

    if (step.lpNorm<Eigen::Infinity>() <= 1e-15) {
      // Face optimum reached: check signs of the bound multipliers.
      const VectorXd g = f.gradient(a);
      const VectorXd nu = equality_multipliers(eq, g, free_idx.empty() ? fixed_idx : free_idx);
      const VectorXd r = g + eq.transpose() * nu;
      Eigen::Index worst = -1;
      double worst_violation = 1e-11;
      for (Eigen::Index j : fixed_idx) {
        const double v = state[static_cast<std::size_t>(j)] == Bound::kLower ? -r[j] : r[j];
        if (v > worst_violation) {
          worst_violation = v;
          worst = j;
        }
      }
      if (worst < 0) break;
      state[static_cast<std::size_t>(worst)] = Bound::kFree;
      continue;
    }

    double alpha = 1.0;
    Eigen::Index blocking = -1;
    Bound blocking_bound = Bound::kFree;
    for (Eigen::Index p = 0; p < nf; ++p) {
      const Eigen::Index i = free_idx[static_cast<std::size_t>(p)];
      if (step[p] < 0.0 && a[i] + alpha * step[p] < 0.0) {
        alpha = a[i] / -step[p];
        blocking = i;
        blocking_bound = Bound::kLower;
      } else if (step[p] > 0.0 && a[i] + alpha * step[p] > caps[i]) {
        alpha = (caps[i] - a[i]) / step[p];
        blocking = i;
        blocking_bound = Bound::kUpper;
      }
    }

    const double f0 = f.value(a);
    VectorXd trial = a;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      trial = a;
      for (Eigen::Index p = 0; p < nf; ++p) trial[free_idx[static_cast<std::size_t>(p)]] += alpha * step[p];
      if (f.value(trial) <= f0 + 1e-15 * std::max(1.0, std::abs(f0))) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
      blocking = -1;
    }
    if (!accepted) break;
    a = trial;
    if (blocking >= 0) {
      a[blocking] = blocking_bound == Bound::kLower ? 0.0 : caps[blocking];
      state[static_cast<std::size_t>(blocking)] = blocking_bound;
    }
  }
  // Clean rounding drift so the box holds exactly.
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = std::clamp(a[i], 0.0, caps[i]);
  return steps;
}

void check_square_psd(const MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw DomainError(std::string(what) + " must be square");
  const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError(std::string(what) + " must be symmetric");
  }
  if (min_eigenvalue(m) < -kPsdTolerance * scale) {
    throw DomainError(std::string(what) + " is not positive semidefinite");
  }
}

/// Shared driver: scale, gradient phase, refinement, report.
OptimizedPortfolio solve_capped(const Objective& scaled, double scale, const VectorXd& caps,
                                const SolverOptions& options) {
  OptimizedPortfolio out;
  out.portfolio.caps = caps;
  VectorXd a = uniform_feasible_start(caps);
  MatrixXd eq = MatrixXd::Ones(1, caps.size());
  VectorXd rhs = VectorXd::Ones(1);

  double residual = 0.0;
  bool converged = false;
  out.report.iterations = projected_gradient(scaled, caps, a, options, residual, converged);
  if (options.refine && scaled.lipschitz() > 0.0) {
    VectorXd refined = a;
    out.report.refine_steps =
        refine_active_set(scaled, eq, rhs, caps, refined, 4 * static_cast<int>(caps.size()) + 50);
    if (scaled.value(refined) <= scaled.value(a) + 1e-15 * std::max(1.0, scaled.value(a))) {
      a = refined;
    }
  }
  out.report.kkt_residual = kkt_residual(scaled, eq, rhs, caps, a);
  out.report.converged = converged || out.report.kkt_residual <= options.kkt_tolerance;
  out.report.objective = scale * scaled.value(a);
  out.portfolio.weights = std::move(a);
  return out;
}

VectorXd greedy_extreme(const VectorXd& mu, const VectorXd& caps, bool maximize) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(mu.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return maximize ? mu[x] > mu[y] : mu[x] < mu[y];
  });
  VectorXd a = VectorXd::Zero(mu.size());
  double left = 1.0;
  for (Eigen::Index i : order) {
    const double take = std::min(caps[i], left);
    a[i] = take;
    left -= take;
    if (left <= 0.0) break;
  }
  return a;
}

}  // namespace

void Portfolio::validate() const {
  if (weights.size() != caps.size() ||
      (!symbols.empty() && symbols.size() != static_cast<std::size_t>(weights.size()))) {
    throw DomainError("portfolio shape mismatch");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-8) throw DomainError("portfolio weights do not sum to 1");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] < -1e-10 || weights[i] > caps[i] + 1e-10) {
      throw DomainError("portfolio weight outside [0, cap]");
    }
  }
}

OptimizedPortfolio min_variance(const Eigen::MatrixXd& cov, const Eigen::VectorXd& caps,
                                const SolverOptions& options) {
  if (cov.rows() != caps.size()) throw DomainError("covariance and caps sizes differ");
  check_caps(caps);
  check_square_psd(cov, "covariance");

  const double scale = cov.diagonal().maxCoeff();
  if (!(scale > 0.0)) {
    OptimizedPortfolio out;
    out.portfolio.caps = caps;
    out.portfolio.weights = uniform_feasible_start(caps);
    out.report.degenerate_objective = true;
    out.report.converged = true;
    return out;
  }
  const QuadraticForm scaled(cov / scale);
  return solve_capped(scaled, scale, caps, options);
}

OptimizedPortfolio min_variance(const RiskModel& model, const Eigen::VectorXd& caps,
                                const SolverOptions& options) {
  auto out = min_variance(model.cov, caps, options);
  out.portfolio.symbols = model.symbols;
  return out;
}

double portfolio_semivariance(const Eigen::MatrixXd& returns, const Eigen::VectorXd& weights) {
  const VectorXd rp = returns * weights;
  const double mean = rp.mean();
  return (rp.array() - mean).min(0.0).square().sum() / static_cast<double>(rp.size());
}

double portfolio_variance_population(const Eigen::MatrixXd& returns, const Eigen::VectorXd& weights) {
  const VectorXd rp = returns * weights;
  const double mean = rp.mean();
  return (rp.array() - mean).square().sum() / static_cast<double>(rp.size());
}

OptimizedPortfolio min_semivariance(const ReturnMatrix& returns, const Eigen::VectorXd& caps,
                                    SemivarianceMethod method, const SolverOptions& options) {
  if (returns.n_obs() < 2) throw InsufficientDataError("semivariance needs at least 2 observations");
  if (static_cast<Eigen::Index>(returns.n_assets()) != caps.size()) {
    throw DomainError("returns and caps sizes differ");
  }
  check_caps(caps);

  if (method == SemivarianceMethod::kSemicovMatrix) {
    const RiskModel model = estimate_risk_model(returns);
    auto out = min_variance(model.semicov, caps, options);
    out.portfolio.symbols = returns.symbols;
    out.report.semicov_approximation = true;
    return out;
  }

  const auto t = static_cast<double>(returns.n_obs());
  const MatrixXd centered = returns.returns.rowwise() - returns.returns.colwise().mean();
  const double scale = (centered.colwise().squaredNorm() / t).maxCoeff();
  OptimizedPortfolio out;
  if (!(scale > 0.0)) {
    out.portfolio.caps = caps;
    out.portfolio.weights = uniform_feasible_start(caps);
    out.report.degenerate_objective = true;
    out.report.converged = true;
  } else {
    const DownsideSquares scaled(centered / std::sqrt(t * scale));
    out = solve_capped(scaled, scale, caps, options);
    out.report.objective = portfolio_semivariance(returns.returns, out.portfolio.weights);
  }
  out.portfolio.symbols = returns.symbols;
  return out;
}

double max_achievable_return(const RiskModel& model, const Eigen::VectorXd& caps) {
  check_caps(caps);
  return kDaysPerYear * model.mu.dot(greedy_extreme(model.mu, caps, true));
}

std::optional<OptimizedPortfolio> min_variance_for_return(const RiskModel& model,
                                                          const Eigen::VectorXd& caps,
                                                          double annual_target,
                                                          const SolverOptions& options) {
  const OptimizedPortfolio mv = min_variance(model, caps, options);
  const VectorXd mu = kDaysPerYear * model.mu;
  const double r_mv = mu.dot(mv.portfolio.weights);
  const VectorXd hi = greedy_extreme(mu, caps, true);
  const VectorXd lo = greedy_extreme(mu, caps, false);
  const double r_hi = mu.dot(hi), r_lo = mu.dot(lo);
  const double tol = 1e-12 * std::max(1.0, mu.cwiseAbs().maxCoeff());

  if (annual_target > r_hi + tol || annual_target < r_lo - tol) return std::nullopt;
  if (std::abs(annual_target - r_mv) <= tol) return mv;

  const VectorXd& ext = annual_target > r_mv ? hi : lo;
  const double r_ext = mu.dot(ext);
  const double theta = std::clamp((annual_target - r_mv) / (r_ext - r_mv), 0.0, 1.0);
  VectorXd a = (1.0 - theta) * mv.portfolio.weights + theta * ext;

  const double scale = model.cov.diagonal().maxCoeff();
  const double mu_scale = std::max(mu.cwiseAbs().maxCoeff(), 1e-300);
  MatrixXd eq(2, caps.size());
  eq.row(0).setOnes();
  eq.row(1) = (mu / mu_scale).transpose();
  VectorXd rhs(2);
  rhs << 1.0, annual_target / mu_scale;

  OptimizedPortfolio out;
  out.portfolio.symbols = model.symbols;
  out.portfolio.caps = caps;
  if (scale > 0.0) {
    const QuadraticForm scaled(model.cov / scale);
    out.report.refine_steps =
        refine_active_set(scaled, eq, rhs, caps, a, 20 * static_cast<int>(caps.size()) + 100);
    out.report.kkt_residual = kkt_residual(scaled, eq, rhs, caps, a);
  } else {
    out.report.degenerate_objective = true;
  }
  out.report.iterations = out.report.refine_steps;
  out.report.converged = out.report.kkt_residual <= options.kkt_tolerance;
  out.report.objective = a.dot(model.cov * a);
  if (std::abs(mu.dot(a) - annual_target) > 1e-8 * std::max(1.0, std::abs(annual_target))) {
    return std::nullopt;
  }
  out.portfolio.weights = std::move(a);
  return out;
}

std::vector<FrontierPoint> efficient_frontier(const RiskModel& model, const Eigen::VectorXd& caps,
                                              int n_points, double risk_free,
                                              const SolverOptions& options) {
  if (n_points < 2) throw DomainError("efficient frontier needs at least 2 points");
  const OptimizedPortfolio mv = min_variance(model, caps, options);
  const double r_mv = kDaysPerYear * model.mu.dot(mv.portfolio.weights);
  const double r_max = std::max(max_achievable_return(model, caps), r_mv);
  const bool flat = r_max - r_mv <= 1e-12 * std::max(1.0, std::abs(r_max));

  auto make_point = [&](double target, const VectorXd& w) {
    FrontierPoint p;
    p.target_return = target;
    p.weights = w;
    p.volatility = std::sqrt(std::max(0.0, kDaysPerYear * w.dot(model.cov * w)));
    p.sharpe = p.volatility > 0.0 ? sharpe_ratio(kDaysPerYear * model.mu.dot(w), p.volatility, risk_free)
                                  : kNaN;
    return p;
  };

  std::vector<FrontierPoint> points;
  points.reserve(static_cast<std::size_t>(n_points));
  for (int k = 0; k < n_points; ++k) {
    const double target =
        flat ? r_mv : r_mv + (r_max - r_mv) * static_cast<double>(k) / static_cast<double>(n_points - 1);
    if (flat || k == 0) {
      points.push_back(make_point(target, mv.portfolio.weights));
      continue;
    }
    const auto solved = min_variance_for_return(model, caps, target, options);
    if (!solved) {
      FrontierPoint p;
      p.target_return = target;
      p.volatility = kNaN;
      p.sharpe = kNaN;
      p.feasible = false;
      points.push_back(std::move(p));
      continue;
    }
    points.push_back(make_point(target, solved->portfolio.weights));
  }
  return points;
}

double sharpe_ratio(double mu_annual, double vol_annual, double risk_free) {
  if (!(vol_annual > 0.0)) throw UndefinedRatioError("Sharpe ratio undefined for zero volatility");
  return (mu_annual - risk_free) / vol_annual;
}

std::vector<std::string> filter_universe(const std::vector<UniverseEntry>& candidates,
                                         const UniverseFilter& filter, Date as_of) {
  if (filter.max_rank < 1) throw DomainError("max_rank must be >= 1");
  if (!(filter.min_age_years >= 0.0)) throw DomainError("min_age_years must be >= 0");

  const double whole = std::floor(filter.min_age_years);
  const double frac_days = std::round((filter.min_age_years - whole) * 365.25);
  const Date cutoff = minus_years(as_of, static_cast<int>(whole)) -
                      std::chrono::days{static_cast<int>(frac_days)};

  std::vector<std::string> kept;
  for (const auto& e : candidates) {
    if (e.rank > filter.max_rank) continue;
    if (filter.exclude_stablecoins && e.stablecoin) continue;
    if (filter.min_age_years > 0.0 && (!e.launch_date || *e.launch_date > cutoff)) continue;
    kept.push_back(e.symbol);
  }
  return kept;
}

}  // namespace crisk
