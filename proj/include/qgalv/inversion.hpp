#pragma once

// Regularized deconvolution of a scan N(Omega) into S(w).
//
// S is represented by its samples on a uniform w grid with piecewise-linear interpolation,
// so K S reproduces the forward map exactly for piecewise-linear spectra (product
// integration of the hat functions against the kernel).
//
// Tikhonov:  minimize |W (K S - N)|^2 + (lambda s_A)^2 |L S|^2
// where W = diag(1/sigma), L is the identity or the second difference, and s_A = |W K|_2 / |L|_2
// makes lambda dimensionless.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qgalv/error.hpp"
#include "qgalv/kernel.hpp"
#include "qgalv/quadrature.hpp"
#include "qgalv/spectra.hpp"

namespace qgalv {

enum class Regularizer { Identity, SecondDifference };

[[nodiscard]] inline std::string to_string(Regularizer r) {
  return r == Regularizer::Identity ? "identity" : "second_difference";
}

[[nodiscard]] inline Regularizer regularizer_from_string(const std::string& s) {
  if (s == "identity") return Regularizer::Identity;
  if (s == "second_difference") return Regularizer::SecondDifference;
  throw ValidationError("unknown regularizer '" + s + "' (expected identity or second_difference)");
}

namespace detail {

inline void require_uniform(std::span<const double> g, const char* what) {
  require(g.size() >= 3, std::string(what) + ": grid needs at least three points");
  const double h = (g.back() - g.front()) / static_cast<double>(g.size() - 1);
  require(h > 0, std::string(what) + ": grid must be increasing");
  for (std::size_t i = 1; i < g.size(); ++i)
    require(std::abs(g[i] - g[i - 1] - h) <= 1e-6 * h, std::string(what) + ": grid must be uniform");
}

/// Adds the hat-function weights of g(w) = T q(w) sampled at Omega - w bw over [lo, hi] in s.
inline void accumulate_hats(Eigen::MatrixXd& K, Eigen::Index row, const ResponseKernel& k, double T, double omega,
                            std::span<const double> grid, double s_lo, double s_hi) {
  const double bw = k.bandwidth();
  const double w0 = grid.front();
  const double h = grid[1] - grid[0];
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
  const auto rule = quad::gauss_legendre(10, s_lo, s_hi);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double s = rule.nodes[q];
    const double x = (omega - s * s * bw - w0) / h;
    const auto j = static_cast<std::ptrdiff_t>(std::floor(x));
    const double t = x - static_cast<double>(j);
    const double v = rule.weights[q] * T * k.n_det() * k.level_integrand(s);
    if (j >= 0 && j < n) K(row, j) += (1 - t) * v;
    if (j + 1 >= 0 && j + 1 < n) K(row, j + 1) += t * v;
  }
}

}  // namespace detail

/// Discretized forward map: (K S)_i = N(Omega_i) for S linear between the w grid points.
/// LongTime uses the kernel weight directly; Full uses a tabulated resolution function.
[[nodiscard]] inline Eigen::MatrixXd build_kernel_matrix(std::span<const double> w_grid,
                                                         std::span<const double> omega_grid,
                                                         const ResponseKernel& k, double T, Regime regime) {
  detail::require_uniform(w_grid, "inversion omega grid");
  detail::require_uniform(omega_grid, "inversion Omega grid");
  detail::require(T > 0, "inversion: T must be positive");
  detail::require(!k.is_zero(), "inversion: zero kernel");
  const double bw = k.bandwidth();
  const double h = w_grid[1] - w_grid[0];
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(omega_grid.size()),
                                            static_cast<Eigen::Index>(w_grid.size()));
  if (regime == Regime::LongTime) {
    if (w_grid.front() > omega_grid.front() - bw + 1e-9 * bw || w_grid.back() < omega_grid.back() - 1e-9 * bw)
      throw ValidationError("inversion: omega grid must cover [Omega_min - mu/hbar, Omega_max]");
    const auto& lw = k.level_weights();
    const auto table = lw.empty() ? quad::linspace(0.0, 1.0, 17) : level_grid(lw.size());
    for (std::size_t i = 0; i < omega_grid.size(); ++i) {
      const double om = omega_grid[i];
      std::vector<double> edges = table;
      for (double wj : w_grid) {
        const double w = (om - wj) / bw;
        if (w > 0 && w < 1) edges.push_back(std::sqrt(w));
      }
      std::sort(edges.begin(), edges.end());
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
      for (std::size_t e = 0; e + 1 < edges.size(); ++e)
        detail::accumulate_hats(K, static_cast<Eigen::Index>(i), k, T, om, w_grid, edges[e], edges[e + 1]);
    }
    return K;
  }
  // Full: K_ij = (T / 2pi) int dw hat_j(w) R(Omega_i - w), R tabulated on a fine grid.
  const double step = std::min(2 * pi / T, bw) / 32.0;
  const double nu_lo = omega_grid.front() - w_grid.back() - h;
  const double nu_hi = omega_grid.back() - w_grid.front() + h;
  const auto n_nu = static_cast<std::size_t>(std::ceil((nu_hi - nu_lo) / step)) + 1;
  detail::require(n_nu <= 4000000, "inversion: resolution table too large; reduce the grid span or T");
  const auto nu = quad::linspace(nu_lo, nu_lo + step * static_cast<double>(n_nu - 1), n_nu);
  const auto rule_r = resolution_rule(k, T);
  std::vector<double> R(nu.size());
  for (std::size_t i = 0; i < nu.size(); ++i) R[i] = resolution_at(k, T, nu[i], rule_r);
  auto r_at = [&](double x) {
    const double p = (x - nu_lo) / step;
    const auto j = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::floor(p)), 0,
                                              static_cast<std::ptrdiff_t>(nu.size()) - 2);
    const double t = p - static_cast<double>(j);
    return (1 - t) * R[static_cast<std::size_t>(j)] + t * R[static_cast<std::size_t>(j) + 1];
  };
  const auto sub = static_cast<std::size_t>(std::ceil(h / step)) + 1;
  for (std::size_t j = 0; j < w_grid.size(); ++j) {
    const double lo = j > 0 ? w_grid[j - 1] : w_grid[j];
    const double hi = j + 1 < w_grid.size() ? w_grid[j + 1] : w_grid[j];
    std::vector<double> edges{lo, w_grid[j], hi};
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    const auto rule = quad::composite_on(edges, sub);
    for (std::size_t i = 0; i < omega_grid.size(); ++i) {
      double sum = 0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double w = rule.nodes[q];
        const double hat = 1.0 - std::abs(w - w_grid[j]) / h;
        sum += rule.weights[q] * hat * r_at(omega_grid[i] - w);
      }
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = T / (2 * pi) * sum;
    }
  }
  return K;
}

struct InverseProblem {
  Eigen::MatrixXd K;
  Eigen::VectorXd data;
  Eigen::VectorXd sigma;  ///< per-point standard error; empty means unit weights
};

struct DeconvolveOptions {
  std::optional<double> lambda;  ///< fixed dimensionless lambda; unset selects by the discrepancy principle
  Regularizer regularizer = Regularizer::Identity;
  bool nonnegative = false;
  double discrepancy_factor = 1.0;  ///< target chi^2 = factor * n_data
  std::size_t max_iterations = 2000;  ///< active-set steps for the non-negative solve
};

struct Diagnostics {
  double lambda = 0;
  double residual_norm = 0;  ///< |W (K S - N)|
  double solution_norm = 0;  ///< |L S|
  double chi2 = 0;
  double condition = 0;  ///< sigma_max / sigma_min of W K
  bool discrepancy_met = true;
  std::size_t iterations = 0;
};

struct Reconstruction {
  Eigen::VectorXd spectrum;
  Diagnostics diagnostics;
};

struct LambdaRow {
  double lambda = 0;
  double residual_norm = 0;
  double solution_norm = 0;
};

/// Tikhonov solver for one problem. Factorizations are shared across lambda values.
class TikhonovSolver {
 public:
  explicit TikhonovSolver(InverseProblem problem, Regularizer reg = Regularizer::Identity)
      : p_(std::move(problem)), reg_(reg) {
    const auto m = p_.K.rows();
    const auto n = p_.K.cols();
    detail::require(m > 0 && n > 0 && p_.data.size() == m, "deconvolve: data length must match kernel rows");
    if (p_.sigma.size() == 0) p_.sigma = Eigen::VectorXd::Ones(m);
    detail::require(p_.sigma.size() == m, "deconvolve: sigma length must match data");
    const double floor = std::max(p_.sigma.maxCoeff() * 1e-6, std::numeric_limits<double>::min());
    for (Eigen::Index i = 0; i < m; ++i) {
      detail::require(std::isfinite(p_.sigma(i)) && p_.sigma(i) >= 0, "deconvolve: invalid standard error");
      p_.sigma(i) = std::max(p_.sigma(i), floor);
    }
    A_ = p_.sigma.cwiseInverse().asDiagonal() * p_.K;
    b_ = p_.data.cwiseQuotient(p_.sigma);
    svd_.compute(A_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd_.singularValues();
    norm_a_ = sv(0);
    // More unknowns than data leaves a null space.
    condition_ = n <= m && sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (reg_ == Regularizer::Identity) {
      L_ = Eigen::MatrixXd::Identity(n, n);
      norm_l_ = 1.0;
    } else {
      detail::require(n >= 3, "second-difference regularizer needs at least three unknowns");
      L_ = Eigen::MatrixXd::Zero(n - 2, n);
      for (Eigen::Index i = 0; i + 2 < n; ++i) {
        L_(i, i) = 1;
        L_(i, i + 1) = -2;
        L_(i, i + 2) = 1;
      }
      norm_l_ = Eigen::JacobiSVD<Eigen::MatrixXd>(L_).singularValues()(0);
    }
  }

  [[nodiscard]] double condition() const { return condition_; }
  [[nodiscard]] Eigen::Index data_size() const { return A_.rows(); }

  /// Solution for one dimensionless lambda (>= 0).
  [[nodiscard]] Reconstruction solve(double lambda, bool nonnegative, std::size_t max_iterations = 2000) const {
    detail::require(lambda >= 0 && std::isfinite(lambda), "deconvolve: lambda must be >= 0");
    if (lambda == 0 && condition_ > 1e12)
      throw ValidationError("deconvolve: lambda = 0 on an ill-conditioned kernel (condition " +
                            std::to_string(condition_) + ")");
    const double lam = lambda * norm_a_ / norm_l_;
    Reconstruction r;
    if (nonnegative) {
      r.diagnostics.iterations = project(r.spectrum, lam, max_iterations);
    } else {
      r.spectrum = unconstrained(lam);
    }
    fill(r, lambda);
    return r;
  }

 private:
  InverseProblem p_;
  Regularizer reg_;
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  Eigen::MatrixXd L_;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_;
  double norm_a_ = 1;
  double norm_l_ = 1;
  double condition_ = 1;

  [[nodiscard]] Eigen::VectorXd unconstrained(double lam) const {
    if (reg_ == Regularizer::Identity) {
      const auto& sv = svd_.singularValues();
      Eigen::VectorXd coef = svd_.matrixU().transpose() * b_;
      for (Eigen::Index k = 0; k < sv.size(); ++k) {
        const double d = sv(k) * sv(k) + lam * lam;
        coef(k) = d > 0 ? coef(k) * sv(k) / d : 0.0;
      }
      return svd_.matrixV() * coef;
    }
    Eigen::MatrixXd stacked(A_.rows() + L_.rows(), A_.cols());
    stacked << A_, lam * L_;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(stacked.rows());
    rhs.head(b_.size()) = b_;
    return stacked.colPivHouseholderQr().solve(rhs);
  }

  /// Lawson-Hanson active set on the stacked system [A; lam L] x = [b; 0], x >= 0.
  std::size_t project(Eigen::VectorXd& x, double lam, std::size_t max_iterations) const {
    const Eigen::Index n = A_.cols();
    Eigen::MatrixXd M(A_.rows() + L_.rows(), n);
    M << A_, lam * L_;
    // Unit-norm columns; x is rescaled on return.
    Eigen::VectorXd scale = M.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(scale(j) > 0)) scale(j) = 1;
      M.col(j) /= scale(j);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M.rows());
    rhs.head(b_.size()) = b_;
    const double tol = 10 * std::numeric_limits<double>::epsilon() * M.cwiseAbs().colwise().sum().maxCoeff() *
                       static_cast<double>(std::max(M.rows(), n));
    x = Eigen::VectorXd::Zero(n);
    std::vector<bool> active(static_cast<std::size_t>(n), false);
    auto solve_active = [&]() {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index j = 0; j < n; ++j)
        if (active[static_cast<std::size_t>(j)]) idx.push_back(j);
      Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
      if (idx.empty()) return full;
      Eigen::MatrixXd sub(M.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = M.col(idx[k]);
      const Eigen::VectorXd z = sub.colPivHouseholderQr().solve(rhs);
      for (std::size_t k = 0; k < idx.size(); ++k) full(idx[k]) = z(static_cast<Eigen::Index>(k));
      return full;
    };
    // A column whose entry comes back non-positive right after entering is a round-off pick;
    // it stays out until the active set changes.
    std::vector<bool> skip(static_cast<std::size_t>(n), false);
    std::size_t it = 0;
    for (;;) {
      const Eigen::VectorXd w = M.transpose() * (rhs - M * x);
      Eigen::Index pick = -1;
      double best = tol;
      for (Eigen::Index j = 0; j < n; ++j)
        if (!active[static_cast<std::size_t>(j)] && !skip[static_cast<std::size_t>(j)] && w(j) > best) {
          best = w(j);
          pick = j;
        }
      if (pick < 0) {
        x = x.cwiseQuotient(scale);
        return it;
      }
      active[static_cast<std::size_t>(pick)] = true;
      bool entering = true;
      for (;;) {
        if (++it > max_iterations)
          throw NumericalError("deconvolve: non-negative solver did not converge within " +
                               std::to_string(max_iterations) + " iterations");
        const Eigen::VectorXd z = solve_active();
        if (entering && z(pick) <= 0) {
          active[static_cast<std::size_t>(pick)] = false;
          skip[static_cast<std::size_t>(pick)] = true;
          break;
        }
        if (entering) std::fill(skip.begin(), skip.end(), false);
        entering = false;
        double alpha = 1;
        bool feasible = true;
        for (Eigen::Index j = 0; j < n; ++j)
          if (active[static_cast<std::size_t>(j)] && z(j) <= 0) {
            feasible = false;
            alpha = std::min(alpha, x(j) / (x(j) - z(j)));
          }
        if (feasible) {
          x = z;
          break;
        }
        x += alpha * (z - x);
        const double floor = 1e-14 * x.cwiseAbs().maxCoeff();
        for (Eigen::Index j = 0; j < n; ++j)
          if (active[static_cast<std::size_t>(j)] && x(j) <= floor) {
            active[static_cast<std::size_t>(j)] = false;
            x(j) = 0;
          }
      }
    }
  }

  void fill(Reconstruction& r, double lambda) const {
    auto& d = r.diagnostics;
    d.lambda = lambda;
    d.residual_norm = (A_ * r.spectrum - b_).norm();
    d.solution_norm = (L_ * r.spectrum).norm();
    d.chi2 = d.residual_norm * d.residual_norm;
    d.condition = condition_;
  }
};

/// Tikhonov reconstruction. Without a fixed lambda, the largest lambda with
/// chi^2 <= discrepancy_factor * n_data is found by bisection in log lambda;
/// diagnostics.discrepancy_met is false if even lambda = 1e-12 misses the target.
[[nodiscard]] inline Reconstruction deconvolve(const InverseProblem& problem, const DeconvolveOptions& opt = {}) {
  const TikhonovSolver solver(problem, opt.regularizer);
  auto at = [&](double lam) { return solver.solve(lam, opt.nonnegative, opt.max_iterations); };
  if (opt.lambda) return at(*opt.lambda);
  const double target = opt.discrepancy_factor * static_cast<double>(solver.data_size());
  double lo = std::log(1e-12);
  double hi = std::log(1e2);
  auto low = at(std::exp(lo));
  if (low.diagnostics.chi2 > target) {
    low.diagnostics.discrepancy_met = false;
    return low;
  }
  auto high = at(std::exp(hi));
  if (high.diagnostics.chi2 <= target) return high;
  for (int i = 0; i < 60 && hi - lo > 1e-3; ++i) {
    const double mid = 0.5 * (lo + hi);
    auto r = at(std::exp(mid));
    if (r.diagnostics.chi2 <= target) {
      lo = mid;
      low = std::move(r);
    } else {
      hi = mid;
    }
  }
  return low;
}

/// L-curve table. Throws NumericalError unless the residual grows and the solution norm
/// shrinks along the (increasing) lambda grid.
[[nodiscard]] inline std::vector<LambdaRow> lambda_scan(const InverseProblem& problem, std::span<const double> lambdas,
                                                        const DeconvolveOptions& opt = {}) {
  detail::require(!lambdas.empty(), "lambda_scan: empty lambda grid");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    detail::require(lambdas[i] > 0, "lambda_scan: lambda values must be positive");
    if (i) detail::require(lambdas[i] > lambdas[i - 1], "lambda_scan: lambda grid must increase");
  }
  const TikhonovSolver solver(problem, opt.regularizer);
  std::vector<LambdaRow> rows;
  for (double lam : lambdas) {
    const auto r = solver.solve(lam, opt.nonnegative, opt.max_iterations);
    rows.push_back({lam, r.diagnostics.residual_norm, r.diagnostics.solution_norm});
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double rtol = 1e-9 * std::max(rows[i].residual_norm, rows[i - 1].residual_norm) + 1e-300;
    const double stol = 1e-9 * std::max(rows[i].solution_norm, rows[i - 1].solution_norm) + 1e-300;
    if (rows[i].residual_norm < rows[i - 1].residual_norm - rtol ||
        rows[i].solution_norm > rows[i - 1].solution_norm + stol) {
      std::ostringstream os;
      os << "lambda_scan: L-curve not monotone between lambda " << rows[i - 1].lambda << " and " << rows[i].lambda;
      throw NumericalError(os.str());
    }
  }
  return rows;
}

/// Index of the L-curve corner: largest Menger curvature of (log residual, log solution norm).
[[nodiscard]] inline std::size_t lcurve_corner(std::span<const LambdaRow> rows) {
  detail::require(!rows.empty(), "lcurve_corner: empty table");
  if (rows.size() < 3) return 0;
  std::size_t best = 1;
  double best_k = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    auto pt = [&](std::size_t j) {
      return Eigen::Vector2d(std::log(std::max(rows[j].residual_norm, 1e-300)),
                             std::log(std::max(rows[j].solution_norm, 1e-300)));
    };
    const Eigen::Vector2d a = pt(i - 1), b = pt(i), c = pt(i + 1);
    const double area2 = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    const double denom = (b - a).norm() * (c - b).norm() * (c - a).norm();
    // Increasing lambda walks down then right, so the corner turns counter-clockwise.
    const double kappa = denom > 0 ? 2 * area2 / denom : 0.0;
    if (kappa > best_k) {
      best_k = kappa;
      best = i;
    }
  }
  return best;
}

}  // namespace qgalv
