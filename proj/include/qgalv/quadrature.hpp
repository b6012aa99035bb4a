#pragma once

// Thin layer over Boost.Math quadrature: adaptive Gauss-Kronrod with a hard convergence
// check, and fixed composite Gauss-Legendre rules for tabulating integrands.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qgalv/error.hpp"

namespace qgalv::quad {

struct Estimate {
  double value = 0;
  double error = 0;
  double l1 = 0;
};

namespace detail {

template <class F>
Estimate gk31(F&& f, double a, double b, double rel_tol, unsigned max_depth) {
  Estimate e;
  if (a == b) return e;
  e.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, rel_tol,
                                                                          &e.error, &e.l1);
  return e;
}

inline void check(const Estimate& e, double a, double b, double rel_tol, double abs_floor) {
  const double allowed = 50 * rel_tol * e.l1 + abs_floor;
  if (!std::isfinite(e.value) || e.error > allowed) {
    std::ostringstream msg;
    msg << "adaptive quadrature did not converge on [" << a << ", " << b << "]: error " << e.error
        << " vs allowed " << allowed;
    throw NumericalError(msg.str());
  }
}

}  // namespace detail

/// Adaptive 31-point Gauss-Kronrod on [a, b]. Throws NumericalError if the error estimate
/// exceeds rel_tol relative to the L1 norm of the integrand (plus an absolute floor).
template <class F>
Estimate adaptive(F&& f, double a, double b, double rel_tol, double abs_floor = 0.0,
                  unsigned max_depth = 20) {
  const Estimate e = detail::gk31(f, a, b, rel_tol, max_depth);
  detail::check(e, a, b, rel_tol, abs_floor);
  return e;
}

/// Adaptive integration split at interior breakpoints (kinks, peaks, discontinuities).
/// Convergence is judged on the whole interval: a piece carrying a small share of the L1
/// norm gets a proportionally looser tolerance.
template <class F>
Estimate adaptive_split(F&& f, double a, double b, std::vector<double> breaks, double rel_tol,
                        double abs_floor = 0.0) {
  std::erase_if(breaks, [&](double x) { return !(x > a && x < b); });
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  breaks.insert(breaks.begin(), a);
  breaks.push_back(b);
  std::vector<double> share(breaks.size() - 1);
  double l1 = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    share[i] = detail::gk31(f, breaks[i], breaks[i + 1], rel_tol, 0).l1;
    l1 += share[i];
  }
  Estimate total;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double tol = share[i] > 0 ? std::min(0.1, rel_tol * l1 / share[i]) : 0.1;
    const Estimate part = detail::gk31(f, breaks[i], breaks[i + 1], tol, 20);
    total.value += part.value;
    total.error += part.error;
    total.l1 += part.l1;
  }
  detail::check(total, a, b, rel_tol, abs_floor);
  return total;
}

/// Nodes and weights of a composite Gauss-Legendre rule.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }

  template <class F>
  auto integrate(F&& f) const {
    using R = decltype(f(0.0));
    R sum{};
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
    return sum;
  }
};

namespace detail {

template <unsigned Points>
void append_panel(Rule& rule, double lo, double hi) {
  using G = boost::math::quadrature::gauss<double, Points>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  // Boost stores the non-negative half of a symmetric rule; x[0] == 0 for odd Points.
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0) {
      rule.nodes.push_back(mid);
      rule.weights.push_back(half * w[i]);
      continue;
    }
    rule.nodes.push_back(mid - half * x[i]);
    rule.weights.push_back(half * w[i]);
    rule.nodes.push_back(mid + half * x[i]);
    rule.weights.push_back(half * w[i]);
  }
}

}  // namespace detail

/// Composite 10-point Gauss-Legendre rule on [a, b] with `panels` equal panels.
[[nodiscard]] inline Rule composite(double a, double b, std::size_t panels) {
  Rule rule;
  panels = std::max<std::size_t>(panels, 1);
  rule.nodes.reserve(panels * 10);
  rule.weights.reserve(panels * 10);
  const double h = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    const double hi = (p + 1 == panels) ? b : lo + h;
    detail::append_panel<10>(rule, lo, hi);
  }
  return rule;
}

/// Composite rule over the panels delimited by `edges` (sorted), each split into `sub` panels.
[[nodiscard]] inline Rule composite_on(std::span<const double> edges, std::size_t sub = 1) {
  Rule rule;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double h = (edges[i + 1] - edges[i]) / static_cast<double>(sub);
    for (std::size_t p = 0; p < sub; ++p)
      detail::append_panel<10>(rule, edges[i] + h * static_cast<double>(p),
                               p + 1 == sub ? edges[i + 1] : edges[i] + h * static_cast<double>(p + 1));
  }
  return rule;
}

/// Plain n-point Gauss-Legendre rule on [a, b] (n in {4, 6, 8, 10, 12, 16, 20, 24, 32, 48, 64}).
[[nodiscard]] inline Rule gauss_legendre(std::size_t n, double a, double b) {
  Rule rule;
  switch (n) {
    case 4: detail::append_panel<4>(rule, a, b); break;
    case 6: detail::append_panel<6>(rule, a, b); break;
    case 8: detail::append_panel<8>(rule, a, b); break;
    case 12: detail::append_panel<12>(rule, a, b); break;
    case 10: detail::append_panel<10>(rule, a, b); break;
    case 16: detail::append_panel<16>(rule, a, b); break;
    case 20: detail::append_panel<20>(rule, a, b); break;
    case 24: detail::append_panel<24>(rule, a, b); break;
    case 32: detail::append_panel<32>(rule, a, b); break;
    case 48: detail::append_panel<48>(rule, a, b); break;
    case 64: detail::append_panel<64>(rule, a, b); break;
    default: throw ValidationError("unsupported Gauss-Legendre order " + std::to_string(n));
  }
  // Sort nodes ascending so tabulated output is monotone.
  std::vector<std::size_t> idx(rule.nodes.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto l, auto r) { return rule.nodes[l] < rule.nodes[r]; });
  Rule sorted;
  for (auto i : idx) {
    sorted.nodes.push_back(rule.nodes[i]);
    sorted.weights.push_back(rule.weights[i]);
  }
  return sorted;
}

/// Uniform grid of n points on [lo, hi] (n >= 2), endpoints exact.
[[nodiscard]] inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw ValidationError("linspace needs at least two points");
  std::vector<double> out(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + h * static_cast<double>(i);
  out.back() = hi;
  return out;
}

}  // namespace qgalv::quad
