#pragma once

// Current-noise spectrum models and the forward map S(w) -> N(Omega).
//
// A model is split into three parts that are handled separately by the forward map:
//   S(w) = S_white + S_reg(w) + sum_k 2 pi a_k delta(w - w_k)
// with autocorrelation C(tau) = S_white delta(tau) + C_reg(tau) + sum_k a_k e^{-i w_k tau}.
//
// LongTime:  N(Omega) = T int_0^1 dw q(w) S(Omega - w mu/hbar)
// Full:      N(Omega) = T int dtau e^{i Omega tau} C(tau) f(tau) D(tau)
// where q is the kernel weight per unit w (see kernel.hpp).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "qgalv/constants.hpp"
#include "qgalv/error.hpp"
#include "qgalv/kernel.hpp"
#include "qgalv/nanowire.hpp"
#include "qgalv/parallel.hpp"
#include "qgalv/quadrature.hpp"

namespace qgalv {

class NoiseSpectrumModel;

namespace spectrum {

/// S(w) = level for all w  [A^2 s]
struct Flat {
  double level = 0;
};

/// Sinusoidal current line carrying mean square current `weight` [A^2] at w0.
/// Symmetric: S = pi weight [delta(w - w0) + delta(w + w0)]; otherwise S = 2 pi weight delta(w - w0).
struct Line {
  double omega0 = 0;
  double weight = 0;
  bool symmetric = true;
};

/// S = power 2 gamma / ((w - centre)^2 + gamma^2), C = power e^{-gamma|tau|} e^{-i centre tau}.
struct Lorentzian {
  double centre = 0;
  double gamma = 1;
  double power = 0;  ///< integrated power <I^2> [A^2]
};

/// S = density for |w| < cutoff, zero outside.
struct Band {
  double density = 0;  ///< [A^2 s]
  double cutoff = 1;   ///< [rad/s]
};

/// Piecewise-linear S on a strictly increasing grid, zero outside it.
struct Tabulated {
  std::vector<double> omega;
  std::vector<double> value;
};

/// S(w) = S_base(w) [1 + tanh(hbar w / 2 k_B T_e)], so that S(-w) = e^{-hbar w/k_B T_e} S(w).
/// T_e = 0 gives the one-sided 2 S_base(w) Theta(w).
struct DetailedBalance {
  std::shared_ptr<const NoiseSpectrumModel> base;
  double temperature = 0;  ///< [K]
  double hbar = PhysicalConstants{}.hbar;
};

struct Sum {
  std::vector<std::shared_ptr<const NoiseSpectrumModel>> terms;
};

}  // namespace spectrum

/// One delta component 2 pi a delta(w - omega) of a spectrum.
struct SpectralLine {
  double omega = 0;
  double amplitude = 0;  ///< a [A^2]
};

/// Immutable noise spectrum model.
class NoiseSpectrumModel {
 public:
  using Variant = std::variant<spectrum::Flat, spectrum::Line, spectrum::Lorentzian, spectrum::Band,
                               spectrum::Tabulated, spectrum::DetailedBalance, spectrum::Sum>;

  NoiseSpectrumModel() : v_(spectrum::Flat{0.0}) {}
  explicit NoiseSpectrumModel(Variant v) : v_(std::move(v)) { validate(); }

  static NoiseSpectrumModel flat(double level) { return NoiseSpectrumModel(spectrum::Flat{level}); }
  static NoiseSpectrumModel line(double omega0, double weight, bool symmetric = true) {
    return NoiseSpectrumModel(spectrum::Line{omega0, weight, symmetric});
  }
  static NoiseSpectrumModel lorentzian(double centre, double gamma, double power) {
    return NoiseSpectrumModel(spectrum::Lorentzian{centre, gamma, power});
  }
  static NoiseSpectrumModel band(double density, double cutoff) {
    return NoiseSpectrumModel(spectrum::Band{density, cutoff});
  }
  static NoiseSpectrumModel tabulated(std::vector<double> omega, std::vector<double> value) {
    return NoiseSpectrumModel(spectrum::Tabulated{std::move(omega), std::move(value)});
  }
  static NoiseSpectrumModel detailed_balance(NoiseSpectrumModel base, double temperature,
                                             double hbar = PhysicalConstants{}.hbar) {
    return NoiseSpectrumModel(spectrum::DetailedBalance{
        std::make_shared<const NoiseSpectrumModel>(std::move(base)), temperature, hbar});
  }
  static NoiseSpectrumModel sum(std::vector<NoiseSpectrumModel> terms) {
    spectrum::Sum s;
    for (auto& t : terms) s.terms.push_back(std::make_shared<const NoiseSpectrumModel>(std::move(t)));
    return NoiseSpectrumModel(std::move(s));
  }

  [[nodiscard]] const Variant& variant() const { return v_; }

  /// Short type name, as used in configuration files.
  [[nodiscard]] std::string kind() const {
    static const char* names[] = {"flat", "line", "lorentzian", "band", "tabulated", "detailed_balance", "sum"};
    return names[v_.index()];
  }

  /// Regular (non-delta) part of S(w), including any white level  [A^2 s]
  [[nodiscard]] double density(double w) const {
    return std::visit(
        [&](const auto& m) -> double {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, spectrum::Flat>) {
            return m.level;
          } else if constexpr (std::is_same_v<M, spectrum::Line>) {
            return 0.0;
          } else if constexpr (std::is_same_v<M, spectrum::Lorentzian>) {
            const double d = w - m.centre;
            return m.power * 2 * m.gamma / (d * d + m.gamma * m.gamma);
          } else if constexpr (std::is_same_v<M, spectrum::Band>) {
            return std::abs(w) < m.cutoff ? m.density : 0.0;
          } else if constexpr (std::is_same_v<M, spectrum::Tabulated>) {
            return interpolate(m, w);
          } else if constexpr (std::is_same_v<M, spectrum::DetailedBalance>) {
            return m.base->density(w) * balance_factor(m, w);
          } else {
            double s = 0;
            for (const auto& t : m.terms) s += t->density(w);
            return s;
          }
        },
        v_);
  }

  /// Constant part of S that is handled as white noise (C ~ delta(tau)).
  [[nodiscard]] double white_level() const {
    if (const auto* f = std::get_if<spectrum::Flat>(&v_)) return f->level;
    if (const auto* s = std::get_if<spectrum::Sum>(&v_)) {
      double total = 0;
      for (const auto& t : s->terms) total += t->white_level();
      return total;
    }
    return 0.0;
  }

  /// density(w) minus white_level().
  [[nodiscard]] double regular_density(double w) const {
    if (std::holds_alternative<spectrum::Flat>(v_)) return 0.0;
    if (const auto* s = std::get_if<spectrum::Sum>(&v_)) {
      double total = 0;
      for (const auto& t : s->terms) total += t->regular_density(w);
      return total;
    }
    return density(w);
  }

  /// Delta components of S.
  [[nodiscard]] std::vector<SpectralLine> lines() const {
    std::vector<SpectralLine> out;
    if (const auto* l = std::get_if<spectrum::Line>(&v_)) {
      if (l->symmetric) {
        out.push_back({-l->omega0, 0.5 * l->weight});
        out.push_back({l->omega0, 0.5 * l->weight});
      } else {
        out.push_back({l->omega0, l->weight});
      }
    } else if (const auto* db = std::get_if<spectrum::DetailedBalance>(&v_)) {
      for (auto line : db->base->lines()) {
        line.amplitude *= balance_factor(*db, line.omega);
        out.push_back(line);
      }
    } else if (const auto* s = std::get_if<spectrum::Sum>(&v_)) {
      for (const auto& t : s->terms) {
        const auto sub = t->lines();
        out.insert(out.end(), sub.begin(), sub.end());
      }
    }
    return out;
  }

  /// True iff S(w) = S(-w): the only spectra a classical stationary current can realize.
  [[nodiscard]] bool is_classical() const {
    return std::visit(
        [&](const auto& m) -> bool {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, spectrum::Line>) {
            return m.symmetric || m.omega0 == 0.0 || m.weight == 0.0;
          } else if constexpr (std::is_same_v<M, spectrum::Lorentzian>) {
            return m.centre == 0.0 || m.power == 0.0;
          } else if constexpr (std::is_same_v<M, spectrum::Tabulated>) {
            const std::size_t n = m.omega.size();
            for (std::size_t i = 0; i < n; ++i) {
              const double scale = std::max(std::abs(m.omega[i]), std::abs(m.omega[n - 1 - i]));
              if (std::abs(m.omega[i] + m.omega[n - 1 - i]) > 1e-12 * scale) return false;
              if (m.value[i] != m.value[n - 1 - i]) return false;
            }
            return true;
          } else if constexpr (std::is_same_v<M, spectrum::DetailedBalance>) {
            return m.base->is_zero();
          } else if constexpr (std::is_same_v<M, spectrum::Sum>) {
            return std::all_of(m.terms.begin(), m.terms.end(), [](const auto& t) { return t->is_classical(); });
          } else {
            return true;
          }
        },
        v_);
  }

  /// True if S vanishes identically.
  [[nodiscard]] bool is_zero() const {
    return std::visit(
        [&](const auto& m) -> bool {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, spectrum::Flat>) {
            return m.level == 0.0;
          } else if constexpr (std::is_same_v<M, spectrum::Line>) {
            return m.weight == 0.0;
          } else if constexpr (std::is_same_v<M, spectrum::Lorentzian>) {
            return m.power == 0.0;
          } else if constexpr (std::is_same_v<M, spectrum::Band>) {
            return m.density == 0.0;
          } else if constexpr (std::is_same_v<M, spectrum::Tabulated>) {
            return std::all_of(m.value.begin(), m.value.end(), [](double x) { return x == 0.0; });
          } else if constexpr (std::is_same_v<M, spectrum::DetailedBalance>) {
            return m.base->is_zero();
          } else {
            return std::all_of(m.terms.begin(), m.terms.end(), [](const auto& t) { return t->is_zero(); });
          }
        },
        v_);
  }

  /// Frequencies where the regular part has a kink, jump or narrow peak.
  [[nodiscard]] std::vector<double> breakpoints() const {
    std::vector<double> out;
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, spectrum::Lorentzian>) {
            out.push_back(m.centre);
          } else if constexpr (std::is_same_v<M, spectrum::Band>) {
            out.push_back(-m.cutoff);
            out.push_back(m.cutoff);
          } else if constexpr (std::is_same_v<M, spectrum::Tabulated>) {
            out = m.omega;
          } else if constexpr (std::is_same_v<M, spectrum::DetailedBalance>) {
            out = m.base->breakpoints();
            out.push_back(0.0);
          } else if constexpr (std::is_same_v<M, spectrum::Sum>) {
            for (const auto& t : m.terms) {
              const auto sub = t->breakpoints();
              out.insert(out.end(), sub.begin(), sub.end());
            }
          }
        },
        v_);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Narrowest smooth feature of the regular part [rad/s]; infinity if piecewise linear.
  [[nodiscard]] double feature_scale() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(
        [&](const auto& m) -> double {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, spectrum::Lorentzian>) {
            return m.gamma;
          } else if constexpr (std::is_same_v<M, spectrum::DetailedBalance>) {
            const double thermal = m.temperature > 0 ? boltzmann * m.temperature / m.hbar : inf;
            return std::min(thermal, m.base->feature_scale());
          } else if constexpr (std::is_same_v<M, spectrum::Sum>) {
            double s = inf;
            for (const auto& t : m.terms) s = std::min(s, t->feature_scale());
            return s;
          } else {
            return inf;
          }
        },
        v_);
  }

  /// Largest frequency the autocorrelation oscillates or decays at [rad/s].
  [[nodiscard]] double max_rate() const {
    return std::visit(
        [&](const auto& m) -> double {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, spectrum::Line>) {
            return std::abs(m.omega0);
          } else if constexpr (std::is_same_v<M, spectrum::Lorentzian>) {
            return std::abs(m.centre) + m.gamma;
          } else if constexpr (std::is_same_v<M, spectrum::Band>) {
            return m.cutoff;
          } else if constexpr (std::is_same_v<M, spectrum::Tabulated>) {
            return std::max(std::abs(m.omega.front()), std::abs(m.omega.back()));
          } else if constexpr (std::is_same_v<M, spectrum::DetailedBalance>) {
            return m.base->max_rate();
          } else if constexpr (std::is_same_v<M, spectrum::Sum>) {
            double r = 0;
            for (const auto& t : m.terms) r = std::max(r, t->max_rate());
            return r;
          } else {
            return 0.0;
          }
        },
        v_);
  }

  /// Whether the regular autocorrelation is available (everything except detailed-balanced white noise).
  [[nodiscard]] bool has_time_domain() const {
    if (const auto* db = std::get_if<spectrum::DetailedBalance>(&v_))
      return db->base->white_level() == 0.0 && db->base->has_time_domain();
    if (const auto* s = std::get_if<spectrum::Sum>(&v_))
      return std::all_of(s->terms.begin(), s->terms.end(), [](const auto& t) { return t->has_time_domain(); });
    return true;
  }

  /// C_reg(tau) = (1/2pi) int dw S_reg(w) e^{-i w tau}  [A^2]
  [[nodiscard]] std::complex<double> regular_autocorrelation(double tau) const {
    return std::visit(
        [&](const auto& m) -> std::complex<double> {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, spectrum::Flat> || std::is_same_v<M, spectrum::Line>) {
            return {0.0, 0.0};
          } else if constexpr (std::is_same_v<M, spectrum::Lorentzian>) {
            return m.power * std::exp(-m.gamma * std::abs(tau)) * std::polar(1.0, -m.centre * tau);
          } else if constexpr (std::is_same_v<M, spectrum::Band>) {
            const double x = m.cutoff * tau;
            const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
            return {m.density * m.cutoff / pi * sinc, 0.0};
          } else if constexpr (std::is_same_v<M, spectrum::Tabulated>) {
            return tabulated_transform(m, tau);
          } else if constexpr (std::is_same_v<M, spectrum::DetailedBalance>) {
            if (!has_time_domain())
              throw ValidationError("detailed-balanced white noise has no regular autocorrelation");
            return m.base->regular_autocorrelation(tau) + odd_part(m, tau);
          } else {
            std::complex<double> c{0.0, 0.0};
            for (const auto& t : m.terms) c += t->regular_autocorrelation(tau);
            return c;
          }
        },
        v_);
  }

  /// Full autocorrelation C(tau) = <I(0) I(tau)> for models without a white component.
  [[nodiscard]] std::complex<double> autocorrelation(double tau) const {
    if (white_level() != 0.0 || !has_time_domain())
      throw ValidationError("autocorrelation of a white spectrum is a delta function; handle it analytically");
    std::complex<double> c = regular_autocorrelation(tau);
    for (const auto& l : lines()) c += l.amplitude * std::polar(1.0, -l.omega * tau);
    return c;
  }

  /// Human-readable parameter summary (SI units).
  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, spectrum::Flat>) {
            os << "flat(level=" << m.level << ")";
          } else if constexpr (std::is_same_v<M, spectrum::Line>) {
            os << "line(omega0=" << m.omega0 << ",weight=" << m.weight << ",symmetric=" << m.symmetric << ")";
          } else if constexpr (std::is_same_v<M, spectrum::Lorentzian>) {
            os << "lorentzian(centre=" << m.centre << ",gamma=" << m.gamma << ",power=" << m.power << ")";
          } else if constexpr (std::is_same_v<M, spectrum::Band>) {
            os << "band(density=" << m.density << ",cutoff=" << m.cutoff << ")";
          } else if constexpr (std::is_same_v<M, spectrum::Tabulated>) {
            os << "tabulated(points=" << m.omega.size() << ")";
          } else if constexpr (std::is_same_v<M, spectrum::DetailedBalance>) {
            os << "detailed_balance(temperature=" << m.temperature << "," << m.base->describe() << ")";
          } else {
            os << "sum(";
            for (std::size_t i = 0; i < m.terms.size(); ++i) os << (i ? "," : "") << m.terms[i]->describe();
            os << ")";
          }
        },
        v_);
    return os.str();
  }

 private:
  Variant v_;

  void validate() const {
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, spectrum::Flat>) {
            detail::require(m.level >= 0 && std::isfinite(m.level), "flat: level must be >= 0");
          } else if constexpr (std::is_same_v<M, spectrum::Line>) {
            detail::require(m.weight >= 0 && std::isfinite(m.omega0), "line: weight must be >= 0");
          } else if constexpr (std::is_same_v<M, spectrum::Lorentzian>) {
            detail::require(m.gamma > 0 && m.power >= 0 && std::isfinite(m.centre),
                            "lorentzian: gamma must be > 0 and power >= 0");
          } else if constexpr (std::is_same_v<M, spectrum::Band>) {
            detail::require(m.cutoff > 0 && m.density >= 0, "band: cutoff must be > 0 and density >= 0");
          } else if constexpr (std::is_same_v<M, spectrum::Tabulated>) {
            detail::require(m.omega.size() >= 2 && m.omega.size() == m.value.size(),
                            "tabulated: need >= 2 points and equal-length columns");
            for (std::size_t i = 0; i < m.omega.size(); ++i) {
              detail::require(m.value[i] >= 0 && std::isfinite(m.value[i]), "tabulated: S must be >= 0");
              if (i) detail::require(m.omega[i] > m.omega[i - 1], "tabulated: omega must be strictly increasing");
            }
          } else if constexpr (std::is_same_v<M, spectrum::DetailedBalance>) {
            detail::require(m.base != nullptr, "detailed_balance: missing base model");
            detail::require(m.temperature >= 0 && std::isfinite(m.temperature),
                            "detailed_balance: temperature must be >= 0");
            detail::require(m.base->is_classical(), "detailed_balance: base model must be symmetric");
          } else {
            for (const auto& t : m.terms) detail::require(t != nullptr, "sum: null term");
          }
        },
        v_);
  }

  static double interpolate(const spectrum::Tabulated& m, double w) {
    if (w < m.omega.front() || w > m.omega.back()) return 0.0;
    const auto it = std::upper_bound(m.omega.begin(), m.omega.end(), w);
    if (it == m.omega.end()) return m.value.back();
    const auto i = static_cast<std::size_t>(it - m.omega.begin()) - 1;
    const double t = (w - m.omega[i]) / (m.omega[i + 1] - m.omega[i]);
    return (1 - t) * m.value[i] + t * m.value[i + 1];
  }

  /// 1 + tanh(hbar w / 2 k_B T_e); the T_e = 0 limit is 2 Theta(w) with Theta(0) = 1/2.
  static double balance_factor(const spectrum::DetailedBalance& m, double w) {
    if (m.temperature == 0) return w > 0 ? 2.0 : (w < 0 ? 0.0 : 1.0);
    // 1 + tanh(x) without cancellation on the suppressed side.
    return 2.0 / (1.0 + std::exp(-m.hbar * w / (boltzmann * m.temperature)));
  }

  static std::complex<double> tabulated_transform(const spectrum::Tabulated& m, double tau) {
    // Each segment is linear in w, so a rule resolving the phase w tau is exact to rounding.
    std::complex<double> sum{0.0, 0.0};
    for (std::size_t i = 0; i + 1 < m.omega.size(); ++i) {
      const double lo = m.omega[i];
      const double hi = m.omega[i + 1];
      const auto panels = static_cast<std::size_t>(std::ceil(std::abs(tau) * (hi - lo))) + 1;
      const auto rule = quad::composite(lo, hi, panels);
      for (std::size_t k = 0; k < rule.size(); ++k) {
        const double w = rule.nodes[k];
        const double t = (w - lo) / (hi - lo);
        sum += rule.weights[k] * ((1 - t) * m.value[i] + t * m.value[i + 1]) * std::polar(1.0, -w * tau);
      }
    }
    return sum / (2 * pi);
  }

  /// (1/2pi) int dw S_base(w) tanh(hbar w/2kT) e^{-i w tau} = -(i/pi) int_0^inf S_base tanh sin(w tau) dw.
  static std::complex<double> odd_part(const spectrum::DetailedBalance& m, double tau) {
    if (tau == 0.0) return {0.0, 0.0};
    const double sign = tau > 0 ? 1.0 : -1.0;
    const double t = std::abs(tau);
    auto g = [&](double w) {
      const double odd = m.temperature == 0 ? (w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0))
                                            : std::tanh(m.hbar * w / (2 * boltzmann * m.temperature));
      return m.base->regular_density(w) * odd;
    };
    double integral = 0.0;
    const double reach = m.base->max_rate();
    const bool bounded = bounded_support(*m.base);
    if (bounded) {
      std::vector<double> edges{0.0};
      for (double b : m.base->breakpoints())
        if (b > 0 && b < reach) edges.push_back(b);
      edges.push_back(reach);
      for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double thermal = m.temperature > 0 ? boltzmann * m.temperature / m.hbar : 1e300;
        const double width = edges[i + 1] - edges[i];
        const auto panels = static_cast<std::size_t>(std::ceil(t * width + 4 * width / thermal)) + 2;
        integral += quad::composite(edges[i], edges[i + 1], std::min<std::size_t>(panels, 200000))
                        .integrate([&](double w) { return g(w) * std::sin(w * t); });
      }
    } else {
      static thread_local boost::math::quadrature::ooura_fourier_sin<double> ooura(1e-10, 10);
      integral = ooura.integrate(g, t).first;
    }
    return {0.0, -sign * integral / pi};
  }

  static bool bounded_support(const NoiseSpectrumModel& m) {
    return std::visit(
        [&](const auto& v) -> bool {
          using M = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<M, spectrum::Band> || std::is_same_v<M, spectrum::Tabulated> ||
                        std::is_same_v<M, spectrum::Line>) {
            return true;
          } else if constexpr (std::is_same_v<M, spectrum::Sum>) {
            return std::all_of(v.terms.begin(), v.terms.end(), [](const auto& t) { return bounded_support(*t); });
          } else {
            return false;
          }
        },
        m.v_);
  }
};

enum class Regime { Full, LongTime };

[[nodiscard]] inline std::string to_string(Regime r) { return r == Regime::Full ? "full" : "longtime"; }

[[nodiscard]] inline Regime regime_from_string(const std::string& s) {
  if (s == "full") return Regime::Full;
  if (s == "longtime") return Regime::LongTime;
  throw ValidationError("unknown regime '" + s + "' (expected full or longtime)");
}

/// Forward map for one (kernel, model, T). The Full regime caches the time nodes with
/// D(tau) and C_reg(tau), so evaluating many Omega values costs one sum each.
class ForwardModel {
 public:
  /// `omega_max` bounds |Omega| over the planned evaluations (sets the time-grid density).
  ForwardModel(const ResponseKernel& kernel, NoiseSpectrumModel model, double T, Regime regime,
               double omega_max = 0.0)
      : kernel_(kernel), model_(std::move(model)), T_(T), regime_(regime), lines_(model_.lines()) {
    detail::require(T > 0 && std::isfinite(T), "measurement time T must be positive");
    if (regime_ == Regime::Full && !kernel_.is_zero()) {
      if (!model_.has_time_domain())
        throw ValidationError("full regime needs a time-domain model; detailed-balanced flat noise is LongTime only");
      const double rate = std::abs(omega_max) + kernel_.bandwidth() + model_.max_rate();
      const auto panels = static_cast<std::size_t>(std::ceil(T_ * rate)) + 32;
      // C_reg may have a cusp at tau = 0 (Lorentzian), and f(tau) always does.
      const std::vector<double> edges{-T_, 0.0, T_};
      time_rule_ = quad::composite_on(edges, panels / 2 + 1);
      if (!lines_.empty()) line_rule_ = resolution_rule(kernel_, T_);
      integrand_.resize(time_rule_.size());
      for (std::size_t i = 0; i < time_rule_.size(); ++i) {
        const double tau = time_rule_.nodes[i];
        integrand_[i] = time_rule_.weights[i] * window(T_, tau) * kernel_.time(tau) *
                        model_.regular_autocorrelation(tau);
      }
    }
  }

  [[nodiscard]] const ResponseKernel& kernel() const { return kernel_; }
  [[nodiscard]] const NoiseSpectrumModel& model() const { return model_; }
  [[nodiscard]] double T() const { return T_; }
  [[nodiscard]] Regime regime() const { return regime_; }

  /// Mean number of transferred atoms at drive detuning Omega [rad/s].
  [[nodiscard]] double operator()(double omega) const {
    if (kernel_.is_zero() || model_.is_zero()) return 0.0;
    double value = 0.0;
    double scale = 0.0;
    auto add = [&](double v) {
      value += v;
      scale += std::abs(v);
    };
    add(T_ * model_.white_level() * kernel_.coupling_d0());
    if (regime_ == Regime::LongTime) {
      const double bw = kernel_.bandwidth();
      for (const auto& l : lines_) add(T_ * (2 * pi / bw) * l.amplitude * kernel_.level_density((omega - l.omega) / bw));
      add(T_ * regular_longtime(omega));
    } else {
      for (const auto& l : lines_) add(T_ * l.amplitude * resolution_at(kernel_, T_, omega - l.omega, line_rule_));
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t i = 0; i < integrand_.size(); ++i)
        acc += integrand_[i] * std::polar(1.0, omega * time_rule_.nodes[i]);
      const double re = T_ * acc.real();
      const double im = T_ * acc.imag();
      if (std::abs(im) > 1e-8 * (std::abs(re) + scale) + 1e-300) {
        std::ostringstream os;
        os << "forward map: imaginary residue " << im << " vs real part " << re << " at Omega=" << omega;
        throw NumericalError(os.str());
      }
      add(re);
    }
    if (value < -1e-8 * scale) {
      std::ostringstream os;
      os << "forward map: negative atom number " << value << " at Omega=" << omega;
      throw NumericalError(os.str());
    }
    return std::max(value, 0.0);
  }

 private:
  ResponseKernel kernel_;
  NoiseSpectrumModel model_;
  double T_;
  Regime regime_;
  std::vector<SpectralLine> lines_;
  quad::Rule time_rule_;
  quad::Rule line_rule_;
  std::vector<std::complex<double>> integrand_;

  /// int_0^1 dw q(w) S_reg(Omega - w mu/hbar), integrated in s = sqrt(w) with panels split at
  /// the table edges and at the model's breakpoints.
  [[nodiscard]] double regular_longtime(double omega) const {
    const double bw = kernel_.bandwidth();
    std::vector<double> edges = table_edges();
    for (double b : model_.breakpoints()) {
      const double w = (omega - b) / bw;
      if (w > 0 && w < 1) edges.push_back(std::sqrt(w));
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    const double feature = model_.feature_scale() / bw;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const double lo = edges[i];
      const double hi = edges[i + 1];
      const double dw = hi * hi - lo * lo;
      const auto panels = std::isfinite(feature)
                              ? std::min<std::size_t>(static_cast<std::size_t>(std::ceil(4 * dw / feature)) + 1, 100000)
                              : 1;
      sum += quad::composite(lo, hi, panels).integrate([&](double s) {
        return kernel_.level_integrand(s) * model_.regular_density(omega - s * s * bw);
      });
    }
    return kernel_.n_det() * sum;
  }

  [[nodiscard]] std::vector<double> table_edges() const {
    const auto& lw = kernel_.level_weights();
    return lw.empty() ? quad::linspace(0.0, 1.0, 17) : level_grid(lw.size());
  }
};

/// Mean transferred atom number for one model at one Omega.
[[nodiscard]] inline double transferred_atoms(const NoiseSpectrumModel& model, const ResponseKernel& kernel,
                                              double T, double omega, Regime regime) {
  return ForwardModel(kernel, model, T, regime, omega)(omega);
}

struct ScanResult {
  std::vector<double> omega;       ///< [rad/s], strictly increasing
  std::vector<double> b_offs;      ///< [T]
  std::vector<double> mean_atoms;  ///< N(Omega) >= 0
  double T = 0;
  Regime regime = Regime::LongTime;
  double kernel_mu = 0;  ///< mu of the kernel that produced the scan [J]; 0 if unknown
  std::string provenance;
  std::vector<std::string> warnings;
  // Filled by counting::simulate_counts.
  double efficiency = 1.0;
  std::size_t shots = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::uint64_t>> counts;  ///< counts[i][shot]
};

/// Evaluates the forward map across an Omega grid.
[[nodiscard]] inline ScanResult scan(const NoiseSpectrumModel& model, const ResponseKernel& kernel,
                                     const NanowireConfig& wire, const PhysicalConstants& k, double T,
                                     std::span<const double> omega_grid, Regime regime,
                                     unsigned threads = 1) {
  detail::require(!omega_grid.empty(), "scan: empty Omega grid");
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    detail::require(omega_grid[i] > omega_grid[i - 1], "scan: Omega grid must be strictly increasing");
  ScanResult r;
  r.omega.assign(omega_grid.begin(), omega_grid.end());
  r.T = T;
  r.regime = regime;
  r.kernel_mu = kernel.mu();
  r.provenance = kernel.provenance() + ";model=" + model.describe() + ";regime=" + to_string(regime);
  double omax = 0;
  for (double o : omega_grid) omax = std::max(omax, std::abs(o));
  if (omax > 0.1 * wire.omega_cnt) {
    std::ostringstream os;
    os << "|Omega| up to " << omax << " rad/s exceeds 0.1 omega_cnt; rotating-wave approximation is doubtful";
    r.warnings.push_back(os.str());
  }
  r.b_offs.resize(omega_grid.size());
  for (std::size_t i = 0; i < omega_grid.size(); ++i) r.b_offs[i] = boffs_from_omega(wire, omega_grid[i], k);
  const ForwardModel fwd(kernel, model, T, regime, omax);
  r.mean_atoms.assign(omega_grid.size(), 0.0);
  parallel_for(omega_grid.size(), threads, [&](std::size_t i) { r.mean_atoms[i] = fwd(omega_grid[i]); });
  return r;
}

/// N(Omega) - N(-Omega) at every grid point; the grid must be symmetric about zero.
[[nodiscard]] inline std::vector<double> asymmetry(const ScanResult& s) {
  const std::size_t n = s.omega.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = s.omega[i];
    const double b = s.omega[n - 1 - i];
    const double tol = 1e-9 * std::max({std::abs(a), std::abs(b), 1.0});
    if (std::abs(a + b) > tol) throw ValidationError("asymmetry: Omega grid is not symmetric about zero");
    out[i] = s.mean_atoms[i] - s.mean_atoms[n - 1 - i];
  }
  return out;
}

/// rms current that transfers one atom on average: sqrt(mu / (hbar T n_det))  [A]
[[nodiscard]] inline double sensitivity_estimate(const ResponseKernel& k, double T) {
  detail::require(T > 0, "sensitivity_estimate: T must be positive");
  detail::require(!k.is_zero(), "sensitivity_estimate: zero kernel");
  return std::sqrt(k.bandwidth() / (T * k.n_det()));
}

}  // namespace qgalv
