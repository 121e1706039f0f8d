#pragma once

// Log-gas of squared singular values: joint density, a Metropolis sampler and
// the one-cut equilibrium measure on the half line.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>
#include <nlohmann/json.hpp>

#include "ringlab/error.hpp"
#include "ringlab/measures.hpp"
#include "ringlab/rng.hpp"

namespace ringlab {

/// Polynomial potential V(x) = sum c_k x^k on the squared variable, positive
/// leading coefficient.
class Potential {
 public:
  static Potential polynomial(std::vector<double> coeffs, std::string name = "polynomial") {
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    if (coeffs.size() < 2 || !(coeffs.back() > 0.0))
      throw PreconditionError("potential: need degree >= 1 and a positive leading coefficient");
    for (double c : coeffs)
      if (!std::isfinite(c)) throw PreconditionError("potential: coefficients must be finite");
    Potential v;
    v.coeffs_ = std::move(coeffs);
    v.name_ = std::move(name);
    return v;
  }
  static Potential linear() { return polynomial({0.0, 1.0}, "linear"); }
  static Potential quadratic_half() { return polynomial({0.0, 0.0, 0.5}, "quadratic_half"); }

  double operator()(double x) const {
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) acc = acc * x + coeffs_[k];
    return acc;
  }
  double derivative(double x) const {
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 1;) acc = acc * x + static_cast<double>(k) * coeffs_[k];
    return acc;
  }
  const std::vector<double>& coefficients() const { return coeffs_; }
  std::size_t degree() const { return coeffs_.size() - 1; }
  const std::string& name() const { return name_; }

 private:
  Potential() = default;
  std::vector<double> coeffs_;
  std::string name_;
};

inline void to_json(nlohmann::json& j, const Potential& v) {
  j = nlohmann::json{{"name", v.name()}, {"coefficients", v.coefficients()}};
}

/// "linear", "quadratic_half", or a coefficient array (constant term first).
inline Potential potential_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "linear") return Potential::linear();
    if (s == "quadratic_half") return Potential::quadratic_half();
    throw PreconditionError("unknown potential '" + s + "'");
  }
  if (j.is_array()) return Potential::polynomial(j.get<std::vector<double>>());
  if (j.is_object() && j.contains("coefficients"))
    return Potential::polynomial(j.at("coefficients").get<std::vector<double>>(), j.value("name", "polynomial"));
  throw PreconditionError("potential: expected a name or a coefficient list");
}

/// sum_{i<j} 2 log|x_i - x_j| - n sum V(x_i); -inf when two points coincide.
inline double fz_log_density(const std::vector<double>& x, const Potential& v) {
  const double n = static_cast<double>(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !std::isfinite(x[i])) throw DomainError("fz_log_density: points must be positive");
    acc -= n * v(x[i]);
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double d = std::abs(x[i] - x[j]);
      if (d == 0.0) return -kInf;
      acc += 2.0 * std::log(d);
    }
  }
  return acc;
}

/// Change of the log density when x[i] moves to y.
inline double fz_log_density_change(const std::vector<double>& x, std::size_t i, double y, const Potential& v) {
  const double n = static_cast<double>(x.size());
  double acc = -n * (v(y) - v(x[i]));
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i) continue;
    acc += 2.0 * (std::log(std::abs(y - x[j])) - std::log(std::abs(x[i] - x[j])));
  }
  return acc;
}

namespace detail {
inline std::vector<double> half_derivative(const Potential& v);
inline double hard_edge_upper(const std::vector<double>& a);
}  // namespace detail

struct LogGasState {
  std::vector<double> x;
  double log_weight = 0.0;
  double step_scale = 0.0;
  double acceptance_rate = 0.0;  // over kept sweeps
  std::uint64_t sweeps_done = 0;
  std::uint64_t rng_block = 0;
  std::uint64_t kept_accepted = 0;
  std::uint64_t kept_proposed = 0;
};

inline void to_json(nlohmann::json& j, const LogGasState& s) {
  j = nlohmann::json{{"x", s.x},
                     {"log_weight", s.log_weight},
                     {"step_scale", s.step_scale},
                     {"acceptance_rate", s.acceptance_rate},
                     {"sweeps_done", s.sweeps_done},
                     {"rng_block", s.rng_block},
                     {"kept_accepted", s.kept_accepted},
                     {"kept_proposed", s.kept_proposed}};
}

inline void from_json(const nlohmann::json& j, LogGasState& s) {
  j.at("x").get_to(s.x);
  j.at("log_weight").get_to(s.log_weight);
  j.at("step_scale").get_to(s.step_scale);
  j.at("acceptance_rate").get_to(s.acceptance_rate);
  j.at("sweeps_done").get_to(s.sweeps_done);
  j.at("rng_block").get_to(s.rng_block);
  j.at("kept_accepted").get_to(s.kept_accepted);
  j.at("kept_proposed").get_to(s.kept_proposed);
}

struct ChainOptions {
  std::size_t burn_in_sweeps = 500;  // a sweep is n single-site updates
  std::size_t thin = 10;
  double initial_step = 0.05;
  double target_low = 0.3;
  double target_high = 0.5;
  double min_acceptance = 0.05;
};

/// Called on every thin-th kept sweep with the sweep index and current points.
using ChainObserver = std::function<void(std::uint64_t, const std::vector<double>&)>;

/// Single-site Metropolis chain for the joint density of n squared singular
/// values. sweeps counts burn-in; proposals x_i + step N(0,1) are rejected
/// when nonpositive; the step adapts during burn-in only. Each sweep starts
/// on a fresh generator block so a checkpoint (resume) continues the chain
/// bit-for-bit.
inline LogGasState fz_mcmc(const Potential& v, std::size_t n, std::size_t sweeps, KeyedRng& rng,
                           const ChainOptions& opt = {}, const ChainObserver& observe = {},
                           const LogGasState* resume = nullptr) {
  if (n == 0) throw PreconditionError("fz_mcmc: n must be >= 1");
  if (sweeps < opt.burn_in_sweeps)
    throw PreconditionError("fz_mcmc: sweeps (" + std::to_string(sweeps) + ") below burn-in (" +
                            std::to_string(opt.burn_in_sweeps) + ")");
  LogGasState st;
  if (resume) {
    st = *resume;
    if (st.x.size() != n) throw PreconditionError("fz_mcmc: checkpoint has a different n");
    rng.seek(st.rng_block);
  } else {
    // evenly spread over [0, B] with B the hard-edge support bound: a scale
    // estimate only, the shape is left to burn-in
    const double top = detail::hard_edge_upper(detail::half_derivative(v));
    st.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) st.x[i] = top * static_cast<double>(i + 1) / static_cast<double>(n + 1);
    st.step_scale = opt.initial_step;
  }
  const std::size_t thin = std::max<std::size_t>(1, opt.thin);
  while (st.sweeps_done < sweeps) {
    rng.seek(rng.block_counter());
    std::normal_distribution<double> normal;
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = st.x[i] + st.step_scale * normal(rng);
      const double u = uniform01(rng);
      if (!(y > 0.0)) continue;
      const double delta = fz_log_density_change(st.x, i, y, v);
      if (std::log(u) < delta) {
        st.x[i] = y;
        ++accepted;
      }
    }
    const double rate = static_cast<double>(accepted) / static_cast<double>(n);
    if (st.sweeps_done < opt.burn_in_sweeps) {
      if (rate > opt.target_high) st.step_scale *= 1.1;
      if (rate < opt.target_low) st.step_scale /= 1.1;
    } else {
      st.kept_accepted += accepted;
      st.kept_proposed += n;
      if (observe && (st.sweeps_done - opt.burn_in_sweeps) % thin == 0) observe(st.sweeps_done, st.x);
    }
    ++st.sweeps_done;
  }
  rng.seek(rng.block_counter());
  st.rng_block = rng.block_counter();
  st.acceptance_rate =
      st.kept_proposed > 0 ? static_cast<double>(st.kept_accepted) / static_cast<double>(st.kept_proposed) : 0.0;
  if (st.kept_proposed > 0 && st.acceptance_rate < opt.min_acceptance)
    throw MixingError("fz_mcmc: acceptance " + std::to_string(st.acceptance_rate) + " after adaptation (step " +
                      std::to_string(st.step_scale) + ")");
  st.log_weight = fz_log_density(st.x, v);
  return st;
}

/// Square roots of the final chain state, increasing.
inline std::vector<double> fz_singular_values(const Potential& v, std::size_t n, std::size_t sweeps, KeyedRng& rng,
                                              const ChainOptions& opt = {}) {
  auto st = fz_mcmc(v, n, sweeps, rng, opt);
  std::vector<double> s(st.x.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sqrt(st.x[i]);
  std::sort(s.begin(), s.end());
  return s;
}

/// One-cut minimizer of int V dsigma - intint log|x-y| dsigma dsigma over
/// probability measures on [0, inf).
///
/// With a hard edge (lower = 0) the density is M(x) sqrt((upper-x)/x)/pi,
/// otherwise M(x) sqrt((upper-x)(x-lower))/pi, M a polynomial.
struct EquilibriumMeasure {
  double lower = 0.0;
  double upper = 0.0;
  bool hard_edge = false;
  std::vector<double> m_coeffs;  // constant term first
  Measure1D squared = Measure1D::from_atoms({{1.0, 1.0}});   // sigma, law of x = s^2
  Measure1D singular = Measure1D::from_atoms({{1.0, 1.0}});  // Theta, law of s

  double m(double x) const {
    double acc = 0.0;
    for (std::size_t k = m_coeffs.size(); k-- > 0;) acc = acc * x + m_coeffs[k];
    return acc;
  }
  double density(double x) const {
    if (!(x > lower) || !(x < upper)) return 0.0;
    const double w = hard_edge ? std::sqrt((upper - x) / x) : std::sqrt((upper - x) * (x - lower));
    return m(x) * w / kPi;
  }
  /// density of Theta at s
  double singular_density(double s) const {
    if (!(s >= 0.0)) return 0.0;
    const double x = s * s;
    if (hard_edge) return x < upper ? 2.0 * m(x) * std::sqrt(upper - x) / kPi : 0.0;
    return 2.0 * s * density(x);
  }
  /// total mass of the analytic density (Gauss-Legendre in the angle)
  double mass() const;
};

namespace detail {

// c_k = binom(2k, k) / 4^k, the coefficients of (1 - w)^{-1/2}
inline std::vector<double> half_binomials(std::size_t count) {
  std::vector<double> c(count, 1.0);
  for (std::size_t k = 1; k < count; ++k)
    c[k] = c[k - 1] * (2.0 * static_cast<double>(k) - 1.0) / (2.0 * static_cast<double>(k));
  return c;
}

// a_j: coefficients of V'(x)/2
inline std::vector<double> half_derivative(const Potential& v) {
  const auto& c = v.coefficients();
  std::vector<double> a(c.size() - 1);
  for (std::size_t j = 0; j < a.size(); ++j) a[j] = 0.5 * static_cast<double>(j + 1) * c[j + 1];
  return a;
}

inline double angle_integral(const std::function<double(double)>& f) {
  return boost::math::quadrature::gauss<double, 30>::integrate(f, 0.0, kPi);
}

// hard edge at 0: normalization sum_j a_j c_{j+1} B^{j+1} = 1
inline double hard_edge_upper(const std::vector<double>& a) {
  const auto c = half_binomials(a.size() + 2);
  auto f = [&](double b) {
    double acc = -1.0;
    for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * c[j + 1] * std::pow(b, static_cast<double>(j + 1));
    return acc;
  };
  // smallest positive root: scan outward geometrically
  double lo = 0.0, hi = 1e-6;
  while (f(hi) < 0.0) {
    lo = hi;
    hi *= 1.5;
    if (hi > 1e12) throw SolverError("equilibrium: no hard-edge endpoint", f(hi));
  }
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

inline std::vector<double> hard_edge_m(const std::vector<double>& a, double b) {
  const auto c = half_binomials(a.size() + 1);
  std::vector<double> m(a.size(), 0.0);
  for (std::size_t p = 0; p < a.size(); ++p)
    for (std::size_t j = p; j < a.size(); ++j) m[p] += a[j] * c[j - p] * std::pow(b, static_cast<double>(j - p));
  return m;
}

// e_k = sum_{i+l=k} c_i c_l A^i B^l, expansion of z / sqrt((z-A)(z-B))
inline std::vector<double> soft_expansion(double lo, double hi, std::size_t count) {
  const auto c = half_binomials(count);
  std::vector<double> e(count, 0.0);
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t i = 0; i <= k; ++i)
      e[k] += c[i] * c[k - i] * std::pow(lo, static_cast<double>(i)) * std::pow(hi, static_cast<double>(k - i));
  return e;
}

inline std::array<double, 2> soft_conditions(const std::vector<double>& a, double lo, double hi) {
  const auto e = soft_expansion(lo, hi, a.size() + 1);
  double g1 = 0.0, g2 = -1.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    g1 += a[j] * e[j];
    g2 += a[j] * e[j + 1];
  }
  return {g1, g2};
}

inline std::vector<double> soft_m(const std::vector<double>& a, double lo, double hi) {
  if (a.size() < 2) return {0.0};
  const auto e = soft_expansion(lo, hi, a.size());
  std::vector<double> m(a.size() - 1, 0.0);
  for (std::size_t j = 1; j < a.size(); ++j)
    for (std::size_t k = 0; k + 1 <= j; ++k) m[j - 1 - k] += a[j] * e[k];
  return m;
}

// Newton on (center, log half-width) with a finite-difference Jacobian.
inline std::pair<double, double> soft_endpoints(const std::vector<double>& a, double center, double half) {
  auto residual = [&](double c, double lw) {
    const double w = std::exp(lw);
    const auto g = soft_conditions(a, c - w, c + w);
    return Eigen::Vector2d(g[0], g[1]);
  };
  double c = center, lw = std::log(half);
  Eigen::Vector2d r = residual(c, lw);
  for (int it = 0; it < 200 && r.norm() > 1e-14; ++it) {
    const double hc = 1e-7 * std::max(1.0, std::abs(c)), hl = 1e-7;
    Eigen::Matrix2d jac;
    jac.col(0) = (residual(c + hc, lw) - residual(c - hc, lw)) / (2 * hc);
    jac.col(1) = (residual(c, lw + hl) - residual(c, lw - hl)) / (2 * hl);
    const Eigen::Vector2d step = jac.fullPivLu().solve(-r);
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      const Eigen::Vector2d r2 = residual(c + t * step(0), lw + t * step(1));
      if (r2.allFinite() && r2.norm() < r.norm()) {
        c += t * step(0);
        lw += t * step(1);
        r = r2;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (!(r.norm() < 1e-10)) throw SolverError("equilibrium: soft-edge endpoint conditions not met", r.norm());
  const double w = std::exp(lw);
  return {c - w, c + w};
}

// Sign scan of M on [lo, hi]; throws naming the first negative stretch.
inline void check_one_cut(const EquilibriumMeasure& eq) {
  const int samples = 4000;
  double scale = 0.0;
  for (int i = 0; i <= samples; ++i)
    scale = std::max(scale, std::abs(eq.m(eq.lower + (eq.upper - eq.lower) * i / samples)));
  int first = -1, last = -1;
  for (int i = 0; i <= samples; ++i) {
    const double x = eq.lower + (eq.upper - eq.lower) * i / samples;
    if (eq.m(x) < -1e-12 * scale) {
      if (first < 0) first = i;
      last = i;
    } else if (first >= 0) {
      break;
    }
  }
  if (first >= 0) {
    const double lo = eq.lower + (eq.upper - eq.lower) * std::max(0, first - 1) / samples;
    const double hi = eq.lower + (eq.upper - eq.lower) * std::min(samples, last + 1) / samples;
    throw UnsupportedRegimeError("equilibrium: density changes sign on [" + std::to_string(lo) + ", " +
                                     std::to_string(hi) + "]; two-cut regime not supported",
                                 lo, hi);
  }
}

// Effective potential must not dip below its support value beyond the upper
// edge: int_B^x M(t) w(t) dt >= 0 with w the analytic continuation weight.
inline void check_outside(const EquilibriumMeasure& eq) {
  const double b = eq.upper;
  const double far = 4.0 * b + 10.0;
  const int samples = 4000;
  double acc = 0.0;
  double prev = 0.0;
  for (int i = 1; i <= samples; ++i) {
    const double t = b + (far - b) * i / samples;
    const double w = eq.hard_edge ? std::sqrt((t - b) / t) : std::sqrt((t - b) * (t - eq.lower));
    const double f = eq.m(t) * w;
    acc += 0.5 * (f + prev) * (far - b) / samples;
    prev = f;
    if (acc < -1e-10) throw UnsupportedRegimeError("equilibrium: a second cut opens beyond the upper edge", b, t);
  }
}

}  // namespace detail

inline double EquilibriumMeasure::mass() const {
  if (hard_edge) {
    return detail::angle_integral([&](double phi) {
             const double x = 0.5 * upper * (1.0 - std::cos(phi));
             return m(x) * 0.5 * upper * (1.0 + std::cos(phi));
           }) /
           kPi;
  }
  const double c = 0.5 * (lower + upper), w = 0.5 * (upper - lower);
  return detail::angle_integral([&](double phi) {
           const double s = std::sin(phi);
           return m(c + w * std::cos(phi)) * w * w * s * s;
         }) /
         kPi;
}

/// Solves the one-cut equilibrium problem. The hard-edge ansatz (support
/// [0, B]) is tried first; when its density turns negative at 0 the support
/// detaches and both endpoints are found from the two moment conditions.
inline EquilibriumMeasure equilibrium_measure(const Potential& v, std::size_t cells = 800) {
  if (cells < 16) throw PreconditionError("equilibrium_measure: need at least 16 cells");
  const auto a = detail::half_derivative(v);
  EquilibriumMeasure eq;
  eq.hard_edge = true;
  eq.lower = 0.0;
  eq.upper = detail::hard_edge_upper(a);
  eq.m_coeffs = detail::hard_edge_m(a, eq.upper);
  if (eq.m(0.0) < 0.0) {
    eq.hard_edge = false;
    const auto ends = detail::soft_endpoints(a, 0.5 * eq.upper, 0.5 * eq.upper);
    if (!(ends.first > 0.0))
      throw UnsupportedRegimeError("equilibrium: endpoint conditions give a support reaching below 0",
                                   ends.first, ends.second);
    eq.lower = ends.first;
    eq.upper = ends.second;
    eq.m_coeffs = detail::soft_m(a, eq.lower, eq.upper);
  }
  detail::check_one_cut(eq);
  detail::check_outside(eq);

  // Theta on a Chebyshev grid in s
  const double s_lo = std::sqrt(eq.lower), s_hi = std::sqrt(eq.upper);
  std::vector<double> s(cells + 1), ts(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) {
    const double t = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(k) / static_cast<double>(cells)));
    s[k] = k == 0 ? s_lo : (k == cells ? s_hi : s_lo + (s_hi - s_lo) * t);
    ts[k] = std::max(0.0, eq.singular_density(s[k]));
  }
  ts.back() = 0.0;
  if (!eq.hard_edge) ts.front() = 0.0;
  eq.singular = Measure1D::from_grid(s, ts, std::nullopt, true);
  if (eq.hard_edge) {
    eq.squared = pushforward_square(eq.singular);
  } else {
    std::vector<double> x(cells + 1), xs(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k) {
      const double t = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(k) / static_cast<double>(cells)));
      x[k] = k == 0 ? eq.lower : (k == cells ? eq.upper : eq.lower + (eq.upper - eq.lower) * t);
      xs[k] = (k == 0 || k == cells) ? 0.0 : std::max(0.0, eq.density(x[k]));
    }
    eq.squared = Measure1D::from_grid(x, xs, std::nullopt, true);
  }
  return eq;
}

}  // namespace ringlab
