#pragma once

// Free convolution with the symmetric Bernoulli law and the S-transform of
// measures on the half line.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "ringlab/error.hpp"
#include "ringlab/measures.hpp"
#include "ringlab/parallel.hpp"

namespace ringlab {

/// R-transform of (delta_rho + delta_-rho)/2,
/// R(w) = (sqrt(1 + 4 rho^2 w^2) - 1) / (2 rho w), in the cancellation-free form
/// 2 rho w / (sqrt(1 + 2i rho w) sqrt(1 - 2i rho w) + 1) with principal factors.
/// That product is the branch with R(w) ~ rho^2 w at 0; when branch_hint is
/// given, the sign of the root whose R lies closest to the hint is used instead.
inline Complex bernoulli_r(double rho, Complex w, std::optional<Complex> branch_hint = {}) {
  if (rho == 0.0 || w == Complex(0.0, 0.0)) return 0.0;
  const Complex i(0.0, 1.0);
  const Complex root = std::sqrt(1.0 + 2.0 * i * rho * w) * std::sqrt(1.0 - 2.0 * i * rho * w);
  const Complex primary = 2.0 * rho * w / (root + 1.0);
  if (!branch_hint) return primary;
  const Complex other = (-root - 1.0) / (2.0 * rho * w);
  return std::abs(other - *branch_hint) < std::abs(primary - *branch_hint) ? other : primary;
}

/// Point of the Schwinger-Dyson fixed point G(z1) = G_theta(z2),
/// z2 = z1 - rho R(G(z1)).
struct SDSolution {
  ComplexPoint z1;
  Complex G;
  Complex z2;
  double residual;
  int iterations;
};

struct SDOptions {
  double tol = 1e-10;
  int max_levels = 60;
  int max_iterations = 400;
  double damping = 0.5;
};

namespace detail {

inline Complex stieltjes_unchecked(const Measure1D& mu, Complex z) {
  if (!(z.imag() > 0.0)) return {kInf, kInf};
  return stieltjes(mu, z);
}

/// Subordination map w -> z1 - rho^2 / (z1 + 1/G_theta(w) - w). Its fixed point
/// is z2; it maps the half plane Im w > 0 into Im w >= Im z1.
struct SubordinationMap {
  const Measure1D& theta;
  double rho2;
  Complex z;

  struct Eval {
    Complex phi;
    Complex dphi;
    Complex denom;
    Complex G;
  };

  Eval operator()(Complex w, bool with_derivative) const {
    const Complex G = stieltjes(theta, w);
    const Complex F = 1.0 / G;
    const Complex D = z + F - w;
    Eval e{z - rho2 / D, 0.0, D, G};
    if (with_derivative) {
      const Complex dF = -stieltjes_derivative(theta, w) / (G * G);
      e.dphi = rho2 * (dF - 1.0) / (D * D);
    }
    return e;
  }
};

struct LevelResult {
  Complex w;
  int iterations;
  bool converged;
  double last_step;
};

/// Newton on w - Phi(w) with a damped fixed-point fallback. Newton steps are
/// accepted only when they stay above the level and shrink |w - Phi(w)|; the
/// damped branch halves its factor whenever the residual stops decreasing
/// after the first five iterations.
inline LevelResult solve_level(const SubordinationMap& map, Complex w, const SDOptions& opt) {
  const double floor_im = map.z.imag();
  double alpha = opt.damping;
  int damped_steps = 0;
  double prev_damped = kInf;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const auto e = map(w, true);
    const Complex f = w - e.phi;
    const double res = std::abs(f);
    const double scale = std::max(1.0, std::abs(w));
    if (res <= 1e-3 * opt.tol * scale || res <= 4e-16 * scale) return {w, it, true, res};
    const Complex jac = 1.0 - e.dphi;
    bool accepted = false;
    if (std::abs(jac) > 1e-300) {
      const Complex cand = w - f / jac;
      if (cand.imag() > 0.0 && cand.imag() >= floor_im * (1.0 - 1e-12) && std::isfinite(cand.real())) {
        const auto ec = map(cand, false);
        const double res_c = std::abs(cand - ec.phi);
        if (res_c < res) {
          w = cand;
          accepted = true;
        } else if (res <= opt.tol * scale) {
          return {w, it, true, res};  // rounding floor reached
        }
      }
    }
    if (!accepted) {
      ++damped_steps;
      if (damped_steps > 5 && res >= prev_damped) alpha = std::max(alpha * 0.5, 1.0 / 1024.0);
      prev_damped = res;
      w = (1.0 - alpha) * w + alpha * e.phi;
    }
  }
  const auto e = map(w, false);
  return {w, opt.max_iterations, false, std::abs(w - e.phi)};
}

inline bool is_point_mass_at_zero(const Measure1D& mu) {
  return mu.kind() == Measure1D::Kind::atoms && mu.atoms().size() == 1 && mu.atoms()[0].location == 0.0;
}

/// Residual of the subordination system behind eq. G(z1) = G_theta(z2):
/// |G - G_theta(z2)| + |G_lambda(w2) - G| with w2 = z1 + 1/G - z2 the
/// Bernoulli-side point, so that rho R(G) = rho^2 / w2 = z1 - z2.
inline double sd_residual(const Measure1D& theta, double rho, Complex z1, Complex G, Complex z2) {
  if (rho == 0.0) return std::abs(G - stieltjes_unchecked(theta, z1));
  const Complex w2 = z1 + 1.0 / G - z2;
  const Complex g_bern = w2 / ((w2 - rho) * (w2 + rho));
  return std::abs(G - stieltjes_unchecked(theta, z2)) + std::abs(g_bern - G);
}

}  // namespace detail

/// Solves G(z1) = G_theta(z1 - rho R_rho(G(z1))) for nu = theta (+) lambda_rho.
///
/// The unknown is the subordination point z2. Continuation starts at
/// Im = Y = 10 (support radius + rho), where the map contracts strongly, and
/// halves the height down to Im z1, warm-starting each level. A warm_start z2
/// (e.g. from a neighbouring grid point) is tried directly at the target first.
inline SDSolution sd_solve(const Measure1D& theta_sym, double rho, ComplexPoint z1, const SDOptions& opt = {},
                           std::optional<Complex> warm_start = {}) {
  if (!std::isfinite(z1.real()) || !std::isfinite(z1.imag())) throw DomainError("sd_solve: non-finite z1");
  if (!(z1.imag() > 0.0)) throw DomainError("sd_solve: Im(z1) must be > 0");
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("sd_solve: rho must be >= 0");
  if (!theta_sym.is_symmetric(1e-9)) throw DomainError("sd_solve: theta must be symmetric");
  if (rho == 0.0) {
    const Complex G = stieltjes(theta_sym, z1);
    return {z1, G, z1, 0.0, 0};
  }
  if (detail::is_point_mass_at_zero(theta_sym)) {
    const Complex z2 = z1 - rho * rho / z1;
    const Complex G = z1 / (z1 * z1 - rho * rho);
    return {z1, G, z2, detail::sd_residual(theta_sym, rho, z1, G, z2), 0};
  }

  auto finish = [&](Complex w, int iterations) {
    const Complex G = stieltjes(theta_sym, w);
    return SDSolution{z1, G, w, detail::sd_residual(theta_sym, rho, z1, G, w), iterations};
  };

  int total = 0;
  if (warm_start && warm_start->imag() > 0.0) {
    const detail::SubordinationMap map{theta_sym, rho * rho, z1};
    const Complex start = warm_start->imag() >= z1.imag() ? *warm_start : map(*warm_start, false).phi;
    SDOptions quick = opt;
    quick.max_iterations = 40;
    const auto lr = detail::solve_level(map, start, quick);
    total += lr.iterations;
    if (lr.converged) return finish(lr.w, total);
  }

  const double Y = std::max(10.0 * (theta_sym.support_radius() + rho), z1.imag());
  double y = Y;
  Complex w(z1.real(), Y);
  double last = kInf;
  for (int level = 0; level <= opt.max_levels; ++level) {
    const bool final_level = y <= z1.imag() || level == opt.max_levels;
    if (final_level) y = z1.imag();
    const detail::SubordinationMap map{theta_sym, rho * rho, Complex(z1.real(), y)};
    w = map(w, false).phi;
    const auto lr = detail::solve_level(map, w, opt);
    total += lr.iterations;
    last = lr.last_step;
    if (!lr.converged)
      throw SolverError("sd_solve: no convergence at continuation level " + std::to_string(level) +
                            " (Im = " + std::to_string(y) + ")",
                        last);
    w = lr.w;
    if (final_level) return finish(w, total);
    y *= 0.5;
  }
  throw SolverError("sd_solve: continuation ladder exhausted", last);
}

inline SDSolution sd_solve(const Measure1D& theta_sym, double rho, ComplexPoint z1, double tol) {
  SDOptions opt;
  opt.tol = tol;
  return sd_solve(theta_sym, rho, z1, opt);
}

/// Stieltjes transform of the Bernoulli factor's subordinated companion,
/// G_U = G R(G) / 2, rebuilt from a solution (rho R(G) = z1 - z2).
inline Complex companion_stieltjes(const SDSolution& sol, double rho) {
  if (rho == 0.0) return 0.0;
  return sol.G * (sol.z1 - sol.z2) / (2.0 * rho);
}

/// |Im G| <= kappa1: runtime mirror of the a-priori diagonal bound.
inline bool diag_bounds_check(const SDSolution& sol, double kappa1) { return std::abs(sol.G.imag()) <= kappa1; }

struct ConvolutionResult {
  Measure1D density;
  double renormalization;
};

/// theta~ (+) lambda_rho as a symmetric grid density on out_grid: sd_solve at
/// |x| + i eta and |x| + i eta/2, then Richardson-extrapolated inversion.
/// Points are solved in parallel chunks, warm-starting along each chunk.
inline ConvolutionResult free_convolve_bernoulli(const Measure1D& theta, double rho, std::span<const double> out_grid,
                                                 double eta, const SDOptions& opt = {}) {
  if (theta.support_hint().lo < 0.0) throw DomainError("free_convolve_bernoulli: theta must live on [0, inf)");
  if (!(eta > 0.0)) throw DomainError("free_convolve_bernoulli: eta must be > 0");
  const auto theta_sym = symmetrize(theta);
  std::vector<double> abs_x;
  for (double x : out_grid) abs_x.push_back(std::abs(x));
  std::sort(abs_x.begin(), abs_x.end());
  abs_x.erase(std::unique(abs_x.begin(), abs_x.end()), abs_x.end());
  std::vector<Complex> g_eta(abs_x.size()), g_half(abs_x.size());

  parallel_chunks(abs_x.size(), [&](std::size_t begin, std::size_t end) {
    std::optional<Complex> warm;
    for (std::size_t i = begin; i < end; ++i) {
      try {
        const auto s1 = sd_solve(theta_sym, rho, {abs_x[i], eta}, opt, warm);
        const auto s2 = sd_solve(theta_sym, rho, {abs_x[i], 0.5 * eta}, opt, s1.z2);
        g_eta[i] = s1.G;
        g_half[i] = s2.G;
        warm = s1.z2;
      } catch (const SolverError& e) {
        throw SolverError(std::string(e.what()) + " at grid point x = " + std::to_string(abs_x[i]),
                          e.last_residual());
      }
    }
  });

  std::vector<Complex> full_eta(out_grid.size()), full_half(out_grid.size());
  for (std::size_t k = 0; k < out_grid.size(); ++k) {
    const auto idx = static_cast<std::size_t>(
        std::lower_bound(abs_x.begin(), abs_x.end(), std::abs(out_grid[k])) - abs_x.begin());
    full_eta[k] = g_eta[idx];
    full_half[k] = g_half[idx];
  }
  auto inv = stieltjes_invert(full_eta, full_half, out_grid, eta);
  return {std::move(inv.density), inv.renormalization};
}

// ---------------------------------------------------------------------------
// psi / S-transform on the half line
// ---------------------------------------------------------------------------

/// A measure sigma on [0, inf), held either directly or as the law of X^2 for
/// X ~ theta. The second form integrates in the variable of theta, so a
/// piecewise-linear theta is represented exactly (no x^{-1/2} interpolation
/// error where sigma has a density singular at 0).
class HalfLineMeasure {
 public:
  static HalfLineMeasure direct(Measure1D sigma) { return HalfLineMeasure(std::move(sigma), false); }
  static HalfLineMeasure square_of(Measure1D theta) { return HalfLineMeasure(std::move(theta), true); }

  bool squared() const noexcept { return squared_; }
  const Measure1D& base() const noexcept { return base_; }

  /// Visits (x, weight) quadrature nodes of sigma, refined where the kernel
  /// 1/(1 - u x) varies fastest (near x = 1/u).
  template <typename Visit>
  void for_each_node(double u, Visit&& visit) const {
    if (!squared_) {
      detail::for_each_node(
          base_, [u](double x) { return u == 0.0 ? kInf : std::abs(1.0 / u - x); }, visit);
      return;
    }
    auto scale = [u](double s) {
      if (u == 0.0) return kInf;
      if (u < 0.0) return s + 1.0 / std::sqrt(-u);
      return std::abs(1.0 / std::sqrt(u) - s);
    };
    detail::for_each_node(base_, scale, [&](double s, double w) { visit(s * s, w); });
  }

  double moment(int k) const { return squared_ ? ringlab::moment(base_, 2 * k) : ringlab::moment(base_, k); }

  double max_point() const {
    double m;
    if (base_.kind() == Measure1D::Kind::grid) {
      const auto& g = base_.grid();
      const auto& v = base_.values();
      m = g.back();
      for (std::size_t i = g.size(); i-- > 1;) {
        if (v[i] > 0.0 || v[i - 1] > 0.0) {
          m = g[i];
          break;
        }
      }
    } else {
      m = -kInf;
      base_.for_each_point([&](double x, double) { m = std::max(m, x); });
    }
    return squared_ ? m * m : m;
  }

 private:
  HalfLineMeasure(Measure1D m, bool squared) : base_(std::move(m)), squared_(squared) {
    if (base_.support_hint().lo < 0.0) throw DomainError("half-line measure must live on [0, inf)");
    bool atom_at_zero = false;
    base_.for_each_point([&](double x, double w) {
      if (x == 0.0 && w > 0.0) atom_at_zero = true;
    });
    if (atom_at_zero) throw DomainError("half-line measure has an atom at 0");
  }

  Measure1D base_;
  bool squared_;
};

/// I0 = int 1/(1-ux), I1 = int x/(1-ux), J1 = int x/(1-ux)^2, J2 = int x^2/(1-ux)^2
/// against sigma, for u < 1/x_max. psi(u) = u I1 and 1 + psi(u) = I0.
struct PsiIntegrals {
  double I0;
  double I1;
  double J1;
  double J2;
};

inline PsiIntegrals psi_integrals(const HalfLineMeasure& sigma, double u) {
  PsiIntegrals r{0.0, 0.0, 0.0, 0.0};
  sigma.for_each_node(u, [&](double x, double w) {
    const double k = 1.0 / (1.0 - u * x);
    const double xk = x * k;
    r.I0 += w * k;
    r.I1 += w * xk;
    r.J1 += w * xk * k;
    r.J2 += w * xk * xk;
  });
  return r;
}

/// psi(u) = int ux / (1 - ux) dsigma.
inline double psi(const HalfLineMeasure& sigma, double u) { return u * psi_integrals(sigma, u).I1; }
inline double psi(const Measure1D& sigma, double u) { return psi(HalfLineMeasure::direct(sigma), u); }

namespace detail {

/// chi(t) for t in (-1, 0): the u < 0 with psi(u) = t, found on l = log(-u).
inline double chi_negative(const HalfLineMeasure& sigma, double t) {
  auto f = [&](double l) { return psi(sigma, -std::exp(l)) - t; };
  double lo = -40.0, hi = 60.0;
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo < 0.0) return -std::exp(lo);
  if (fhi > 0.0) throw DomainError("s_transform: t = " + std::to_string(t) + " is too close to -1 for this measure");
  std::uintmax_t it = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52),
                                                   it);
  return -std::exp(0.5 * (r.first + r.second));
}

}  // namespace detail

/// S-transform S(t) = chi(t) (1 + t) / t of a measure on (0, inf), chi the
/// inverse of psi. Defined for t in (-1, 0) (u < 0) and t in (0, sup psi)
/// (u in (0, 1/x_max)); t = 0 gives the limit 1/m1.
inline double s_transform(const HalfLineMeasure& sigma, double t) {
  if (!(t > -1.0 && t < 1.0)) throw DomainError("s_transform: t must lie in (-1, 1)");
  if (t == 0.0) return 1.0 / sigma.moment(1);
  if (t < 0.0) {
    const double u = detail::chi_negative(sigma, t);
    return u * (1.0 + t) / t;
  }
  const double umax = 1.0 / sigma.max_point();
  auto f = [&](double v) { return psi(sigma, v) - t; };
  const double hi = umax * (1.0 - 1e-13);
  const double fhi = f(hi);
  if (fhi < 0.0) throw DomainError("s_transform: t = " + std::to_string(t) + " exceeds sup psi on (0, 1/x_max)");
  std::uintmax_t it = 200;
  const auto r =
      boost::math::tools::toms748_solve(f, 0.0, hi, -t, fhi, boost::math::tools::eps_tolerance<double>(52), it);
  const double u = 0.5 * (r.first + r.second);
  return u * (1.0 + t) / t;
}

inline double s_transform(const Measure1D& sigma, double t) {
  return s_transform(HalfLineMeasure::direct(sigma), t);
}

/// S-transform tabulated along the radial variable t in (0, 1]: S(t - 1),
/// the corresponding u = chi(t - 1) <= 0 and F(t) = 1/sqrt(S(t - 1)).
struct STransformTable {
  std::vector<double> t_grid;
  std::vector<double> S_values;
  std::vector<double> u_values;
  std::vector<double> F_values;
  Interval psi_domain;
  /// max over the table of |psi(u_k) - (t_k - 1)|
  double max_identity_error;
};

/// Chebyshev-spaced t_k = (1 - cos(pi k / n)) / 2, k = 1..n, refined by
/// midpoint insertion where F jumps by more than 4 (F(1) - F(0+)) / n.
/// Throws AccuracyError when F decreases anywhere by more than 1e-10.
inline STransformTable s_transform_table(const HalfLineMeasure& sigma, std::size_t n = 400) {
  struct Row {
    double t, u, S, F;
  };
  auto eval = [&](double t) {
    Row r{t, 0.0, 0.0, 0.0};
    if (t >= 1.0) {
      r.S = 1.0 / sigma.moment(1);
    } else {
      r.u = detail::chi_negative(sigma, t - 1.0);
      r.S = r.u * t / (t - 1.0);
    }
    r.F = 1.0 / std::sqrt(r.S);
    return r;
  };
  std::vector<Row> rows;
  for (std::size_t k = 1; k <= n; ++k)
    rows.push_back(eval(k == n ? 1.0 : 0.5 * (1.0 - std::cos(kPi * static_cast<double>(k) / static_cast<double>(n)))));
  const double threshold = 4.0 * std::abs(rows.back().F - rows.front().F) / static_cast<double>(n);
  for (int pass = 0; pass < 8 && rows.size() < 4 * n; ++pass) {
    std::vector<Row> next{rows.front()};
    bool inserted = false;
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
      if (std::abs(rows[k + 1].F - rows[k].F) > threshold && rows[k + 1].t - rows[k].t > 1e-12) {
        next.push_back(eval(0.5 * (rows[k].t + rows[k + 1].t)));
        inserted = true;
      }
      next.push_back(rows[k + 1]);
    }
    rows = std::move(next);
    if (!inserted) break;
  }
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    if (rows[k + 1].F < rows[k].F - 1e-10)
      throw AccuracyError("s_transform_table: F decreases on t in [" + std::to_string(rows[k].t) + ", " +
                          std::to_string(rows[k + 1].t) + "]");
  }
  STransformTable tab;
  double err = 0.0;
  for (const auto& r : rows) {
    tab.t_grid.push_back(r.t);
    tab.S_values.push_back(r.S);
    tab.u_values.push_back(r.u);
    tab.F_values.push_back(r.F);
    err = std::max(err, std::abs(psi(sigma, r.u) - (r.t - 1.0)));
  }
  tab.psi_domain = {tab.u_values.front(), 0.0};
  tab.max_identity_error = err;
  return tab;
}

// ---------------------------------------------------------------------------
// Imaginary-axis Poisson integrals of a symmetric law
// ---------------------------------------------------------------------------

/// For theta on [0, inf) and its symmetrization theta~, evaluates at sigma > 0
///   p(sigma) = int sigma / (sigma^2 + x^2) dtheta   (= -Im G_theta~(i sigma))
///   q(sigma) = int x^2 / (sigma^2 + x^2) dtheta     (= 1 - sigma p)
/// and their sigma-derivatives, without cancellation in q.
class PoissonPair {
 public:
  struct Value {
    double p, q, dp, dq, d2p, d2q;
  };

  /// Grid densities are tabulated on a geometric sigma grid (ratio 1.01, down
  /// to 1e-12 R) and read back by quintic Hermite interpolation; exact() always
  /// integrates.
  explicit PoissonPair(const Measure1D& theta, bool tabulate = true) : theta_(theta) {
    if (theta.support_hint().lo < 0.0) throw DomainError("PoissonPair: theta must live on [0, inf)");
    radius_ = theta.support_radius();
    for (int k = 0; k < kSeriesTerms; ++k) even_moments_[k] = moment(theta, 2 * k);
    if (tabulate && theta.kind() == Measure1D::Kind::grid && radius_ > 0.0) build_table();
  }

  double support_radius() const noexcept { return radius_; }

  Value operator()(double sigma) const {
    if (sigma > 10.0 * radius_ && radius_ > 0.0) return series(sigma);
    if (!table_.empty() && sigma >= table_sigma_.front()) return interpolate(sigma);
    return exact(sigma);
  }

  Value exact(double sigma) const {
    if (sigma > 10.0 * radius_ && radius_ > 0.0) return series(sigma);
    const double s2 = sigma * sigma;
    Value r{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    detail::for_each_node(
        theta_, [sigma](double x) { return std::abs(x) + sigma; },
        [&](double x, double w) {
          const double x2 = x * x;
          const double inv = 1.0 / (s2 + x2);
          const double inv3 = inv * inv * inv;
          r.p += w * sigma * inv;
          r.q += w * x2 * inv;
          r.dp += w * (x2 - s2) * inv * inv;
          r.dq -= w * 2.0 * sigma * x2 * inv * inv;
          r.d2p -= w * 2.0 * sigma * (3.0 * x2 - s2) * inv3;
          r.d2q += w * 2.0 * x2 * (3.0 * s2 - x2) * inv3;
        });
    return r;
  }

 private:
  static constexpr int kSeriesTerms = 12;

  // sigma > 10 R: expand in (x / sigma)^2 <= 1e-2
  Value series(double sigma) const {
    const double inv2 = 1.0 / (sigma * sigma);
    double p = 0, q = 0, dp = 0, dq = 0, d2p = 0, d2q = 0;
    double pow = 1.0;  // sigma^{-2k}
    for (int k = 0; k < kSeriesTerms; ++k) {
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      const double term = sign * even_moments_[k] * pow;
      p += term / sigma;
      dp += -(2.0 * k + 1.0) * term / (sigma * sigma);
      d2p += (2.0 * k + 1.0) * (2.0 * k + 2.0) * term / (sigma * sigma * sigma);
      if (k >= 1) {
        q -= term;
        dq -= -2.0 * k * term / sigma;
        d2q -= 2.0 * k * (2.0 * k + 1.0) * term * inv2;
      }
      pow *= inv2;
    }
    return {p, q, dp, dq, d2p, d2q};
  }

  void build_table() {
    const double lo = 1e-12 * radius_, hi = 10.0 * radius_;
    const double ratio = 1.01;
    const auto n = static_cast<std::size_t>(std::ceil(std::log(hi / lo) / std::log(ratio)));
    table_sigma_.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
      table_sigma_[k] = k == n ? hi : lo * std::exp(static_cast<double>(k) * std::log(hi / lo) / static_cast<double>(n));
    table_.resize(n + 1);
    parallel_for(n + 1, [&](std::size_t k) { table_[k] = exact(table_sigma_[k]); });
    log_lo_ = std::log(lo);
    inv_log_step_ = static_cast<double>(n) / std::log(hi / lo);
  }

  // quintic Hermite on one cell from values and first two derivatives
  static void hermite(double f0, double d0, double e0, double f1, double d1, double e1, double h, double t, double& f,
                      double& d, double& e) {
    const double c0 = f0, c1 = h * d0, c2 = 0.5 * h * h * e0;
    const double g0 = h * d1, g1 = h * h * e1;
    const double c3 = -10.0 * f0 - 6.0 * c1 - 3.0 * c2 + 10.0 * f1 - 4.0 * g0 + 0.5 * g1;
    const double c4 = 15.0 * f0 + 8.0 * c1 + 3.0 * c2 - 15.0 * f1 + 7.0 * g0 - g1;
    const double c5 = -6.0 * f0 - 3.0 * c1 - c2 + 6.0 * f1 - 3.0 * g0 + 0.5 * g1;
    f = c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5))));
    d = (c1 + t * (2.0 * c2 + t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5)))) / h;
    e = (2.0 * c2 + t * (6.0 * c3 + t * (12.0 * c4 + t * 20.0 * c5))) / (h * h);
  }

  Value interpolate(double sigma) const {
    auto k = static_cast<std::size_t>(std::max(0.0, (std::log(sigma) - log_lo_) * inv_log_step_));
    k = std::min(k, table_.size() - 2);
    while (k > 0 && table_sigma_[k] > sigma) --k;
    while (k + 2 < table_.size() && table_sigma_[k + 1] < sigma) ++k;
    const double h = table_sigma_[k + 1] - table_sigma_[k];
    const double t = (sigma - table_sigma_[k]) / h;
    const auto& a = table_[k];
    const auto& b = table_[k + 1];
    Value v{};
    hermite(a.p, a.dp, a.d2p, b.p, b.dp, b.d2p, h, t, v.p, v.dp, v.d2p);
    hermite(a.q, a.dq, a.d2q, b.q, b.dq, b.d2q, h, t, v.q, v.dq, v.d2q);
    return v;
  }

  Measure1D theta_;
  double radius_ = 0.0;
  std::array<double, kSeriesTerms> even_moments_{};
  std::vector<double> table_sigma_;
  std::vector<Value> table_;
  double log_lo_ = 0.0;
  double inv_log_step_ = 0.0;
};

}  // namespace ringlab
