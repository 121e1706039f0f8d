#pragma once

// Limiting eigenvalue law of U T V for a singular-value law theta: the ring
// radii and the radial density, computed twice (S-transform and log-potential)
// so the two can be checked against each other.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>
#include <nlohmann/json.hpp>

#include "ringlab/error.hpp"
#include "ringlab/freeprob.hpp"
#include "ringlab/measures.hpp"
#include "ringlab/parallel.hpp"

namespace ringlab {

struct RingRadii {
  double inner;
  double outer;
};

/// outer = (int x^2)^{1/2}, inner = (int x^{-2})^{-1/2}, inner = 0 when that
/// moment diverges.
inline RingRadii ring_radii(const Measure1D& theta) {
  if (theta.support_hint().lo < 0.0) throw DomainError("ring_radii: theta must live on [0, inf)");
  const double m2 = moment(theta, 2);
  const double mm2 = moment(theta, -2);
  return {std::isfinite(mm2) ? 1.0 / std::sqrt(mm2) : 0.0, std::sqrt(m2)};
}

enum class Pipeline { stransform, girko };

inline const char* to_string(Pipeline p) { return p == Pipeline::stransform ? "stransform" : "girko"; }

/// Radial law of the limit: density rho(r) (planar, so mass = int 2 pi r rho dr)
/// and the radial CDF on r_grid. A collapsed law (inner == outer) is the
/// uniform law on one circle; its density vector is all zero.
struct RingLaw {
  double inner = 0.0;
  double outer = 0.0;
  std::vector<double> r_grid;
  std::vector<double> density;
  std::vector<double> cdf;
  Pipeline pipeline = Pipeline::stransform;
  bool collapsed = false;
  double renormalization = 1.0;
};

/// mu_A(|lambda| <= r), linear between grid nodes.
inline double ring_cdf(const RingLaw& law, double r) {
  if (law.collapsed) return r >= law.outer ? 1.0 : 0.0;
  if (r < law.inner) return 0.0;
  if (r >= law.outer) return 1.0;
  const auto& g = law.r_grid;
  if (r <= g.front()) return law.cdf.front() * (g.front() > 0.0 ? std::clamp(r / g.front(), 0.0, 1.0) : 1.0);
  if (r >= g.back()) return law.cdf.back();
  const auto it = std::upper_bound(g.begin(), g.end(), r);
  const auto i = static_cast<std::size_t>(it - g.begin()) - 1;
  // the CDF has a kink at each radius; interpolate up to it, not across it
  double x0 = g[i], x1 = g[i + 1], f0 = law.cdf[i], f1 = law.cdf[i + 1];
  if (x0 < law.inner) {
    x0 = law.inner;
    f0 = 0.0;
  }
  if (x1 > law.outer) {
    x1 = law.outer;
    f1 = 1.0;
  }
  return f0 + (r - x0) / (x1 - x0) * (f1 - f0);
}

namespace detail {

inline void check_r_grid(std::span<const double> r_grid) {
  if (r_grid.empty()) throw DomainError("r_grid is empty");
  if (r_grid.front() < 0.0) throw DomainError("r_grid must be nonnegative");
  for (std::size_t i = 1; i < r_grid.size(); ++i)
    if (!(r_grid[i] > r_grid[i - 1])) throw DomainError("r_grid must be strictly increasing");
}

inline bool is_collapsed(const RingRadii& rr) { return rr.outer - rr.inner <= 1e-12 * rr.outer; }

inline RingLaw collapsed_law(const RingRadii& rr, std::span<const double> r_grid, Pipeline p) {
  RingLaw law;
  law.inner = law.outer = rr.outer;
  law.r_grid.assign(r_grid.begin(), r_grid.end());
  law.density.assign(r_grid.size(), 0.0);
  for (double r : r_grid) law.cdf.push_back(r >= rr.outer ? 1.0 : 0.0);
  law.pipeline = p;
  law.collapsed = true;
  return law;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// S-transform route
// ---------------------------------------------------------------------------

/// Radial quantile map F(t) = 1/sqrt(S(t - 1)), S the S-transform of the law
/// of X^2, X ~ theta. F maps (0, 1] onto (inner, outer] and mu_A(|lambda| <= F(t)) = t.
inline double radial_quantile(const Measure1D& theta, double t) {
  if (!(t > 0.0 && t <= 1.0)) throw DomainError("radial_quantile: t must lie in (0, 1]");
  const auto sigma = HalfLineMeasure::square_of(theta);
  return 1.0 / std::sqrt(s_transform(sigma, t - 1.0));
}

namespace detail {

struct RadialPoint {
  double density;
  double cdf;
};

/// Along u < 0 the quantile map reads t = I0(u), r^2 = I1/I0, so
/// rho = 1 / (pi d(r^2)/dt) = J1 I0^2 / (pi (J2 I0 - I1 J1)).
inline RadialPoint radial_point_stransform(const HalfLineMeasure& sigma, double r, const RingRadii& rr) {
  auto r2_of = [&](double l) {
    const auto I = psi_integrals(sigma, -std::exp(l));
    return I.I1 / I.I0;
  };
  const double target = r * r;
  double lo = -40.0, hi = 60.0;
  const double flo = r2_of(lo) - target;
  const double fhi = r2_of(hi) - target;
  double l;
  if (flo <= 0.0) {
    l = lo;
  } else if (fhi >= 0.0) {
    l = hi;
  } else {
    std::uintmax_t it = 200;
    const auto br = boost::math::tools::toms748_solve([&](double x) { return r2_of(x) - target; }, lo, hi, flo, fhi,
                                                      boost::math::tools::eps_tolerance<double>(50), it);
    l = 0.5 * (br.first + br.second);
  }
  const auto I = psi_integrals(sigma, -std::exp(l));
  const double den = I.J2 * I.I0 - I.I1 * I.J1;
  if (!(den > 0.0))
    throw AccuracyError("radial_density_stransform: quantile map not increasing at r = " + std::to_string(r));
  (void)rr;
  return {I.J1 * I.I0 * I.I0 / (kPi * den), I.I0};
}

}  // namespace detail

/// Radial density from the S-transform of theta^2. theta must have no atom at 0.
/// Throws AccuracyError when the numerical quantile map fails to increase.
inline RingLaw radial_density_stransform(const Measure1D& theta, std::span<const double> r_grid) {
  detail::check_r_grid(r_grid);
  const auto rr = ring_radii(theta);
  if (detail::is_collapsed(rr)) return detail::collapsed_law(rr, r_grid, Pipeline::stransform);
  const auto sigma = HalfLineMeasure::square_of(theta);
  const double m1 = sigma.moment(1);
  const double var = sigma.moment(2) - m1 * m1;

  RingLaw law;
  law.inner = rr.inner;
  law.outer = rr.outer;
  law.r_grid.assign(r_grid.begin(), r_grid.end());
  law.density.assign(r_grid.size(), 0.0);
  law.cdf.assign(r_grid.size(), 0.0);
  law.pipeline = Pipeline::stransform;

  const double edge = 1e-12 * rr.outer;
  parallel_for(r_grid.size(), [&](std::size_t i) {
    const double r = r_grid[i];
    if (r > rr.outer + edge) {
      law.cdf[i] = 1.0;
    } else if (r >= rr.outer - edge) {
      law.density[i] = m1 / (kPi * var);
      law.cdf[i] = 1.0;
    } else if (rr.inner > 0.0 && r < rr.inner - edge) {
      law.cdf[i] = 0.0;
    } else if (rr.inner > 0.0 && r <= rr.inner + edge) {
      // u -> -inf limit, in moments of theta^2
      const double mm1 = sigma.moment(-1), mm2 = sigma.moment(-2);
      law.density[i] = std::isfinite(mm2) ? mm1 * mm1 * mm1 / (kPi * (mm2 - mm1 * mm1)) : 0.0;
    } else {
      // at r = 0 (inner = 0) take the value just off the origin
      const double r_eval = std::max(r, 1e-6 * rr.outer);
      const auto pt = detail::radial_point_stransform(sigma, r_eval, rr);
      law.density[i] = pt.density;
      law.cdf[i] = r == 0.0 ? 0.0 : pt.cdf;
    }
  });
  for (std::size_t i = 1; i < law.cdf.size(); ++i) {
    if (law.cdf[i] < law.cdf[i - 1] - 1e-10)
      throw AccuracyError("radial_density_stransform: F not increasing on r in [" + std::to_string(r_grid[i - 1]) +
                          ", " + std::to_string(r_grid[i]) + "]");
  }
  return law;
}

// ---------------------------------------------------------------------------
// Log-potential route
// ---------------------------------------------------------------------------

/// h(r) = int log|x| d nu^r with nu^r = theta~ (+) lambda_r, evaluated on the
/// imaginary axis: G_nu(i s) = -i p(sigma(s)) where sigma solves
///   sigma = s + r^2 / (s + Q(sigma)),  Q = q / p   (subordination restricted to iR),
/// and h(r) = int_0^inf (s/(1+s^2) - p(sigma(s))) ds. Differentiating under the
/// integral gives the flux C(r) = r h'(r) = mu_A(|lambda| <= r) and the density
/// (1/2 pi r) dC/dr without numerical differencing.
class GirkoFlux {
 public:
  struct Value {
    double potential;  // h(r)
    double flux;       // C(r)
    double density;    // (1 / 2 pi r) C'(r)
  };

  /// panel_width: composite Gauss-Legendre panel length in log s.
  explicit GirkoFlux(const Measure1D& theta, double panel_width = 0.25) : pair_(theta) {
    if (theta.support_hint().lo < 0.0) throw DomainError("GirkoFlux: theta must live on [0, inf)");
    scale_ = std::max(pair_.support_radius(), 1e-300);
    m2_ = moment(theta, 2);
    using Gauss = boost::math::quadrature::gauss<double, 8>;
    const double t_lo = std::log(kLowCut * scale_);
    const double t_hi = std::log(kHighCut * scale_);
    const auto panels = static_cast<std::size_t>(std::ceil((t_hi - t_lo) / panel_width));
    const double w = (t_hi - t_lo) / static_cast<double>(panels);
    const auto& abs = Gauss::abscissa();
    const auto& wts = Gauss::weights();
    for (std::size_t k = 0; k < panels; ++k) {
      const double mid = t_lo + (static_cast<double>(k) + 0.5) * w;
      for (std::size_t j = abs.size(); j-- > 0;) nodes_.push_back({mid - 0.5 * w * abs[j], 0.5 * w * wts[j]});
      for (std::size_t j = 0; j < abs.size(); ++j) nodes_.push_back({mid + 0.5 * w * abs[j], 0.5 * w * wts[j]});
    }
  }

  Value operator()(double r) const {
    if (r < 0.0) throw DomainError("GirkoFlux: r must be >= 0");
    const double r2 = r * r;
    double pot = 0.0, a_int = 0.0, dI = 0.0;
    double sigma = -1.0;
    Local first{}, last{};
    double s_first = 0.0, s_last = 0.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const double s = std::exp(nodes_[k].t);
      sigma = solve_sigma(s, r2, sigma);
      const auto loc = local(s, r, sigma);
      const double ds = nodes_[k].w * s;
      pot += ds * (s / (1.0 + s * s) - loc.p);
      a_int += ds * loc.a;
      dI += ds * loc.di;
      if (k == 0) {
        first = loc;
        s_first = s;
      }
      last = loc;
      s_last = s;
    }
    (void)last;
    // near 0 the integrands are bounded; past s_hi they decay like s^-3
    pot += -first.p * s_first + (r2 + m2_ - 1.0) / (2.0 * s_last * s_last);
    a_int += first.a * s_first + 1.0 / (s_last * s_last);
    dI += first.di * s_first + 1.0 / (s_last * s_last);
    return {pot, r2 * a_int, (a_int + dI) / (2.0 * kPi)};
  }

 private:
  static constexpr double kLowCut = 1e-10;
  static constexpr double kHighCut = 1e5;

  struct Node {
    double t, w;
  };
  struct Local {
    double p;   // p(sigma)
    double a;   // -p'(sigma) sigma_r / r
    double di;  // d/dr of -p'(sigma) sigma_r
  };

  double solve_sigma(double s, double r2, double guess) const {
    if (r2 == 0.0) return s;
    const double lo = s;
    const double hi = s + r2 / s;
    auto f = [&](double sig) {
      const auto v = pair_(sig);
      const double Q = v.q / v.p;
      const double dQ = (v.dq * v.p - v.q * v.dp) / (v.p * v.p);
      const double D = s + Q;
      return std::make_pair(sig - s - r2 / D, 1.0 + r2 * dQ / (D * D));
    };
    // safeguarded Newton: f(lo) < 0 <= f(hi); bisect (geometrically) when a step leaves the bracket
    double a = lo, b = hi;
    double x = (guess > lo && guess < hi) ? guess : std::sqrt(lo * hi);
    for (int it = 0; it < 200; ++it) {
      const auto [fx, dfx] = f(x);
      if (fx == 0.0) return x;
      if (fx < 0.0) a = x; else b = x;
      double next = x - fx / dfx;
      if (!(dfx > 0.0) || !(next > a && next < b)) next = (b > 4.0 * a && a > 0.0) ? std::sqrt(a * b) : 0.5 * (a + b);
      if (std::abs(next - x) <= 4e-16 * x || b - a <= 4e-16 * b) return next;
      x = next;
    }
    throw SolverError("GirkoFlux: imaginary-axis subordination did not converge at s = " + std::to_string(s),
                      std::abs(f(x).first));
  }

  Local local(double s, double r, double sigma) const {
    const auto v = pair_(sigma);
    const double p2 = v.p * v.p;
    const double Q = v.q / v.p;
    const double dQ = (v.dq * v.p - v.q * v.dp) / p2;
    const double d2Q = (v.d2q * v.p - v.q * v.d2p) / p2 - 2.0 * v.dp * (v.dq * v.p - v.q * v.dp) / (p2 * v.p);
    const double D = s + Q;
    const double r2 = r * r;
    // F(sigma, r) = sigma - s - r^2 / D = 0
    const double F_s = 1.0 + r2 * dQ / (D * D);
    const double F_rr = -2.0 / D;
    const double F_rs = 2.0 * r * dQ / (D * D);
    const double F_ss = r2 * (d2Q / (D * D) - 2.0 * dQ * dQ / (D * D * D));
    const double sig_r_over_r = 2.0 / (D * F_s);
    const double sig_r = r * sig_r_over_r;
    const double sig_rr = -(F_rr + 2.0 * F_rs * sig_r + F_ss * sig_r * sig_r) / F_s;
    return {v.p, -v.dp * sig_r_over_r, -(v.d2p * sig_r * sig_r + v.dp * sig_rr)};
  }

  PoissonPair pair_;
  double scale_ = 1.0;
  double m2_ = 0.0;
  std::vector<Node> nodes_;
};

/// h(r) through free_convolve_bernoulli on a real grid and log_potential. Slower
/// and less accurate than GirkoFlux; kept as an independent check.
inline double girko_potential_real_axis(const Measure1D& theta, double r, std::span<const double> grid, double eta) {
  const auto conv = free_convolve_bernoulli(theta, r, grid, eta);
  return log_potential(conv.density);
}

enum class Laplacian { analytic, finite_difference };

struct GirkoOptions {
  Laplacian laplacian = Laplacian::analytic;
  /// finite-difference step as a fraction of the outer radius
  double dr_fraction = 1e-3;
  double panel_width = 0.25;
};

/// Radial density as (1/2 pi) Laplacian of h. The flux is normalized by its
/// value outside the ring (exactly 1 in exact arithmetic); the factor is kept
/// in renormalization.
inline RingLaw radial_density_girko(const Measure1D& theta, std::span<const double> r_grid,
                                    const GirkoOptions& opt = {}) {
  detail::check_r_grid(r_grid);
  const auto rr = ring_radii(theta);
  if (detail::is_collapsed(rr)) return detail::collapsed_law(rr, r_grid, Pipeline::girko);
  const GirkoFlux flux(theta, opt.panel_width);

  RingLaw law;
  law.inner = rr.inner;
  law.outer = rr.outer;
  law.r_grid.assign(r_grid.begin(), r_grid.end());
  law.density.assign(r_grid.size(), 0.0);
  law.cdf.assign(r_grid.size(), 0.0);
  law.pipeline = Pipeline::girko;

  const double mass = flux(1.25 * rr.outer).flux;
  if (!(std::abs(mass - 1.0) < 0.1))
    throw AccuracyError("radial_density_girko: flux outside the ring is " + std::to_string(mass));
  law.renormalization = 1.0 / mass;

  const double dr = opt.dr_fraction * rr.outer;
  auto laplacian_fd = [&](double r, double step) {
    if (r < step) {
      // even extension: Laplacian at 0 is 2 h''(0)
      const double h0 = flux(0.0).potential;
      const double h1 = flux(step).potential;
      return 4.0 * (h1 - h0) / (step * step);
    }
    const double hm = flux(r - step).potential, h0 = flux(r).potential, hp = flux(r + step).potential;
    return (hp - 2.0 * h0 + hm) / (step * step) + (hp - hm) / (2.0 * step * r);
  };

  // Within edge_band inside an edge the cutoff s >= 1e-10 R no longer
  // resolves the subordination point; the density there is extrapolated
  // quadratically from three points one band further in (a one-sided stencil).
  const double band = 1e-4 * rr.outer;
  auto one_sided = [&](double r, double edge, double dir) {
    double y[3];
    for (int k = 0; k < 3; ++k) y[k] = flux(edge + dir * band * (k + 1)).density;
    const double x = (r - edge) / (dir * band);  // in [0, 1]
    // Lagrange through nodes 1, 2, 3
    return y[0] * (x - 2.0) * (x - 3.0) / 2.0 - y[1] * (x - 1.0) * (x - 3.0) + y[2] * (x - 1.0) * (x - 2.0) / 2.0;
  };

  parallel_for(r_grid.size(), [&](std::size_t i) {
    const double r = r_grid[i];
    const auto v = flux(r);
    double dens = v.density;
    if (r >= rr.outer - band && r <= rr.outer) {
      dens = one_sided(r, rr.outer, -1.0);
    } else if (rr.inner > 0.0 && r >= rr.inner && r <= rr.inner + band) {
      dens = one_sided(r, rr.inner, 1.0);
    } else if (opt.laplacian == Laplacian::finite_difference)
      dens = (4.0 * laplacian_fd(r, dr) - laplacian_fd(r, 2.0 * dr)) / (3.0 * 2.0 * kPi);
    law.density[i] = std::max(dens, 0.0) / mass;
    law.cdf[i] = std::clamp(v.flux / mass, 0.0, 1.0);
  });
  return law;
}

// ---------------------------------------------------------------------------
// Shape checks and cross-validation
// ---------------------------------------------------------------------------

struct ShapeCheck {
  double mass;              // ring_cdf at the end of the grid
  double max_density;
  double first_positive;    // first r with density > 1e-3 max
  double last_positive;
  bool single_ring;         // no internal gap wider than 2 grid steps
  bool radii_consistent;    // first/last positive within 2 grid steps of inner/outer
};

inline ShapeCheck check_shape(const RingLaw& law) {
  ShapeCheck c{};
  c.mass = law.cdf.empty() ? 0.0 : law.cdf.back();
  if (law.collapsed) {
    c.first_positive = c.last_positive = law.outer;
    c.single_ring = c.radii_consistent = true;
    return c;
  }
  const auto& g = law.r_grid;
  const auto& d = law.density;
  c.max_density = *std::max_element(d.begin(), d.end());
  const double thr = 1e-3 * c.max_density;
  std::size_t first = d.size(), last = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > thr) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (first == d.size()) return c;
  c.first_positive = g[first];
  c.last_positive = g[last];
  double step = 0.0;
  for (std::size_t i = 1; i < g.size(); ++i) step = std::max(step, g[i] - g[i - 1]);
  c.single_ring = true;
  for (std::size_t i = first; i <= last;) {
    if (d[i] > thr) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j <= last && d[j] <= thr) ++j;
    if (g[j] - g[i - 1] > 3.0 * step) c.single_ring = false;  // gap of more than 2 steps
    i = j;
  }
  c.radii_consistent = std::abs(c.first_positive - law.inner) <= 2.0 * step + 1e-12 &&
                       std::abs(c.last_positive - law.outer) <= 2.0 * step + 1e-12;
  return c;
}

struct CrossValidation {
  RingLaw stransform;
  RingLaw girko;
  double sup_distance;
  double l1_distance;  // int |difference| 2 pi r dr (trapezoid)
  double threshold;
  bool pass;
};

/// Distances between two pipeline results on the same grid. Grid points
/// within edge_band of the radii are left out of the sup (the density jumps
/// there and each pipeline resolves the jump differently).
inline CrossValidation cross_validate(RingLaw stransform, RingLaw girko, bool atomic, double edge_band = 0.0) {
  if (stransform.r_grid != girko.r_grid) throw PreconditionError("cross_validate: laws on different grids");
  CrossValidation cv{std::move(stransform), std::move(girko), 0.0, 0.0, atomic ? 1e-2 : 5e-3, false};
  const auto& r_grid = cv.stransform.r_grid;
  const auto& a = cv.stransform.density;
  const auto& b = cv.girko.density;
  const double inner = cv.stransform.inner, outer = cv.stransform.outer;
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    const double r = r_grid[i];
    const double diff = std::abs(a[i] - b[i]);
    if (i > 0) {
      const double prev = std::abs(a[i - 1] - b[i - 1]);
      cv.l1_distance += 0.5 * (r_grid[i] - r_grid[i - 1]) * 2.0 * kPi * (r * diff + r_grid[i - 1] * prev);
    }
    const bool near_edge =
        std::abs(r - outer) <= edge_band || (inner > 0.0 && std::abs(r - inner) <= edge_band);
    if (!near_edge) cv.sup_distance = std::max(cv.sup_distance, diff);
  }
  cv.pass = cv.sup_distance < cv.threshold;
  return cv;
}

/// Both pipelines on one grid.
inline CrossValidation cross_validate(const Measure1D& theta, std::span<const double> r_grid, double edge_band = 0.0,
                                      const GirkoOptions& opt = {}) {
  return cross_validate(radial_density_stransform(theta, r_grid), radial_density_girko(theta, r_grid, opt),
                        theta.is_atomic(), edge_band);
}

inline void to_json(nlohmann::json& j, const RingLaw& law) {
  j = nlohmann::json{{"inner", law.inner},
                     {"outer", law.outer},
                     {"pipeline", to_string(law.pipeline)},
                     {"collapsed", law.collapsed},
                     {"renormalization", law.renormalization},
                     {"r", law.r_grid},
                     {"density", law.density},
                     {"cdf", law.cdf}};
}

}  // namespace ringlab
