#pragma once

// One-dimensional probability measures (atomic, piecewise-linear grid density,
// empirical sample) and the transforms every other module consumes.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "ringlab/error.hpp"

namespace ringlab {

using Complex = std::complex<double>;
/// Point of the complex plane: spectral parameter of a Stieltjes transform, z of
/// the Girko field, shift w of the additive model.
using ComplexPoint = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Atom {
  double location;
  double weight;
};

struct Interval {
  double lo;
  double hi;
};

/// A probability measure on the real line.
///
/// Three representations are supported:
///   - atoms: distinct locations with positive weights,
///   - grid: a nonnegative piecewise-linear density on a strictly increasing
///     grid, identically zero outside [grid.front(), grid.back()],
///   - empirical: a finite sample, each point carrying weight 1/n.
/// Values are immutable after construction. Total mass is 1 within 1e-9.
class Measure1D {
 public:
  enum class Kind { atoms, grid, empirical };

  static constexpr double kMassTolerance = 1e-9;

  static Measure1D from_atoms(std::vector<Atom> atoms, std::optional<Interval> hint = {}) {
    if (atoms.empty()) throw DomainError("atomic measure needs at least one atom");
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });
    double mass = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const auto& a = atoms[i];
      if (!std::isfinite(a.location) || !std::isfinite(a.weight) || a.weight < 0.0)
        throw DomainError("atom locations and weights must be finite, weights >= 0");
      if (i > 0 && a.location == atoms[i - 1].location)
        throw DomainError("atom locations must be distinct");
      mass += a.weight;
    }
    if (std::abs(mass - 1.0) > kMassTolerance)
      throw DomainError("atom weights sum to " + std::to_string(mass) + ", expected 1");
    Measure1D m(Kind::atoms);
    m.atoms_ = std::move(atoms);
    m.hint_ = hint.value_or(Interval{m.atoms_.front().location, m.atoms_.back().location});
    return m;
  }

  /// Merges coincident locations (summing weights) and drops zero weights.
  static Measure1D from_atoms_merged(std::vector<Atom> atoms, std::optional<Interval> hint = {}) {
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });
    std::vector<Atom> merged;
    for (const auto& a : atoms) {
      if (a.weight == 0.0) continue;
      if (!merged.empty() && merged.back().location == a.location) {
        merged.back().weight += a.weight;
      } else {
        merged.push_back(a);
      }
    }
    return from_atoms(std::move(merged), hint);
  }

  static Measure1D from_grid(std::vector<double> grid, std::vector<double> values,
                             std::optional<Interval> hint = {}, bool normalize = false) {
    if (grid.size() < 2 || grid.size() != values.size())
      throw DomainError("grid density needs >= 2 nodes and matching value count");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!std::isfinite(grid[i]) || !std::isfinite(values[i]))
        throw DomainError("grid density must be finite");
      if (values[i] < 0.0) throw DomainError("grid density must be nonnegative");
      if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("grid must be strictly increasing");
    }
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      mass += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
    if (normalize) {
      if (!(mass > 0.0)) throw DomainError("grid density has zero mass");
      for (auto& v : values) v /= mass;
    } else if (std::abs(mass - 1.0) > kMassTolerance) {
      throw DomainError("grid density integrates to " + std::to_string(mass) + ", expected 1");
    }
    Measure1D m(Kind::grid);
    m.grid_ = std::move(grid);
    m.values_ = std::move(values);
    m.hint_ = hint.value_or(Interval{m.grid_.front(), m.grid_.back()});
    return m;
  }

  static Measure1D from_samples(std::vector<double> samples) {
    if (samples.empty()) throw DomainError("empirical measure needs at least one sample");
    for (double x : samples)
      if (!std::isfinite(x)) throw DomainError("empirical samples must be finite");
    std::sort(samples.begin(), samples.end());
    Measure1D m(Kind::empirical);
    m.samples_ = std::move(samples);
    m.hint_ = Interval{m.samples_.front(), m.samples_.back()};
    return m;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_atomic() const noexcept { return kind_ != Kind::grid; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<double>& samples() const noexcept { return samples_; }
  Interval support_hint() const noexcept { return hint_; }
  double support_radius() const noexcept { return std::max(std::abs(hint_.lo), std::abs(hint_.hi)); }

  /// Calls fn(location, weight) for every point mass (atoms or samples).
  template <typename Fn>
  void for_each_point(Fn&& fn) const {
    if (kind_ == Kind::atoms) {
      for (const auto& a : atoms_) fn(a.location, a.weight);
    } else if (kind_ == Kind::empirical) {
      const double w = 1.0 / static_cast<double>(samples_.size());
      for (double x : samples_) fn(x, w);
    }
  }

  /// Number of cells of a grid density.
  std::size_t cell_count() const noexcept { return grid_.empty() ? 0 : grid_.size() - 1; }

  /// Point masses as a merged atom list (empirical duplicates collapse).
  std::vector<Atom> point_masses() const {
    std::vector<Atom> out;
    for_each_point([&](double x, double w) {
      if (!out.empty() && out.back().location == x) {
        out.back().weight += w;
      } else {
        out.push_back({x, w});
      }
    });
    return out;
  }

  double total_mass() const {
    if (kind_ != Kind::grid) {
      double s = 0.0;
      for_each_point([&](double, double w) { s += w; });
      return s;
    }
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < grid_.size(); ++i)
      mass += 0.5 * (values_[i] + values_[i + 1]) * (grid_[i + 1] - grid_[i]);
    return mass;
  }

  /// Density at x for grid measures (0 outside the grid).
  double density(double x) const {
    if (kind_ != Kind::grid) throw DomainError("density() needs a grid measure");
    if (x < grid_.front() || x > grid_.back()) return 0.0;
    auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    if (it == grid_.end()) return values_.back();
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin()) - 1;
    const double t = (x - grid_[i]) / (grid_[i + 1] - grid_[i]);
    return values_[i] + t * (values_[i + 1] - values_[i]);
  }

  /// One-sided limits of the grid density (differ only at the grid ends).
  double density_left(double x) const {
    if (x <= grid_.front() || x > grid_.back()) return 0.0;
    return density(x);
  }
  double density_right(double x) const {
    if (x < grid_.front() || x >= grid_.back()) return 0.0;
    return density(x);
  }

  /// Right-continuous distribution function mu((-inf, x]).
  double cdf(double x) const { return cdf_impl(x, false); }
  /// Left limit mu((-inf, x)).
  double cdf_left(double x) const { return cdf_impl(x, true); }

  /// True when the measure equals its reflection x -> -x.
  bool is_symmetric(double tol = 1e-12) const {
    if (kind_ == Kind::grid) {
      const std::size_t n = grid_.size();
      for (std::size_t i = 0; i < n; ++i) {
        const double scale = std::max(1.0, std::abs(grid_[i]));
        if (std::abs(grid_[i] + grid_[n - 1 - i]) > tol * scale) return false;
        if (std::abs(values_[i] - values_[n - 1 - i]) > tol * std::max(1.0, values_[i])) return false;
      }
      return true;
    }
    const auto pts = point_masses();
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double scale = std::max(1.0, std::abs(pts[i].location));
      if (std::abs(pts[i].location + pts[n - 1 - i].location) > tol * scale) return false;
      if (std::abs(pts[i].weight - pts[n - 1 - i].weight) > tol) return false;
    }
    return true;
  }

 private:
  explicit Measure1D(Kind k) : kind_(k) {}

  double cdf_impl(double x, bool left) const {
    if (kind_ == Kind::grid) {
      if (x <= grid_.front()) return 0.0;
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
        const double x0 = grid_[i], x1 = grid_[i + 1];
        if (x >= x1) {
          acc += 0.5 * (values_[i] + values_[i + 1]) * (x1 - x0);
          continue;
        }
        const double d = x - x0;
        const double slope = (values_[i + 1] - values_[i]) / (x1 - x0);
        return acc + values_[i] * d + 0.5 * slope * d * d;
      }
      return acc;
    }
    double acc = 0.0;
    for_each_point([&](double loc, double w) {
      if (loc < x || (!left && loc == x)) acc += w;
    });
    return acc;
  }

  Kind kind_;
  std::vector<Atom> atoms_;
  std::vector<double> grid_;
  std::vector<double> values_;
  std::vector<double> samples_;
  Interval hint_{0.0, 0.0};
};

namespace detail {

/// Visits the nodes of a quadrature rule for integrals against a grid density:
/// visit(x, w) with w already multiplied by the density. Each cell is split
/// into sub-cells no wider than a quarter of local_scale at their left end and
/// integrated with 8-point Gauss-Legendre.
template <typename Scale, typename Visit>
void for_each_grid_node(const Measure1D& mu, Scale&& local_scale, Visit&& visit) {
  using Gauss = boost::math::quadrature::gauss<double, 8>;
  const auto& g = mu.grid();
  const auto& v = mu.values();
  const auto& abs = Gauss::abscissa();
  const auto& wts = Gauss::weights();
  auto add_segment = [&](double a, double b, std::size_t cell) {
    const double h = g[cell + 1] - g[cell];
    const double slope = (v[cell + 1] - v[cell]) / h;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    auto node = [&](double x, double w) {
      const double f = v[cell] + slope * (x - g[cell]);
      if (f != 0.0) visit(x, w * half * f);
    };
    // the 8-point rule stores its 4 positive nodes
    for (std::size_t k = 0; k < abs.size(); ++k) {
      node(mid - half * abs[k], wts[k]);
      node(mid + half * abs[k], wts[k]);
    }
  };
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    if (v[i] == 0.0 && v[i + 1] == 0.0) continue;
    double a = g[i];
    const double b = g[i + 1];
    int guard = 0;
    while (a < b) {
      const double s = local_scale(a);
      double step = (std::isfinite(s) && s > 0.0) ? 0.25 * s : (b - a);
      if (a + step >= b || ++guard > 4000) step = b - a;
      add_segment(a, a + step, i);
      a += step;
    }
  }
}

/// Visits every point mass, or the quadrature nodes of a grid density.
template <typename Scale, typename Visit>
void for_each_node(const Measure1D& mu, Scale&& local_scale, Visit&& visit) {
  if (mu.kind() == Measure1D::Kind::grid) {
    for_each_grid_node(mu, local_scale, visit);
  } else {
    mu.for_each_point(visit);
  }
}

/// Integral of f(x)/(c - x) over one piecewise-linear cell, f(x0)=v0, f(x1)=v1,
/// with c off the real segment. Series branch avoids cancellation for far cells.
inline Complex cell_cauchy(double x0, double x1, double v0, double v1, Complex c) {
  const double h = x1 - x0;
  const Complex q = h / (c - x0);
  Complex L, Lq;  // L = -log(1-q), Lq = L/q - 1
  if (std::abs(q) < 0.1) {
    Complex qk = q;
    L = 0.0;
    Lq = 0.0;
    for (int k = 1; k <= 18; ++k) {
      L += qk / static_cast<double>(k);
      Lq += qk / static_cast<double>(k + 1);
      qk *= q;
    }
  } else {
    L = std::log(c - x0) - std::log(c - x1);
    Lq = L / q - 1.0;
  }
  return v0 * L + (v1 - v0) * Lq;
}

/// d/dc of cell_cauchy, i.e. -integral f(x)/(c - x)^2.
inline Complex cell_cauchy_derivative(double x0, double x1, double v0, double v1, Complex c) {
  const double h = x1 - x0;
  const Complex c0 = c - x0;
  const Complex c1 = c - x1;
  const Complex q = h / c0;
  const Complex dL = -h / (c0 * c1);
  Complex D;
  if (std::abs(q) < 0.1) {
    Complex qk = q, s = 0.0;
    for (int k = 1; k <= 18; ++k) {
      s += qk * (static_cast<double>(k) / static_cast<double>(k + 1));
      qk *= q;
    }
    D = -s / c0;
  } else {
    const Complex L = std::log(c0) - std::log(c1);
    D = -1.0 / c1 + L / h;
  }
  return v0 * dL + (v1 - v0) * D;
}

/// Antiderivatives of x^j for x > 0 (j = -1 gives log).
inline double power_antiderivative(int j, double x) {
  if (j == -1) return std::log(x);
  return std::pow(x, j + 1) / static_cast<double>(j + 1);
}

/// Integral over [a,b] (0 <= a < b) of (alpha + beta x) x^k; +inf when divergent.
inline double linear_times_power(double alpha, double beta, int k, double a, double b) {
  if (a == 0.0) {
    // integrand alpha x^k + beta x^(k+1): divergent at 0 if exponent <= -1
    const bool div_alpha = alpha != 0.0 && k <= -1;
    const bool div_beta = beta != 0.0 && k + 1 <= -1;
    if (div_alpha && alpha > 0.0) return kInf;
    if (div_beta && beta > 0.0) return kInf;
    if (div_alpha || div_beta) return kInf;
    double s = 0.0;
    if (alpha != 0.0) s += alpha * std::pow(b, k + 1) / (k + 1);
    if (beta != 0.0) s += beta * std::pow(b, k + 2) / (k + 2);
    return s;
  }
  return alpha * (power_antiderivative(k, b) - power_antiderivative(k, a)) +
         beta * (power_antiderivative(k + 1, b) - power_antiderivative(k + 1, a));
}

/// Integral over [a,b], 0 <= a < b, of (alpha + beta x) log x.
inline double linear_times_log(double alpha, double beta, double a, double b) {
  auto F = [&](double x) {
    if (x == 0.0) return 0.0;
    const double lx = std::log(x);
    return alpha * (x * lx - x) + beta * (0.5 * x * x * lx - 0.25 * x * x);
  };
  return F(b) - F(a);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Reflects a measure on [0, inf) into its even version: mass on [a,b] is split
/// equally between [a,b] and [-b,-a]; mass at 0 stays at 0.
inline Measure1D symmetrize(const Measure1D& mu) {
  if (mu.support_hint().lo < 0.0) throw DomainError("symmetrize needs support in [0, inf)");
  switch (mu.kind()) {
    case Measure1D::Kind::atoms: {
      std::vector<Atom> out;
      for (const auto& a : mu.atoms()) {
        if (a.location < 0.0) throw DomainError("symmetrize needs support in [0, inf)");
        if (a.location == 0.0) {
          out.push_back(a);
        } else {
          out.push_back({a.location, 0.5 * a.weight});
          out.push_back({-a.location, 0.5 * a.weight});
        }
      }
      const double r = mu.support_radius();
      return Measure1D::from_atoms_merged(std::move(out), Interval{-r, r});
    }
    case Measure1D::Kind::empirical: {
      std::vector<double> out;
      out.reserve(2 * mu.samples().size());
      for (double x : mu.samples()) {
        if (x < 0.0) throw DomainError("symmetrize needs support in [0, inf)");
        out.push_back(x);
        out.push_back(-x);
      }
      return Measure1D::from_samples(std::move(out));
    }
    case Measure1D::Kind::grid:
      break;
  }
  const auto& g = mu.grid();
  const auto& v = mu.values();
  std::vector<double> xs, vs;
  const std::size_t n = g.size();
  const bool gap = g.front() > 0.0 && v.front() > 0.0;
  // A density jump at the inner edge is represented by a zero node a relative
  // 1e-12 inside it; the lost mass is O(1e-12).
  const double inner = g.front() * (1.0 - 1e-12);
  for (std::size_t i = n; i-- > 0;) {
    xs.push_back(-g[i]);
    vs.push_back(0.5 * v[i]);
  }
  if (gap) {
    xs.push_back(-inner);
    vs.push_back(0.0);
    xs.push_back(inner);
    vs.push_back(0.0);
  }
  for (std::size_t i = (g.front() == 0.0 ? 1 : 0); i < n; ++i) {
    xs.push_back(g[i]);
    vs.push_back(0.5 * v[i]);
  }
  const double r = mu.support_radius();
  return Measure1D::from_grid(std::move(xs), std::move(vs), Interval{-r, r}, true);
}

/// Stieltjes transform G(z) = integral dmu(x) / (z - x), Im z > 0.
inline Complex stieltjes(const Measure1D& mu, ComplexPoint z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw DomainError("stieltjes: non-finite spectral parameter");
  if (!(z.imag() > 0.0)) throw DomainError("stieltjes: Im(z) must be > 0");
  Complex acc = 0.0;
  if (mu.kind() != Measure1D::Kind::grid) {
    mu.for_each_point([&](double x, double w) { acc += w / (z - x); });
    return acc;
  }
  const auto& g = mu.grid();
  const auto& v = mu.values();
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    if (v[i] == 0.0 && v[i + 1] == 0.0) continue;
    acc += detail::cell_cauchy(g[i], g[i + 1], v[i], v[i + 1], z);
  }
  return acc;
}

/// Complex derivative G'(z) = -integral dmu(x) / (z - x)^2, Im z > 0.
inline Complex stieltjes_derivative(const Measure1D& mu, ComplexPoint z) {
  if (!(z.imag() > 0.0)) throw DomainError("stieltjes_derivative: Im(z) must be > 0");
  Complex acc = 0.0;
  if (mu.kind() != Measure1D::Kind::grid) {
    mu.for_each_point([&](double x, double w) { acc -= w / ((z - x) * (z - x)); });
    return acc;
  }
  const auto& g = mu.grid();
  const auto& v = mu.values();
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    if (v[i] == 0.0 && v[i + 1] == 0.0) continue;
    acc += detail::cell_cauchy_derivative(g[i], g[i + 1], v[i], v[i + 1], z);
  }
  return acc;
}

struct InversionResult {
  Measure1D density;
  /// Factor the raw density was multiplied by to reach mass 1.
  double renormalization;
};

namespace detail {

inline InversionResult finish_inversion(std::span<const double> grid, std::vector<double> values) {
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    mass += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
  const double factor = mass > 0.0 ? 1.0 / mass : kInf;
  if (!(factor >= 0.9 && factor <= 1.1))
    throw AccuracyError("stieltjes_invert: recovered mass " + std::to_string(mass) +
                        " (renormalization outside [0.9, 1.1]; eta too large or grid too narrow)");
  for (auto& v : values) v *= factor;
  std::vector<double> g(grid.begin(), grid.end());
  return {Measure1D::from_grid(std::move(g), std::move(values), std::nullopt, true), factor};
}

inline void check_inversion_inputs(std::size_t n_values, std::span<const double> grid, double eta) {
  if (!(eta > 0.0)) throw DomainError("stieltjes_invert: eta must be > 0");
  if (grid.size() < 2 || grid.size() != n_values)
    throw DomainError("stieltjes_invert: grid and values must match and have >= 2 points");
}

}  // namespace detail

/// Density -Im G(x + i eta) / pi on the grid, renormalized to mass 1.
inline InversionResult stieltjes_invert(std::span<const Complex> g_values, std::span<const double> grid,
                                        double eta) {
  detail::check_inversion_inputs(g_values.size(), grid, eta);
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = std::max(0.0, -g_values[i].imag() / kPi);
  return detail::finish_inversion(grid, std::move(vals));
}

/// Richardson-extrapolated inversion from samples at heights eta and eta/2:
/// the Poisson smoothing bias is first order in eta, so 2 f(eta/2) - f(eta)
/// cancels it. Negative extrapolated values are clipped to 0.
inline InversionResult stieltjes_invert(std::span<const Complex> g_eta, std::span<const Complex> g_half_eta,
                                        std::span<const double> grid, double eta) {
  detail::check_inversion_inputs(g_eta.size(), grid, eta);
  if (g_half_eta.size() != g_eta.size()) throw DomainError("stieltjes_invert: mismatched samples");
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double f1 = -g_eta[i].imag() / kPi;
    const double f2 = -g_half_eta[i].imag() / kPi;
    vals[i] = std::max(0.0, 2.0 * f2 - f1);
  }
  return detail::finish_inversion(grid, std::move(vals));
}

/// Law of X^2 for X ~ mu, mu on [0, inf).
inline Measure1D pushforward_square(const Measure1D& mu) {
  if (mu.support_hint().lo < 0.0) throw DomainError("pushforward_square needs support in [0, inf)");
  if (mu.kind() == Measure1D::Kind::atoms) {
    std::vector<Atom> out;
    for (const auto& a : mu.atoms()) {
      if (a.location < 0.0) throw DomainError("pushforward_square needs support in [0, inf)");
      out.push_back({a.location * a.location, a.weight});
    }
    return Measure1D::from_atoms(std::move(out));
  }
  if (mu.kind() == Measure1D::Kind::empirical) {
    std::vector<double> out;
    for (double x : mu.samples()) {
      if (x < 0.0) throw DomainError("pushforward_square needs support in [0, inf)");
      out.push_back(x * x);
    }
    return Measure1D::from_samples(std::move(out));
  }
  // Grid: nodes map to s^2 with density f(s)/(2s). Coarse grids are split into
  // sub-cells (f linear in s) so the image keeps at least ~2000 nodes. A cell
  // starting at s=0 gets its left value fixed by matching the cell's mass,
  // since f(s)/(2s) blows up.
  const auto& g = mu.grid();
  const auto& v = mu.values();
  const std::size_t split =
      std::clamp<std::size_t>(2000 / std::max<std::size_t>(g.size() - 1, 1), 1, 64);
  std::vector<double> ss, fs;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    for (std::size_t k = 0; k < split; ++k) {
      const double a = static_cast<double>(k) / static_cast<double>(split);
      ss.push_back(g[i] + a * (g[i + 1] - g[i]));
      fs.push_back(v[i] + a * (v[i + 1] - v[i]));
    }
  }
  ss.push_back(g.back());
  fs.push_back(v.back());
  std::vector<double> xs(ss.size()), vs(ss.size());
  for (std::size_t i = 0; i < ss.size(); ++i) {
    xs[i] = ss[i] * ss[i];
    vs[i] = ss[i] > 0.0 ? fs[i] / (2.0 * ss[i]) : 0.0;
  }
  if (ss.front() == 0.0) {
    const double cell_mass = 0.5 * (fs[0] + fs[1]) * ss[1];
    vs[0] = std::max(0.0, 2.0 * cell_mass / xs[1] - vs[1]);
  }
  const auto hint = mu.support_hint();
  return Measure1D::from_grid(std::move(xs), std::move(vs), Interval{hint.lo * hint.lo, hint.hi * hint.hi},
                              true);
}

/// Law of |w - X| for X ~ mu.
inline Measure1D pushforward_abs_shift(const Measure1D& mu, ComplexPoint w) {
  if (mu.kind() == Measure1D::Kind::atoms) {
    std::vector<Atom> out;
    for (const auto& a : mu.atoms()) out.push_back({std::abs(w - a.location), a.weight});
    return Measure1D::from_atoms_merged(std::move(out));
  }
  if (mu.kind() == Measure1D::Kind::empirical) {
    std::vector<double> out;
    for (double x : mu.samples()) out.push_back(std::abs(w - x));
    return Measure1D::from_samples(std::move(out));
  }
  // Grid: y = sqrt((x - wr)^2 + wi^2); density g(y) = (f(wr - d) + f(wr + d)) y / d with
  // d = sqrt(y^2 - wi^2). Nodes are the images of the input nodes.
  const double wr = w.real();
  const double wi = std::abs(w.imag());
  std::vector<double> ys{wi};
  for (double x : mu.grid()) ys.push_back(std::abs(w - x));
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end(),
                       [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, b); }),
           ys.end());
  {
    // the map is nonlinear: refine each image cell uniformly in d
    std::vector<double> refined;
    constexpr int kSub = 128;
    for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
      const double d0 = std::sqrt(std::max(0.0, ys[i] * ys[i] - wi * wi));
      const double d1 = std::sqrt(std::max(0.0, ys[i + 1] * ys[i + 1] - wi * wi));
      refined.push_back(ys[i]);
      for (int k = 1; k < kSub; ++k) {
        const double d = d0 + (d1 - d0) * k / kSub;
        const double y = std::hypot(d, wi);
        if (y > refined.back() && y < ys[i + 1]) refined.push_back(y);
      }
    }
    refined.push_back(ys.back());
    ys = std::move(refined);
  }
  // As y grows, wr + d moves right and wr - d moves left; jumps of f at the
  // grid ends become jumps of g, split into two nodes a relative 1e-12 apart.
  std::vector<double> xs, vals;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double y = ys[i];
    const double d = std::sqrt(std::max(0.0, y * y - wi * wi));
    if (d == 0.0) {
      xs.push_back(y);
      vals.push_back(wi == 0.0 ? mu.density_right(wr) + mu.density_left(wr) : 0.0);
      continue;
    }
    const double jac = y / d;
    const double below = (mu.density_right(wr - d) + mu.density_left(wr + d)) * jac;
    const double above = (mu.density_left(wr - d) + mu.density_right(wr + d)) * jac;
    if (std::abs(below - above) > 1e-14 * std::max(1.0, std::abs(above)) && i > 0) {
      xs.push_back(y - 1e-12 * std::max(1.0, y));
      vals.push_back(below);
    }
    xs.push_back(y);
    vals.push_back(above);
  }
  if (wi > 0.0 && xs.size() > 1 && mu.density(wr) > 0.0) {
    // Inverse-square-root edge at y = |Im w|: match the first cell's mass.
    const double d1 = std::sqrt(xs[1] * xs[1] - wi * wi);
    const double cell_mass = mu.cdf(wr + d1) - mu.cdf(wr - d1);
    vals[0] = std::max(0.0, 2.0 * cell_mass / (xs[1] - xs[0]) - vals[1]);
  }
  return Measure1D::from_grid(std::move(xs), std::move(vals), std::nullopt, true);
}

/// integral x^k dmu (or |x|^k when absolute). For k < 0 the measure must live
/// on [0, inf); a divergent integral (atom at 0, density not vanishing fast
/// enough at a grid starting at 0) returns +inf.
inline double moment(const Measure1D& mu, int k, bool absolute = false) {
  if (k < 0 && !absolute && mu.support_hint().lo < 0.0)
    throw DomainError("moment with k < 0 needs support in [0, inf)");
  if (mu.kind() != Measure1D::Kind::grid) {
    double s = 0.0;
    bool infinite = false;
    mu.for_each_point([&](double x, double w) {
      if (k < 0 && x == 0.0) {
        if (w > 0.0) infinite = true;
        return;
      }
      s += w * (absolute ? std::pow(std::abs(x), k) : std::pow(x, k));
    });
    return infinite ? kInf : s;
  }
  const auto& g = mu.grid();
  const auto& v = mu.values();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    if (v[i] == 0.0 && v[i + 1] == 0.0) continue;
    const double x0 = g[i], x1 = g[i + 1];
    const double slope = (v[i + 1] - v[i]) / (x1 - x0);
    auto positive_part = [&](double a, double b) {
      // f(x) = v0 + slope (x - x0) on [a, b] subset of [0, inf)
      const double alpha = v[i] - slope * x0;
      return detail::linear_times_power(alpha, slope, k, a, b);
    };
    auto negative_part = [&](double a, double b) {
      // substitute x = -y, y in [-b, -a]; f(-y) = (v0 + slope(-x0)) - slope y
      const double alpha = v[i] - slope * x0;
      const double val = detail::linear_times_power(alpha, -slope, k, -b, -a);
      if (absolute || k % 2 == 0) return val;
      return -val;
    };
    if (x0 >= 0.0) {
      s += positive_part(x0, x1);
    } else if (x1 <= 0.0) {
      s += negative_part(x0, x1);
    } else {
      s += negative_part(x0, 0.0) + positive_part(0.0, x1);
    }
    if (std::isinf(s)) return kInf;
  }
  return s;
}

/// Generalized inverse distribution function inf{x : mu((-inf,x]) >= p}.
inline double quantile(const Measure1D& mu, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("quantile: p must lie in (0, 1]");
  constexpr double tol = 1e-12;
  if (mu.kind() != Measure1D::Kind::grid) {
    double acc = 0.0;
    double last = 0.0;
    bool found = false;
    double result = 0.0;
    mu.for_each_point([&](double x, double w) {
      if (found) return;
      acc += w;
      last = x;
      if (acc >= p - tol) {
        found = true;
        result = x;
      }
    });
    return found ? result : last;
  }
  const auto& g = mu.grid();
  const auto& v = mu.values();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const double h = g[i + 1] - g[i];
    const double cell = 0.5 * (v[i] + v[i + 1]) * h;
    if (acc + cell >= p - tol && cell > 0.0) {
      const double target = std::max(0.0, p - acc);
      const double slope = (v[i + 1] - v[i]) / h;
      double d;
      if (target <= 0.0) {
        d = 0.0;
      } else {
        const double disc = v[i] * v[i] + 2.0 * slope * target;
        d = 2.0 * target / (v[i] + std::sqrt(std::max(0.0, disc)));
      }
      return std::min(g[i + 1], g[i] + d);
    }
    acc += cell;
  }
  // p within tolerance of the total mass: right end of the last massive cell
  for (std::size_t i = g.size(); i-- > 1;)
    if (v[i] > 0.0 || v[i - 1] > 0.0) return g[i];
  return g.back();
}

/// integral over |x| > cutoff of log|x| dnu. Exact for grid densities
/// (analytic integration of log against each linear piece, including the cell
/// containing 0). An atom at 0 with cutoff 0 yields -inf.
inline double log_potential(const Measure1D& nu, double cutoff = 0.0) {
  if (cutoff < 0.0) throw DomainError("log_potential: cutoff must be >= 0");
  if (nu.kind() != Measure1D::Kind::grid) {
    double s = 0.0;
    bool minus_inf = false;
    nu.for_each_point([&](double x, double w) {
      const double ax = std::abs(x);
      if (ax > cutoff) {
        s += w * std::log(ax);
      } else if (ax == 0.0 && cutoff == 0.0 && w > 0.0) {
        minus_inf = true;
      }
    });
    return minus_inf ? -kInf : s;
  }
  const auto& g = nu.grid();
  const auto& v = nu.values();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    if (v[i] == 0.0 && v[i + 1] == 0.0) continue;
    const double x0 = g[i], x1 = g[i + 1];
    const double slope = (v[i + 1] - v[i]) / (x1 - x0);
    const double alpha = v[i] - slope * x0;
    // positive side: [max(x0, cutoff), x1]
    {
      const double a = std::max(x0, cutoff), b = x1;
      if (b > a && b > 0.0) s += detail::linear_times_log(alpha, slope, std::max(a, 0.0), b);
    }
    // negative side: x in [x0, min(x1, -cutoff)], substitute y = -x
    {
      const double a = x0, b = std::min(x1, -cutoff);
      if (b > a && a < 0.0) s += detail::linear_times_log(alpha, -slope, -std::min(b, 0.0), -a);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Distances between distribution functions
// ---------------------------------------------------------------------------

namespace detail {

/// Distribution function as jumps at breakpoints plus a quadratic on each gap.
struct PiecewiseCdf {
  std::vector<double> x;                    // breakpoints, increasing
  std::vector<double> left, right;          // F(x_i-), F(x_i)
  std::vector<std::array<double, 3>> poly;  // on (x_i, x_{i+1}): c0 + c1 d + c2 d^2

  static PiecewiseCdf from(const Measure1D& mu) {
    PiecewiseCdf f;
    if (mu.kind() != Measure1D::Kind::grid) {
      double acc = 0.0;
      for (const auto& a : mu.point_masses()) {
        f.x.push_back(a.location);
        f.left.push_back(acc);
        acc += a.weight;
        f.right.push_back(acc);
      }
      for (std::size_t i = 0; i + 1 < f.x.size(); ++i) f.poly.push_back({f.right[i], 0.0, 0.0});
      return f;
    }
    const auto& g = mu.grid();
    const auto& v = mu.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      f.x.push_back(g[i]);
      f.left.push_back(acc);
      f.right.push_back(acc);
      if (i + 1 < g.size()) {
        const double h = g[i + 1] - g[i];
        const double slope = (v[i + 1] - v[i]) / h;
        f.poly.push_back({acc, v[i], 0.5 * slope});
        acc += 0.5 * (v[i] + v[i + 1]) * h;
      }
    }
    return f;
  }

  /// Quadratic valid on the open gap containing (u, w); coefficients re-centred at u.
  std::array<double, 3> piece_on(double u, double w) const {
    if (w <= x.front()) return {0.0, 0.0, 0.0};
    if (u >= x.back()) return {right.back(), 0.0, 0.0};
    const double mid = 0.5 * (u + w);
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), mid) - x.begin()) - 1;
    const auto& c = poly[i];
    const double d = u - x[i];
    return {c[0] + c[1] * d + c[2] * d * d, c[1] + 2.0 * c[2] * d, c[2]};
  }

  double at(double y, bool left_limit) const {
    if (y < x.front()) return 0.0;
    if (y > x.back()) return right.back();
    auto it = std::lower_bound(x.begin(), x.end(), y);
    const std::size_t j = static_cast<std::size_t>(it - x.begin());
    if (it != x.end() && *it == y) return left_limit ? left[j] : right[j];
    const std::size_t i = j - 1;
    const auto& c = poly[i];
    const double d = y - x[i];
    return c[0] + c[1] * d + c[2] * d * d;
  }
};

/// Calls fn(u, w, diff_quadratic) on every gap of the merged breakpoints and
/// jump(xk, left_diff, right_diff) at every breakpoint.
template <typename Gap, typename Jump>
void sweep_difference(const PiecewiseCdf& F, const PiecewiseCdf& G, Gap&& gap, Jump&& jump) {
  std::vector<double> pts = F.x;
  pts.insert(pts.end(), G.x.begin(), G.x.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    jump(pts[k], F.at(pts[k], true) - G.at(pts[k], true), F.at(pts[k], false) - G.at(pts[k], false));
    if (k + 1 < pts.size()) {
      const auto a = F.piece_on(pts[k], pts[k + 1]);
      const auto b = G.piece_on(pts[k], pts[k + 1]);
      gap(pts[k], pts[k + 1], std::array<double, 3>{a[0] - b[0], a[1] - b[1], a[2] - b[2]});
    }
  }
}

}  // namespace detail

/// Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|, exact for all three
/// representations (piecewise-quadratic CDFs are maximized analytically).
inline double ks_distance(const Measure1D& a, const Measure1D& b) {
  const auto F = detail::PiecewiseCdf::from(a);
  const auto G = detail::PiecewiseCdf::from(b);
  double sup = 0.0;
  detail::sweep_difference(
      F, G,
      [&](double u, double w, const std::array<double, 3>& c) {
        const double len = w - u;
        sup = std::max(sup, std::abs(c[0] + c[1] * len + c[2] * len * len));
        if (c[2] != 0.0) {
          const double d = -c[1] / (2.0 * c[2]);
          if (d > 0.0 && d < len) sup = std::max(sup, std::abs(c[0] + c[1] * d + c[2] * d * d));
        }
      },
      [&](double, double l, double r) { sup = std::max({sup, std::abs(l), std::abs(r)}); });
  return sup;
}

/// Wasserstein-1 distance as the L1 distance between distribution functions.
inline double wasserstein1(const Measure1D& a, const Measure1D& b) {
  const auto F = detail::PiecewiseCdf::from(a);
  const auto G = detail::PiecewiseCdf::from(b);
  double total = 0.0;
  detail::sweep_difference(
      F, G,
      [&](double u, double w, const std::array<double, 3>& c) {
        const double len = w - u;
        // split [0, len] at the roots of the quadratic
        std::vector<double> cuts{0.0, len};
        if (c[2] != 0.0) {
          const double disc = c[1] * c[1] - 4.0 * c[2] * c[0];
          if (disc > 0.0) {
            const double sq = std::sqrt(disc);
            for (double r : {(-c[1] - sq) / (2.0 * c[2]), (-c[1] + sq) / (2.0 * c[2])})
              if (r > 0.0 && r < len) cuts.push_back(r);
          }
        } else if (c[1] != 0.0) {
          const double r = -c[0] / c[1];
          if (r > 0.0 && r < len) cuts.push_back(r);
        }
        std::sort(cuts.begin(), cuts.end());
        auto prim = [&](double d) { return c[0] * d + 0.5 * c[1] * d * d + c[2] * d * d * d / 3.0; };
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += std::abs(prim(cuts[i + 1]) - prim(cuts[i]));
      },
      [](double, double, double) {});
  return total;
}

/// Grid on [lo, hi] with spacing step, plus geometric refinement (ratio,
/// starting at finest, out to reach) on both sides of every listed edge.
inline std::vector<double> clustered_grid(double lo, double hi, double step, std::span<const double> edges,
                                          double finest = 1e-6, double ratio = 1.05, double reach = 0.3) {
  if (!(hi > lo) || !(step > 0.0) || !(ratio > 1.0)) throw DomainError("clustered_grid: bad parameters");
  std::vector<double> g;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  if (g.back() < hi) g.push_back(hi);
  for (double e : edges) {
    if (e >= lo && e <= hi) g.push_back(e);
    for (double d = finest; d < reach; d *= ratio) {
      if (e - d >= lo) g.push_back(e - d);
      if (e + d <= hi) g.push_back(e + d);
    }
  }
  std::sort(g.begin(), g.end());
  const double merge = 1e-13 * std::max({1.0, std::abs(lo), std::abs(hi)});
  g.erase(std::unique(g.begin(), g.end(), [merge](double a, double b) { return b - a < merge; }), g.end());
  return g;
}

/// Mirror image of a grid on [0, hi] onto [-hi, hi] (exactly symmetric).
inline std::vector<double> mirrored(std::span<const double> half) {
  std::vector<double> out;
  for (auto it = half.rbegin(); it != half.rend(); ++it)
    if (*it > 0.0) out.push_back(-*it);
  for (double x : half)
    if (x >= 0.0) out.push_back(x);
  return out;
}

// ---------------------------------------------------------------------------
// Named measures
// ---------------------------------------------------------------------------

namespace catalog {

inline Measure1D delta(double c) { return Measure1D::from_atoms({{c, 1.0}}); }

inline Measure1D uniform(double lo, double hi) {
  if (!(hi > lo)) throw DomainError("uniform: need lo < hi");
  const double d = 1.0 / (hi - lo);
  return Measure1D::from_grid({lo, hi}, {d, d});
}

/// Quarter-circle law 4 sqrt(R^2 - x^2) / (pi R^2) on [0, R]; R = 2 gives the
/// singular values of a normalized Ginibre matrix. Nodes cluster at both ends
/// and the grid is rescaled so the discretized second moment is exactly R^2/4.
inline Measure1D quarter_circle(std::size_t cells = 800, double radius = 2.0) {
  std::vector<double> xs(cells + 1), vs(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) {
    const double x = 0.5 * radius * (1.0 - std::cos(kPi * static_cast<double>(k) / static_cast<double>(cells)));
    xs[k] = k == cells ? radius : x;
    vs[k] = 4.0 * std::sqrt(std::max(0.0, radius * radius - xs[k] * xs[k])) / (kPi * radius * radius);
  }
  auto raw = Measure1D::from_grid(xs, vs, std::nullopt, true);
  const double c = std::sqrt(0.25 * radius * radius / moment(raw, 2));
  std::vector<double> xs2(raw.grid()), vs2(raw.values());
  for (auto& x : xs2) x *= c;
  for (auto& v : vs2) v /= c;
  return Measure1D::from_grid(std::move(xs2), std::move(vs2), std::nullopt, true);
}

/// Semicircle law on [-R, R] (variance R^2/4), nodes clustered at the edges.
inline Measure1D semicircle(std::size_t cells = 1600, double radius = 2.0) {
  std::vector<double> xs(cells + 1), vs(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) {
    const double x = -radius * std::cos(kPi * static_cast<double>(k) / static_cast<double>(cells));
    xs[k] = k == 0 ? -radius : (k == cells ? radius : x);
    vs[k] = 2.0 * std::sqrt(std::max(0.0, radius * radius - xs[k] * xs[k])) / (kPi * radius * radius);
  }
  return Measure1D::from_grid(std::move(xs), std::move(vs), std::nullopt, true);
}

/// Marchenko-Pastur law with ratio 1 on (0, 4], built as the square push-forward
/// of the quarter-circle discretization.
inline Measure1D marchenko_pastur(std::size_t cells = 800) { return pushforward_square(quarter_circle(cells)); }

/// Scales a measure by c > 0 (push-forward by x -> c x).
inline Measure1D scaled(const Measure1D& mu, double c) {
  if (!(c > 0.0)) throw DomainError("scaled: factor must be > 0");
  switch (mu.kind()) {
    case Measure1D::Kind::atoms: {
      auto a = mu.atoms();
      for (auto& x : a) x.location *= c;
      return Measure1D::from_atoms(std::move(a));
    }
    case Measure1D::Kind::empirical: {
      auto s = mu.samples();
      for (auto& x : s) x *= c;
      return Measure1D::from_samples(std::move(s));
    }
    case Measure1D::Kind::grid:
      break;
  }
  auto g = mu.grid();
  auto v = mu.values();
  for (auto& x : g) x *= c;
  for (auto& y : v) y /= c;
  return Measure1D::from_grid(std::move(g), std::move(v), std::nullopt, true);
}

}  // namespace catalog

}  // namespace ringlab
