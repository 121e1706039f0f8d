#pragma once

// Matrix ensembles UTV / orthogonal / additive / Ginibre, their spectra, the
// hermitization, empirical Girko fields and small-singular-value diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ringlab/error.hpp"
#include "ringlab/fz.hpp"
#include "ringlab/linalg.hpp"
#include "ringlab/measures.hpp"
#include "ringlab/parallel.hpp"
#include "ringlab/rng.hpp"

namespace ringlab {

enum class Model { utv_unitary, utv_orthogonal, additive, ginibre };

inline std::string to_string(Model m) {
  switch (m) {
    case Model::utv_unitary: return "utv_unitary";
    case Model::utv_orthogonal: return "utv_orthogonal";
    case Model::additive: return "additive";
    case Model::ginibre: return "ginibre";
  }
  return "?";
}

inline Model model_from_string(const std::string& s) {
  if (s == "utv_unitary") return Model::utv_unitary;
  if (s == "utv_orthogonal") return Model::utv_orthogonal;
  if (s == "additive") return Model::additive;
  if (s == "ginibre") return Model::ginibre;
  throw PreconditionError("unknown model '" + s + "'");
}

/// Where the diagonal T comes from.
struct TSource {
  enum class Kind { quantile, explicit_values, fz };
  Kind kind = Kind::explicit_values;
  std::optional<Measure1D> theta;
  std::vector<double> values;
  std::optional<Potential> potential;
  std::size_t fz_sweeps = 1500;

  static TSource from_quantiles(Measure1D th) {
    TSource t;
    t.kind = Kind::quantile;
    t.theta = std::move(th);
    return t;
  }
  static TSource from_values(std::vector<double> v) {
    TSource t;
    t.kind = Kind::explicit_values;
    t.values = std::move(v);
    return t;
  }
  static TSource from_log_gas(Potential v, std::size_t sweeps = 1500) {
    TSource t;
    t.kind = Kind::fz;
    t.potential = std::move(v);
    t.fz_sweeps = sweeps;
    return t;
  }
};

struct EnsembleSpec {
  std::size_t n = 1;
  Model model = Model::utv_unitary;
  TSource t_source;
  std::optional<double> noise_gamma;
  std::uint64_t seed = 0;
  std::uint32_t replica = 0;

  void validate() const {
    if (n < 1) throw PreconditionError("ensemble: n must be >= 1");
    if (noise_gamma && !(*noise_gamma > 0.5)) throw PreconditionError("ensemble: noise_gamma must exceed 1/2");
    if (model == Model::ginibre) return;
    switch (t_source.kind) {
      case TSource::Kind::explicit_values:
        if (t_source.values.size() != n)
          throw PreconditionError("ensemble: explicit T has " + std::to_string(t_source.values.size()) +
                                  " entries, n = " + std::to_string(n));
        for (double t : t_source.values)
          if (!(t >= 0.0) || !std::isfinite(t)) throw PreconditionError("ensemble: explicit T entries must be >= 0");
        break;
      case TSource::Kind::quantile:
        if (!t_source.theta) throw PreconditionError("ensemble: quantile source without a measure");
        if (t_source.theta->support_hint().lo < 0.0)
          throw PreconditionError("ensemble: quantile source must live on [0, inf)");
        break;
      case TSource::Kind::fz:
        if (!t_source.potential) throw PreconditionError("ensemble: fz source without a potential");
        break;
    }
  }

  EnsembleSpec with_replica(std::uint32_t r) const {
    EnsembleSpec s = *this;
    s.replica = r;
    return s;
  }
};

inline void to_json(nlohmann::json& j, const EnsembleSpec& s) {
  j = nlohmann::json{{"n", s.n}, {"model", to_string(s.model)}, {"seed", s.seed}, {"replica", s.replica}};
  j["noise_gamma"] = s.noise_gamma ? nlohmann::json(*s.noise_gamma) : nlohmann::json(nullptr);
  switch (s.t_source.kind) {
    case TSource::Kind::quantile: j["t_source"] = "quantile"; break;
    case TSource::Kind::explicit_values: j["t_source"] = "explicit"; break;
    case TSource::Kind::fz:
      j["t_source"] = "fz";
      j["potential"] = *s.t_source.potential;
      break;
  }
}

namespace detail {

inline CMatrix complex_gaussian(Eigen::Index n, KeyedRng& rng) {
  std::normal_distribution<double> d;
  const double s = std::sqrt(0.5);
  CMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = d(rng), im = d(rng);
      g(i, j) = {s * re, s * im};
    }
  return g;
}

inline RMatrix real_gaussian(Eigen::Index n, KeyedRng& rng) {
  std::normal_distribution<double> d;
  RMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = d(rng);
  return g;
}

}  // namespace detail

/// Haar unitary: Q of a complex Ginibre matrix with R's diagonal phases moved
/// into Q.
inline CMatrix haar_unitary(std::size_t n, KeyedRng& rng) {
  if (n < 1) throw PreconditionError("haar_unitary: n must be >= 1");
  CVector r;
  CMatrix q = qr_q(detail::complex_gaussian(static_cast<Eigen::Index>(n), rng), r);
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double m = std::abs(r(j));
    if (m > 0.0) q.col(j) *= r(j) / m;
  }
  return q;
}

/// Haar orthogonal: same construction with real Gaussians and signs.
inline RMatrix haar_orthogonal(std::size_t n, KeyedRng& rng) {
  if (n < 1) throw PreconditionError("haar_orthogonal: n must be >= 1");
  RVector r;
  RMatrix q = qr_q(detail::real_gaussian(static_cast<Eigen::Index>(n), rng), r);
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j) < 0.0) q.col(j) *= -1.0;
  return q;
}

/// s_i = quantile(theta, i/n), i = 1..n.
inline std::vector<double> diag_from_quantile(const Measure1D& theta, std::size_t n) {
  if (n < 1) throw PreconditionError("diag_from_quantile: n must be >= 1");
  if (theta.support_hint().lo < 0.0) throw DomainError("diag_from_quantile: measure must live on [0, inf)");
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i)
    s[i] = quantile(theta, static_cast<double>(i + 1) / static_cast<double>(n));
  for (std::size_t i = 1; i < n; ++i) s[i] = std::max(s[i], s[i - 1]);
  return s;
}

/// Diagonal entries of T for a spec (runs the log-gas chain for fz sources).
inline std::vector<double> diagonal_entries(const EnsembleSpec& spec) {
  switch (spec.t_source.kind) {
    case TSource::Kind::explicit_values: return spec.t_source.values;
    case TSource::Kind::quantile: return diag_from_quantile(*spec.t_source.theta, spec.n);
    case TSource::Kind::fz: {
      KeyedRng rng(spec.seed, spec.replica, StreamTag::log_gas);
      return fz_singular_values(*spec.t_source.potential, spec.n, spec.t_source.fz_sweeps, rng);
    }
  }
  return {};
}

/// 1 / min T: the uniform bound on the inverse that the noise-free theory
/// asks for (infinite when some entry is 0).
inline double t_inverse_norm(const std::vector<double>& t) {
  if (t.empty()) return 0.0;
  const double m = *std::min_element(t.begin(), t.end());
  return m > 0.0 ? 1.0 / m : kInf;
}

/// Samples the matrix of a spec. Streams are keyed by (seed, replica, tag),
/// so the result depends only on the spec.
inline CMatrix assemble(const EnsembleSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n);
  const double noise_scale = spec.noise_gamma ? std::pow(static_cast<double>(spec.n), -*spec.noise_gamma) : 0.0;
  if (spec.model == Model::ginibre) {
    KeyedRng rng(spec.seed, spec.replica, StreamTag::ginibre);
    return detail::complex_gaussian(n, rng) / std::sqrt(static_cast<double>(spec.n));
  }
  const auto t = diagonal_entries(spec);
  if (t.size() != spec.n) throw PreconditionError("ensemble: T has the wrong length");
  const Eigen::Map<const RVector> tv(t.data(), n);

  if (spec.model == Model::utv_orthogonal) {
    KeyedRng lrng(spec.seed, spec.replica, StreamTag::left_haar);
    KeyedRng rrng(spec.seed, spec.replica, StreamTag::right_haar);
    RMatrix left = haar_orthogonal(spec.n, lrng);
    const RMatrix right = haar_orthogonal(spec.n, rrng);
    left = left * tv.asDiagonal();
    RMatrix a = multiply(left, right);
    if (spec.noise_gamma) {
      KeyedRng nrng(spec.seed, spec.replica, StreamTag::noise);
      a += noise_scale * detail::real_gaussian(n, nrng);
    }
    return a.cast<std::complex<double>>();
  }

  CMatrix a;
  if (spec.model == Model::utv_unitary) {
    KeyedRng lrng(spec.seed, spec.replica, StreamTag::left_haar);
    KeyedRng rrng(spec.seed, spec.replica, StreamTag::right_haar);
    CMatrix left = haar_unitary(spec.n, lrng);
    const CMatrix right = haar_unitary(spec.n, rrng);
    left = left * tv.cast<std::complex<double>>().asDiagonal();
    a = multiply(left, right);
  } else {
    KeyedRng prng(spec.seed, spec.replica, StreamTag::additive_haar);
    a = haar_unitary(spec.n, prng);
    a.diagonal() += tv.cast<std::complex<double>>();
  }
  if (spec.noise_gamma) {
    KeyedRng nrng(spec.seed, spec.replica, StreamTag::noise);
    a += noise_scale * detail::complex_gaussian(n, nrng);
  }
  return a;
}

/// Eigenvalues with the real solver when the matrix is real; no balancing
/// (sampled matrices are unitarily mixed, hence well scaled).
inline std::vector<std::complex<double>> spectrum(const CMatrix& a) {
  if (is_real(a)) return eigenvalues(RMatrix(a.real()), false);
  return eigenvalues(a, false);
}

inline std::vector<double> singular_spectrum(const CMatrix& a) {
  if (is_real(a)) return singular_values(RMatrix(a.real()));
  return singular_values(a);
}

/// Weyl's majorant check in log form: sum_{j<=k} log|lambda_j| against
/// sum_{j<=k} log s_j for every k, and equality of the full sums.
struct WeylReport {
  bool pass = true;
  double worst_excess = 0.0;      // max_k (L_k(lambda) - L_k(s)), <= tol required
  double full_product_defect = 0.0;  // |L_n(lambda) - L_n(s)|
  std::size_t worst_k = 0;
};

/// rel_tol is relative on the products, i.e. log(1 + rel_tol) on the sums,
/// scaled by the number of factors (each log carries its own rounding).
inline WeylReport weyl_check(const std::vector<std::complex<double>>& eigs, const std::vector<double>& sv,
                             double rel_tol = 1e-8) {
  if (eigs.size() != sv.size()) throw PreconditionError("weyl_check: length mismatch");
  WeylReport w;
  double le = 0.0, ls = 0.0;
  bool degenerate = false;
  for (std::size_t k = 0; k < eigs.size(); ++k) {
    const double ae = std::abs(eigs[k]);
    if (ae == 0.0 || sv[k] == 0.0) {
      // products from here on are 0 on at least one side
      degenerate = true;
      if (sv[k] == 0.0 && ae > 0.0) {
        w.pass = false;
        w.worst_k = k + 1;
        w.worst_excess = kInf;
      }
      break;
    }
    le += std::log(ae);
    ls += std::log(sv[k]);
    const double tol = std::log1p(rel_tol) * static_cast<double>(k + 1);
    const double excess = le - ls;
    if (excess > w.worst_excess) {
      w.worst_excess = excess;
      w.worst_k = k + 1;
    }
    if (excess > tol) w.pass = false;
  }
  if (!degenerate) {
    w.full_product_defect = std::abs(le - ls);
    if (w.full_product_defect > std::log1p(rel_tol) * static_cast<double>(eigs.size())) w.pass = false;
  }
  return w;
}

struct SpectrumSample {
  std::vector<std::complex<double>> eigenvalues;  // decreasing modulus
  std::vector<double> singular_values;            // decreasing
  EnsembleSpec spec;
  double trace_defect = 0.0;  // |sum lambda - tr A|
  double det_defect = 0.0;    // |sum log|lambda| - log|det A|| (det from LU)
  double norm = 0.0;          // s_1
  WeylReport weyl;
  bool trace_pass = true;
  bool det_pass = true;
};

/// Spectrum, singular values and the algebraic self-checks of one matrix.
inline SpectrumSample analyze(const CMatrix& a, const EnsembleSpec& spec, double weyl_tol = 1e-8) {
  SpectrumSample s;
  s.spec = spec;
  s.eigenvalues = spectrum(a);
  s.singular_values = singular_spectrum(a);
  s.norm = s.singular_values.empty() ? 0.0 : s.singular_values.front();
  std::complex<double> sum = 0.0;
  for (const auto& l : s.eigenvalues) sum += l;
  s.trace_defect = std::abs(sum - a.trace());
  const double n = static_cast<double>(a.rows());
  s.trace_pass = s.trace_defect <= 1e-8 * n * std::max(s.norm, 1e-300);
  const auto lu = lu_factor(a);
  double log_eig = 0.0;
  for (const auto& l : s.eigenvalues) log_eig += std::log(std::abs(l));
  const double log_det = lu.log_abs_det();
  if (std::isinf(log_eig) && std::isinf(log_det)) {
    s.det_defect = 0.0;
  } else {
    s.det_defect = std::abs(log_eig - log_det);
  }
  s.det_pass = s.det_defect <= 1e-8 * n * std::max(1.0, std::abs(log_det));
  if (std::isinf(log_eig) != std::isinf(log_det)) s.det_pass = true;  // exact zero vs rounding-level pivot
  s.weyl = weyl_check(s.eigenvalues, s.singular_values, weyl_tol);
  return s;
}

inline SpectrumSample sample_spectrum(const EnsembleSpec& spec, double weyl_tol = 1e-8) {
  return analyze(assemble(spec), spec, weyl_tol);
}

/// [[0, zI - A], [(zI - A)^*, 0]]
inline CMatrix hermitize(const CMatrix& a, ComplexPoint z) {
  detail::check_square(a.rows(), a.cols(), "hermitize");
  const Eigen::Index n = a.rows();
  CMatrix m = -a;
  m.diagonal().array() += z;
  CMatrix h = CMatrix::Zero(2 * n, 2 * n);
  h.topRightCorner(n, n) = m;
  h.bottomLeftCorner(n, n) = m.adjoint();
  return h;
}

/// max |spec(H) - (-s_n..-s_1, s_1..s_n)| for sorted spectra.
inline double hermitize_defect(const CMatrix& a, ComplexPoint z) {
  const Eigen::Index n = a.rows();
  CMatrix m = -a;
  m.diagonal().array() += z;
  const auto s = singular_values(m);  // decreasing
  const auto e = hermitian_eigenvalues(hermitize(a, z));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    worst = std::max(worst, std::abs(e[static_cast<std::size_t>(i)] + s[static_cast<std::size_t>(i)]));
    worst = std::max(worst, std::abs(e[static_cast<std::size_t>(2 * n - 1 - i)] - s[static_cast<std::size_t>(i)]));
  }
  return worst;
}

/// Rectangular lattice of z values: point (i, j) is re[i] + i im[j].
struct ZGrid {
  std::vector<double> re;
  std::vector<double> im;
  ComplexPoint at(std::size_t i, std::size_t j) const { return {re[i], im[j]}; }
  double step_re() const { return re.size() > 1 ? re[1] - re[0] : 1.0; }
  double step_im() const { return im.size() > 1 ? im[1] - im[0] : 1.0; }
};

/// Square lattice centered at c with half-width w and `points` nodes per axis.
inline ZGrid square_grid(double w, std::size_t points, ComplexPoint c = 0.0) {
  if (points < 2 || !(w > 0.0)) throw PreconditionError("square_grid: need >= 2 points and w > 0");
  ZGrid g;
  for (std::size_t k = 0; k < points; ++k) {
    const double t = -w + 2.0 * w * static_cast<double>(k) / static_cast<double>(points - 1);
    g.re.push_back(c.real() + t);
    g.im.push_back(c.imag() + t);
  }
  return g;
}

enum class FieldMethod {
  svd,          // (1/n) sum log s_i(zI - A), bidiagonalization per point
  determinant,  // (1/n) log|det(zI - H)|, H a Hessenberg form of A, O(n^2) per point
  eigenvalue    // (1/n) sum log|z - lambda_i| from a precomputed spectrum
};

struct GirkoField {
  ZGrid grid;
  RMatrix h;  // h(i, j) at grid.at(i, j)
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> excluded;
  std::vector<std::pair<std::size_t, std::size_t>> nudged;  // moved by half a step in Re z
  FieldMethod method = FieldMethod::svd;
};

/// Empirical log-potential h_n(z) on a lattice. A point where zI - A is
/// numerically singular (smallest singular value, pivot or eigenvalue
/// distance below 1e-14 ||A||) is moved by half a grid step and recomputed; if that fails
/// too it is excluded and h is set to NaN there.
inline GirkoField girko_field(const CMatrix& a, const ZGrid& grid, FieldMethod method = FieldMethod::svd,
                              const std::vector<std::complex<double>>* eigs = nullptr) {
  detail::check_square(a.rows(), a.cols(), "girko_field");
  const Eigen::Index n = a.rows();
  GirkoField f;
  f.grid = grid;
  f.n = static_cast<std::size_t>(n);
  f.method = method;
  f.h = RMatrix::Constant(static_cast<Eigen::Index>(grid.re.size()), static_cast<Eigen::Index>(grid.im.size()),
                          std::nan(""));
  std::vector<std::complex<double>> own;
  if (method == FieldMethod::eigenvalue && !eigs) {
    own = spectrum(a);
    eigs = &own;
  }
  CMatrix hess;
  if (method == FieldMethod::determinant) hess = hessenberg_form(a);
  const double a_norm = singular_spectrum(a).front();
  const double floor = 1e-14 * std::max(a_norm, 1e-300);
  const double dn = static_cast<double>(n);

  auto eval = [&](ComplexPoint z, bool& ok) {
    ok = true;
    if (method == FieldMethod::eigenvalue) {
      double acc = 0.0, closest = kInf;
      for (const auto& l : *eigs) {
        const double d = std::abs(z - l);
        closest = std::min(closest, d);
        acc += std::log(d);
      }
      if (closest < floor) ok = false;
      return acc / dn;
    }
    if (method == FieldMethod::determinant) {
      double pivot = 0.0;
      const double ld = hessenberg_shifted_log_det(hess, z, pivot);
      if (pivot < floor) ok = false;
      return ld / dn;
    }
    CMatrix m = -a;
    m.diagonal().array() += z;
    const auto s = singular_values(m);
    if (s.back() < floor) ok = false;
    double acc = 0.0;
    for (double x : s) acc += std::log(x);
    return acc / dn;
  };

  const std::size_t nre = grid.re.size(), nim = grid.im.size();
  std::vector<int> state(nre * nim, 0);  // 0 ok, 1 nudged, 2 excluded
  parallel_for(nre * nim, [&](std::size_t k) {
    const std::size_t i = k / nim, j = k % nim;
    bool ok = false;
    double h = eval(grid.at(i, j), ok);
    if (!ok) {
      h = eval(grid.at(i, j) + ComplexPoint(0.5 * grid.step_re(), 0.0), ok);
      state[k] = ok ? 1 : 2;
    }
    f.h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ok ? h : std::nan("");
  });
  for (std::size_t k = 0; k < state.size(); ++k) {
    if (state[k] == 1) f.nudged.emplace_back(k / nim, k % nim);
    if (state[k] == 2) f.excluded.emplace_back(k / nim, k % nim);
  }
  return f;
}

struct DensityEstimate {
  ZGrid grid;
  RMatrix density;  // boundary rows/columns are 0
  double raw_mass = 0.0;  // after clipping, before renormalization
  double renormalization = 1.0;
};

/// Five-point Laplacian of h divided by 2 pi, clipped at 0, renormalized to
/// unit mass over the window.
inline DensityEstimate density_from_field(const GirkoField& f) {
  const auto nre = static_cast<Eigen::Index>(f.grid.re.size());
  const auto nim = static_cast<Eigen::Index>(f.grid.im.size());
  if (nre < 3 || nim < 3) throw PreconditionError("density_from_field: grid needs >= 3 points per axis");
  std::string holes;
  for (const auto& [i, j] : f.excluded) {
    if (i > 0 && j > 0 && static_cast<Eigen::Index>(i) + 1 < nre && static_cast<Eigen::Index>(j) + 1 < nim)
      holes += " (" + std::to_string(f.grid.re[i]) + "," + std::to_string(f.grid.im[j]) + ")";
  }
  if (!holes.empty()) throw PreconditionError("density_from_field: excluded interior points at" + holes);
  const double hx = f.grid.step_re(), hy = f.grid.step_im();
  DensityEstimate d;
  d.grid = f.grid;
  d.density = RMatrix::Zero(nre, nim);
  double mass = 0.0;
  for (Eigen::Index i = 1; i + 1 < nre; ++i)
    for (Eigen::Index j = 1; j + 1 < nim; ++j) {
      const double lap = (f.h(i + 1, j) - 2.0 * f.h(i, j) + f.h(i - 1, j)) / (hx * hx) +
                         (f.h(i, j + 1) - 2.0 * f.h(i, j) + f.h(i, j - 1)) / (hy * hy);
      const double rho = std::max(0.0, lap / (2.0 * kPi));
      d.density(i, j) = rho;
      mass += rho * hx * hy;
    }
  d.raw_mass = mass;
  if (mass > 0.0) {
    d.renormalization = 1.0 / mass;
    d.density *= d.renormalization;
  }
  return d;
}

/// Empirical law of the moduli.
inline Measure1D empirical_radial(const std::vector<std::complex<double>>& eigs) {
  if (eigs.empty()) throw PreconditionError("empirical_radial: no eigenvalues");
  std::vector<double> r(eigs.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::abs(eigs[i]);
  return Measure1D::from_samples(std::move(r));
}

struct MinSingular {
  double sigma_min = 0.0;
  bool flag = false;  // sigma_min < n^{-delta}
};

inline MinSingular min_singular_diagnostic(const CMatrix& a, ComplexPoint z, double delta) {
  detail::check_square(a.rows(), a.cols(), "min_singular_diagnostic");
  CMatrix m = -a;
  m.diagonal().array() += z;
  MinSingular r;
  r.sigma_min = smallest_singular_value(m);
  r.flag = r.sigma_min < std::pow(static_cast<double>(a.rows()), -delta);
  return r;
}

struct MinSingularBatch {
  std::vector<ComplexPoint> z;
  std::vector<double> flag_frequency;  // per z, over matrices
  std::vector<double> smallest;        // per z, min over matrices
  std::size_t matrices = 0;
};

/// Flag frequency of sigma_min(zI - A) < n^{-delta} over replicas of a spec,
/// one matrix per replica 0..replicas-1.
inline MinSingularBatch min_singular_batch(const EnsembleSpec& spec, std::size_t replicas,
                                           const std::vector<ComplexPoint>& zs, double delta) {
  MinSingularBatch b;
  b.z = zs;
  b.matrices = replicas;
  std::vector<std::vector<double>> sig(replicas, std::vector<double>(zs.size()));
  parallel_for(replicas, [&](std::size_t r) {
    const CMatrix a = assemble(spec.with_replica(static_cast<std::uint32_t>(r)));
    for (std::size_t k = 0; k < zs.size(); ++k) sig[r][k] = min_singular_diagnostic(a, zs[k], delta).sigma_min;
  });
  const double thr = std::pow(static_cast<double>(spec.n), -delta);
  b.flag_frequency.assign(zs.size(), 0.0);
  b.smallest.assign(zs.size(), kInf);
  for (std::size_t r = 0; r < replicas; ++r)
    for (std::size_t k = 0; k < zs.size(); ++k) {
      if (sig[r][k] < thr) b.flag_frequency[k] += 1.0;
      b.smallest[k] = std::min(b.smallest[k], sig[r][k]);
    }
  for (auto& f : b.flag_frequency) f /= static_cast<double>(std::max<std::size_t>(replicas, 1));
  return b;
}

// CSV: header line, LF endings, %.17g.

namespace detail {

inline std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  return out;
}

}  // namespace detail

inline void write_spectrum_csv(const std::string& path, const std::vector<std::complex<double>>& eigs) {
  auto out = detail::open_for_write(path);
  out << "re,im\n";
  for (const auto& l : eigs) out << detail::g17(l.real()) << ',' << detail::g17(l.imag()) << '\n';
}

inline void write_singular_values_csv(const std::string& path, const std::vector<double>& s) {
  auto out = detail::open_for_write(path);
  out << "s\n";
  for (double x : s) out << detail::g17(x) << '\n';
}

inline void write_field_csv(const std::string& path, const GirkoField& f) {
  auto out = detail::open_for_write(path);
  out << "re,im,h\n";
  for (std::size_t i = 0; i < f.grid.re.size(); ++i)
    for (std::size_t j = 0; j < f.grid.im.size(); ++j)
      out << detail::g17(f.grid.re[i]) << ',' << detail::g17(f.grid.im[j]) << ','
          << detail::g17(f.h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
}

}  // namespace ringlab
