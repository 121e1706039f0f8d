#pragma once

// Dense kernels delegated to LAPACK / BLAS behind small Eigen-typed wrappers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>
// after lapacke.h: OpenBLAS's cblas.h otherwise fixes C99 complex types
#include <cblas.h>

#include "ringlab/error.hpp"

namespace ringlab {

using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

namespace detail {

inline void check_square(Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (rows != cols) throw PreconditionError(std::string(what) + ": matrix must be square");
}

inline void lapack_status(lapack_int info, const char* routine, Eigen::Index n) {
  if (info < 0) throw NumericalError(std::string(routine) + ": invalid argument " + std::to_string(-info));
  if (info > 0)
    throw NumericalError(std::string(routine) + ": no convergence for n = " + std::to_string(n) + " (info " +
                         std::to_string(info) + ")");
}

}  // namespace detail

/// C = A B through zgemm.
inline CMatrix multiply(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) throw PreconditionError("multiply: inner dimensions differ");
  CMatrix c(a.rows(), b.cols());
  const std::complex<double> one(1.0, 0.0), zero(0.0, 0.0);
  cblas_zgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(a.rows()),
              static_cast<int>(b.cols()), static_cast<int>(a.cols()), &one, a.data(),
              static_cast<int>(a.rows()), b.data(), static_cast<int>(b.rows()), &zero, c.data(),
              static_cast<int>(c.rows()));
  return c;
}

inline RMatrix multiply(const RMatrix& a, const RMatrix& b) {
  if (a.cols() != b.rows()) throw PreconditionError("multiply: inner dimensions differ");
  RMatrix c(a.rows(), b.cols());
  cblas_dgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(a.rows()), static_cast<int>(b.cols()),
              static_cast<int>(a.cols()), 1.0, a.data(), static_cast<int>(a.rows()), b.data(),
              static_cast<int>(b.rows()), 0.0, c.data(), static_cast<int>(c.rows()));
  return c;
}

/// True when every entry has zero imaginary part.
inline bool is_real(const CMatrix& a) { return (a.imag().array() == 0.0).all(); }

/// Sort by decreasing modulus; ties by argument so the order is reproducible.
inline void sort_by_modulus(std::vector<std::complex<double>>& v) {
  std::sort(v.begin(), v.end(), [](const std::complex<double>& x, const std::complex<double>& y) {
    const double ax = std::abs(x), ay = std::abs(y);
    if (ax != ay) return ax > ay;
    return std::arg(x) < std::arg(y);
  });
}

/// Full spectrum (zgeevx: optional balancing, Hessenberg reduction, shifted
/// QR), sorted by decreasing modulus. Balancing only pays off for badly scaled
/// matrices; unitarily mixed ensembles skip it.
inline std::vector<std::complex<double>> eigenvalues(const CMatrix& a, bool balance = true) {
  detail::check_square(a.rows(), a.cols(), "eigenvalues");
  const auto n = static_cast<lapack_int>(a.rows());
  if (n == 0) return {};
  CMatrix work = a;
  std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
  lapack_int ilo = 0, ihi = 0;
  double abnrm = 0.0;
  std::vector<double> scale(static_cast<std::size_t>(n)), rconde(static_cast<std::size_t>(n)),
      rcondv(static_cast<std::size_t>(n));
  const lapack_int info =
      LAPACKE_zgeevx(LAPACK_COL_MAJOR, balance ? 'B' : 'N', 'N', 'N', 'N', n, work.data(), n, w.data(), nullptr, 1,
                     nullptr, 1, &ilo, &ihi, scale.data(), &abnrm, rconde.data(), rcondv.data());
  detail::lapack_status(info, "zgeevx", n);
  sort_by_modulus(w);
  return w;
}

inline std::vector<std::complex<double>> eigenvalues(const RMatrix& a, bool balance = true) {
  detail::check_square(a.rows(), a.cols(), "eigenvalues");
  const auto n = static_cast<lapack_int>(a.rows());
  if (n == 0) return {};
  RMatrix work = a;
  std::vector<double> wr(static_cast<std::size_t>(n)), wi(static_cast<std::size_t>(n));
  lapack_int ilo = 0, ihi = 0;
  double abnrm = 0.0;
  std::vector<double> scale(static_cast<std::size_t>(n)), rconde(static_cast<std::size_t>(n)),
      rcondv(static_cast<std::size_t>(n));
  const lapack_int info =
      LAPACKE_dgeevx(LAPACK_COL_MAJOR, balance ? 'B' : 'N', 'N', 'N', 'N', n, work.data(), n, wr.data(), wi.data(),
                     nullptr, 1, nullptr, 1, &ilo, &ihi, scale.data(), &abnrm, rconde.data(), rcondv.data());
  detail::lapack_status(info, "dgeevx", n);
  std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = {wr[i], wi[i]};
  sort_by_modulus(w);
  return w;
}

/// Singular values, decreasing (zgesdd without vectors).
inline std::vector<double> singular_values(const CMatrix& a) {
  const auto m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
  if (m == 0 || n == 0) return {};
  CMatrix work = a;
  std::vector<double> s(static_cast<std::size_t>(std::min(m, n)));
  const lapack_int info =
      LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n, work.data(), m, s.data(), nullptr, 1, nullptr, 1);
  detail::lapack_status(info, "zgesdd", std::max(m, n));
  return s;
}

inline std::vector<double> singular_values(const RMatrix& a) {
  const auto m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
  if (m == 0 || n == 0) return {};
  RMatrix work = a;
  std::vector<double> s(static_cast<std::size_t>(std::min(m, n)));
  const lapack_int info =
      LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', m, n, work.data(), m, s.data(), nullptr, 1, nullptr, 1);
  detail::lapack_status(info, "dgesdd", std::max(m, n));
  return s;
}

/// LU factorization with partial pivoting (zgetrf). singular is set when a
/// pivot is exactly zero.
struct LuFactors {
  CMatrix lu;
  std::vector<lapack_int> pivots;
  bool singular = false;

  /// log |det|; -inf when singular
  double log_abs_det() const {
    if (singular) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < lu.rows(); ++i) acc += std::log(std::abs(lu(i, i)));
    return acc;
  }
  double min_abs_pivot() const {
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < lu.rows(); ++i) m = std::min(m, std::abs(lu(i, i)));
    return m;
  }
  /// solves op(A) x = b in place; op is 'N' or 'C'
  void solve(CVector& b, char op) const {
    const auto n = static_cast<lapack_int>(lu.rows());
    detail::lapack_status(LAPACKE_zgetrs(LAPACK_COL_MAJOR, op, n, 1, lu.data(), n, pivots.data(), b.data(), n),
                          "zgetrs", n);
  }
};

inline LuFactors lu_factor(CMatrix a) {
  detail::check_square(a.rows(), a.cols(), "lu_factor");
  const auto n = static_cast<lapack_int>(a.rows());
  LuFactors f;
  f.pivots.resize(static_cast<std::size_t>(std::max<lapack_int>(n, 1)));
  const lapack_int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, a.data(), n, f.pivots.data());
  if (info < 0) detail::lapack_status(info, "zgetrf", n);
  f.singular = info > 0;
  f.lu = std::move(a);
  return f;
}

/// Smallest singular value: power iteration on (M^* M)^{-1} through one LU,
/// falling back to a full SVD when the iteration stalls (close bottom pair).
inline double smallest_singular_value(const CMatrix& m) {
  detail::check_square(m.rows(), m.cols(), "smallest_singular_value");
  const Eigen::Index n = m.rows();
  if (n == 0) return 0.0;
  const auto f = lu_factor(m);
  if (f.singular) return 0.0;
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    v(i) = std::complex<double>(1.0 + 0.5 * std::cos(0.7 * t), 0.5 * std::sin(1.3 * t));
  }
  v.normalize();
  double mu_prev = 0.0;
  for (int it = 0; it < 300; ++it) {
    CVector w = v;
    f.solve(w, 'C');
    const double mu = w.squaredNorm();  // v^* (M M^*)^{-1} v
    if (!std::isfinite(mu)) break;
    if (it > 2 && std::abs(mu - mu_prev) <= 1e-13 * mu) return 1.0 / std::sqrt(mu);
    mu_prev = mu;
    f.solve(w, 'N');
    const double nw = w.norm();
    if (!(nw > 0.0) || !std::isfinite(nw)) break;
    v = w / nw;
  }
  const auto s = singular_values(m);
  return s.back();
}

/// Upper Hessenberg form Q^* A Q (zgehrd); determinants of zI - A equal
/// those of zI - H.
inline CMatrix hessenberg_form(CMatrix a) {
  detail::check_square(a.rows(), a.cols(), "hessenberg_form");
  const auto n = static_cast<lapack_int>(a.rows());
  if (n < 3) return a;
  std::vector<std::complex<double>> tau(static_cast<std::size_t>(n - 1));
  detail::lapack_status(LAPACKE_zgehrd(LAPACK_COL_MAJOR, n, 1, n, a.data(), n, tau.data()), "zgehrd", n);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = j + 2; i < a.rows(); ++i) a(i, j) = 0.0;
  return a;
}

/// log|det(zI - H)| for upper Hessenberg H by Gaussian elimination with
/// partial pivoting, O(n^2). min_pivot receives the smallest |pivot|.
inline double hessenberg_shifted_log_det(const CMatrix& h, std::complex<double> z, double& min_pivot) {
  const Eigen::Index n = h.rows();
  CMatrix m = -h;
  m.diagonal().array() += z;
  double acc = 0.0;
  min_pivot = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k + 1 < n && std::abs(m(k + 1, k)) > std::abs(m(k, k))) {
      for (Eigen::Index j = k; j < n; ++j) std::swap(m(k, j), m(k + 1, j));
    }
    const std::complex<double> p = m(k, k);
    const double ap = std::abs(p);
    min_pivot = std::min(min_pivot, ap);
    if (ap == 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log(ap);
    if (k + 1 < n) {
      const std::complex<double> l = m(k + 1, k) / p;
      if (l != 0.0)
        for (Eigen::Index j = k + 1; j < n; ++j) m(k + 1, j) -= l * m(k, j);
    }
  }
  return acc;
}

/// Eigenvalues of a Hermitian matrix, increasing (zheevd, lower triangle).
inline std::vector<double> hermitian_eigenvalues(const CMatrix& h) {
  detail::check_square(h.rows(), h.cols(), "hermitian_eigenvalues");
  const auto n = static_cast<lapack_int>(h.rows());
  if (n == 0) return {};
  CMatrix work = h;
  std::vector<double> w(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n, work.data(), n, w.data());
  detail::lapack_status(info, "zheevd", n);
  return w;
}

/// In-place QR: returns Q (explicit, zungqr) and the diagonal of R.
inline CMatrix qr_q(CMatrix a, CVector& r_diag) {
  const auto m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  std::vector<std::complex<double>> tau(static_cast<std::size_t>(k));
  detail::lapack_status(LAPACKE_zgeqrf(LAPACK_COL_MAJOR, m, n, a.data(), m, tau.data()), "zgeqrf", n);
  r_diag.resize(k);
  for (lapack_int i = 0; i < k; ++i) r_diag(i) = a(i, i);
  detail::lapack_status(LAPACKE_zungqr(LAPACK_COL_MAJOR, m, k, k, a.data(), m, tau.data()), "zungqr", n);
  return a.leftCols(k);
}

inline RMatrix qr_q(RMatrix a, RVector& r_diag) {
  const auto m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  std::vector<double> tau(static_cast<std::size_t>(k));
  detail::lapack_status(LAPACKE_dgeqrf(LAPACK_COL_MAJOR, m, n, a.data(), m, tau.data()), "dgeqrf", n);
  r_diag.resize(k);
  for (lapack_int i = 0; i < k; ++i) r_diag(i) = a(i, i);
  detail::lapack_status(LAPACKE_dorgqr(LAPACK_COL_MAJOR, m, k, k, a.data(), m, tau.data()), "dorgqr", n);
  return a.leftCols(k);
}

}  // namespace ringlab
