#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ringlab/rmt.hpp"

using namespace ringlab;

namespace {

Measure1D two_atoms() { return Measure1D::from_atoms({{1.0, 0.5}, {2.0, 0.5}}); }

EnsembleSpec utv(std::size_t n, Measure1D theta, std::uint64_t seed, Model m = Model::utv_unitary) {
  EnsembleSpec s;
  s.n = n;
  s.model = m;
  s.t_source = TSource::from_quantiles(std::move(theta));
  s.seed = seed;
  return s;
}

CMatrix random_matrix(Eigen::Index n, std::uint64_t seed) {
  KeyedRng rng(seed, 0, StreamTag::test);
  CMatrix a(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = {uniform01(rng) - 0.5, uniform01(rng) - 0.5};
  return a;
}

}  // namespace

TEST(Haar, one_by_one) {
  KeyedRng rng(1, 0, StreamTag::test);
  int plus = 0;
  for (int k = 0; k < 2000; ++k) {
    EXPECT_NEAR(std::abs(haar_unitary(1, rng)(0, 0)), 1.0, 1e-15);
    const double o = haar_orthogonal(1, rng)(0, 0);
    EXPECT_EQ(std::abs(o), 1.0);
    plus += o > 0;
  }
  // 3 sigma with sigma = sqrt(2000)/2
  EXPECT_NEAR(plus, 1000, 3 * std::sqrt(2000.0) / 2);
}

TEST(Haar, unitarity_defect) {
  KeyedRng rng(2, 0, StreamTag::test);
  const std::size_t n = 80;
  const auto u = haar_unitary(n, rng);
  const auto o = haar_orthogonal(n, rng);
  EXPECT_LE((u.adjoint() * u - CMatrix::Identity(n, n)).norm(), 1e-12 * n);
  EXPECT_LE((o.transpose() * o - RMatrix::Identity(n, n)).norm(), 1e-12 * n);
}

TEST(Haar, moments_match_the_invariant_measure) {
  KeyedRng rng(3, 0, StreamTag::test);
  const int draws = 2000;
  const std::size_t n = 20;
  std::vector<double> tr_u, u11, tr_o;
  for (int k = 0; k < draws; ++k) {
    const auto u = haar_unitary(n, rng);
    tr_u.push_back(std::norm(u.trace()));
    u11.push_back(std::norm(u(0, 0)));
    const auto o = haar_orthogonal(n, rng);
    tr_o.push_back(o.trace() * o.trace());
  }
  auto check = [&](const std::vector<double>& v, double target, const char* what) {
    double m = 0, m2 = 0;
    for (double x : v) {
      m += x;
      m2 += x * x;
    }
    m /= v.size();
    const double se = std::sqrt((m2 / v.size() - m * m) / v.size());
    EXPECT_NEAR(m, target, 3 * se) << what;
  };
  check(tr_u, 1.0, "E|tr U|^2");
  check(u11, 1.0 / n, "E|U11|^2");
  check(tr_o, 1.0, "E(tr O)^2");
}

TEST(Diagonal, quantile_examples) {
  const auto u = diag_from_quantile(catalog::uniform(0.0, 1.0), 4);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(u[i], 0.25 * (i + 1), 1e-12);
  EXPECT_EQ(diag_from_quantile(catalog::delta(2.0), 3), (std::vector<double>{2, 2, 2}));
  EXPECT_EQ(diag_from_quantile(two_atoms(), 4), (std::vector<double>{1, 1, 2, 2}));
  EXPECT_THROW(diag_from_quantile(catalog::uniform(-1.0, 1.0), 3), DomainError);
}

TEST(Assemble, identity_diagonal_gives_unitary) {
  EnsembleSpec s;
  s.n = 120;
  s.t_source = TSource::from_values(std::vector<double>(120, 1.0));
  s.seed = 4;
  for (const auto m : {Model::utv_unitary, Model::utv_orthogonal}) {
    s.model = m;
    for (const auto& l : spectrum(assemble(s))) EXPECT_NEAR(std::abs(l), 1.0, 1e-10);
  }
}

TEST(Assemble, singular_values_are_the_diagonal) {
  for (const auto m : {Model::utv_unitary, Model::utv_orthogonal}) {
    const auto s = utv(150, catalog::quarter_circle(), 5, m);
    auto t = diagonal_entries(s);
    std::sort(t.rbegin(), t.rend());
    const auto sv = singular_spectrum(assemble(s));
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(sv[i], t[i], 1e-10);
  }
}

TEST(Assemble, ginibre_edge) {
  EnsembleSpec s;
  s.n = 1000;
  s.model = Model::ginibre;
  s.seed = 6;
  const double s1 = singular_spectrum(assemble(s)).front();
  EXPECT_GE(s1, 1.8);
  EXPECT_LE(s1, 2.2);
}

TEST(Assemble, deterministic_and_replica_dependent) {
  auto s = utv(60, two_atoms(), 7);
  s.noise_gamma = 1.0;
  const auto a = assemble(s), b = assemble(s);
  EXPECT_TRUE((a.array() == b.array()).all());
  EXPECT_FALSE((a.array() == assemble(s.with_replica(1)).array()).all());
  s.model = Model::additive;
  EXPECT_TRUE((assemble(s).array() == assemble(s).array()).all());
}

TEST(Assemble, validation) {
  EnsembleSpec s;
  s.n = 3;
  s.t_source = TSource::from_values({1.0, -1.0, 2.0});
  EXPECT_THROW(assemble(s), PreconditionError);
  s.t_source = TSource::from_values({1.0, 2.0});
  EXPECT_THROW(assemble(s), PreconditionError);
  s.t_source = TSource::from_values({1.0, 1.0, 2.0});
  s.noise_gamma = 0.4;
  EXPECT_THROW(assemble(s), PreconditionError);
}

TEST(Assemble, fz_source_feeds_log_gas_singular_values) {
  EnsembleSpec s;
  s.n = 60;
  s.model = Model::utv_unitary;
  s.t_source = TSource::from_log_gas(Potential::linear(), 600);
  s.seed = 8;
  auto t = diagonal_entries(s);
  std::sort(t.rbegin(), t.rend());
  const auto sv = singular_spectrum(assemble(s));
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(sv[i], t[i], 1e-10);
}

TEST(Eigenvalues, small_examples) {
  CMatrix d = CMatrix::Zero(3, 3);
  d.diagonal() << 1.0, 2.0, 3.0;
  const auto e = eigenvalues(d);
  EXPECT_NEAR(e[0].real(), 3, 1e-14);
  EXPECT_NEAR(e[2].real(), 1, 1e-14);
  CMatrix nil = CMatrix::Zero(2, 2);
  nil(0, 1) = 1.0;
  for (const auto& l : eigenvalues(nil)) EXPECT_EQ(std::abs(l), 0.0);
  RMatrix comp(2, 2);
  comp << 0.0, 1.0, 1.0, 0.0;
  const auto c = eigenvalues(comp);
  EXPECT_NEAR(std::abs(c[0]), 1.0, 1e-14);
  EXPECT_NEAR(c[0].real() + c[1].real(), 0.0, 1e-14);
  EXPECT_THROW(eigenvalues(CMatrix(2, 3)), PreconditionError);
}

TEST(SpectrumSample, algebraic_identities_on_every_model) {
  for (const auto m : {Model::utv_unitary, Model::utv_orthogonal, Model::additive, Model::ginibre}) {
    auto s = utv(200, two_atoms(), 9, m);
    s.noise_gamma = 1.0;
    const auto smp = sample_spectrum(s);
    EXPECT_TRUE(smp.weyl.pass) << to_string(m) << " excess " << smp.weyl.worst_excess;
    EXPECT_TRUE(smp.trace_pass) << smp.trace_defect;
    EXPECT_TRUE(smp.det_pass) << smp.det_defect;
    EXPECT_TRUE(std::is_sorted(smp.singular_values.rbegin(), smp.singular_values.rend()));
    for (std::size_t i = 1; i < smp.eigenvalues.size(); ++i)
      EXPECT_GE(std::abs(smp.eigenvalues[i - 1]), std::abs(smp.eigenvalues[i]));
  }
}

TEST(SpectrumSample, weyl_violation_is_caught) {
  std::vector<std::complex<double>> e{3.0, 0.5};
  std::vector<double> s{2.0, 0.75};
  EXPECT_FALSE(weyl_check(e, s).pass);
  std::vector<std::complex<double>> ok{1.5, 1.0};
  EXPECT_TRUE(weyl_check(ok, s).pass);
}

TEST(Hermitize, examples_and_symmetry) {
  const CMatrix zero = CMatrix::Zero(1, 1);
  const auto h = hermitize(zero, 1.0);
  EXPECT_EQ(h(0, 1), std::complex<double>(1.0));
  EXPECT_EQ(h(1, 0), std::complex<double>(1.0));
  const auto e = hermitian_eigenvalues(h);
  EXPECT_NEAR(e[0], -1.0, 1e-15);
  EXPECT_NEAR(e[1], 1.0, 1e-15);
  const auto a = random_matrix(40, 10);
  EXPECT_LT(hermitize_defect(a, {0.3, -0.2}), 1e-10);
  KeyedRng rng(11, 0, StreamTag::test);
  const auto u = haar_unitary(30, rng);
  for (double x : hermitian_eigenvalues(hermitize(u, 0.0))) EXPECT_NEAR(std::abs(x), 1.0, 1e-12);
}

TEST(GirkoField, examples) {
  KeyedRng rng(12, 0, StreamTag::test);
  const auto u = haar_unitary(50, rng);
  ZGrid origin{{0.0, 1e-3}, {0.0, 1e-3}};
  for (auto method : {FieldMethod::svd, FieldMethod::determinant, FieldMethod::eigenvalue})
    EXPECT_NEAR(girko_field(u, origin, method).h(0, 0), 0.0, 1e-12);
  const CMatrix zero = CMatrix::Zero(1, 1);
  ZGrid two{{2.0, 2.5}, {0.0, 0.5}};
  EXPECT_NEAR(girko_field(zero, two).h(0, 0), std::log(2.0), 1e-15);
  const auto a = random_matrix(60, 13);
  const double norm = singular_values(a).front();
  ZGrid far{{10 * norm, 10 * norm + 1}, {0.0, 1.0}};
  EXPECT_NEAR(girko_field(a, far).h(0, 0), std::log(10 * norm), 0.02);
}

TEST(GirkoField, three_routes_agree) {
  const auto a = random_matrix(50, 14);
  const auto g = square_grid(1.5, 9, {0.05, 0.03});
  const auto f1 = girko_field(a, g, FieldMethod::svd);
  const auto f2 = girko_field(a, g, FieldMethod::determinant);
  const auto f3 = girko_field(a, g, FieldMethod::eigenvalue);
  EXPECT_LT((f1.h - f2.h).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((f1.h - f3.h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GirkoField, grid_point_on_an_eigenvalue_is_nudged) {
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 0.0;
  a(1, 1) = 0.5;
  const auto g = square_grid(1.0, 5);  // contains 0 and 0.5
  const auto f = girko_field(a, g);
  EXPECT_EQ(f.nudged.size(), 2u);
  EXPECT_TRUE(f.excluded.empty());
  EXPECT_TRUE(f.h.allFinite());
}

TEST(GirkoField, ginibre_density_is_uniform_on_the_disk) {
  EnsembleSpec s;
  s.n = 1000;
  s.model = Model::ginibre;
  s.seed = 15;
  const auto a = assemble(s);
  // the step must be well above the eigenvalue spacing n^{-1/2} for a stable Laplacian
  const auto g = square_grid(1.5, 13, {0.0123, 0.0071});
  const auto f = girko_field(a, g, FieldMethod::determinant);
  const auto d = density_from_field(f);
  EXPECT_NEAR(d.raw_mass, 1.0, 0.05);
  double inner = 0.0;
  for (std::size_t i = 1; i + 1 < g.re.size(); ++i)
    for (std::size_t j = 1; j + 1 < g.im.size(); ++j)
      if (std::abs(g.at(i, j)) < 0.7) inner = std::max(inner, std::abs(d.density(i, j) - 1.0 / kPi));
  EXPECT_LT(inner, 0.05);

  // harmonic region: a finer window off the disk, raw (unnormalized) values
  const auto out = square_grid(0.5, 11, {2.0, 0.3});
  const auto dout = density_from_field(girko_field(a, out, FieldMethod::determinant));
  EXPECT_LE(dout.density.maxCoeff() / dout.renormalization, 1e-3);
}

TEST(GirkoField, excluded_interior_points_block_the_density) {
  GirkoField f;
  f.grid = square_grid(1.0, 5);
  f.h = RMatrix::Zero(5, 5);
  f.n = 1;
  f.excluded.emplace_back(2, 2);
  EXPECT_THROW(density_from_field(f), PreconditionError);
}

TEST(EmpiricalRadial, unitary_and_ginibre) {
  KeyedRng rng(16, 0, StreamTag::test);
  const auto u = haar_unitary(100, rng);
  const auto rad = empirical_radial(spectrum(u));
  EXPECT_NEAR(quantile(rad, 1e-3), 1.0, 1e-10);
  EXPECT_NEAR(quantile(rad, 1.0), 1.0, 1e-10);
  EXPECT_THROW(empirical_radial({}), PreconditionError);

  EnsembleSpec s;
  s.n = 1000;
  s.model = Model::ginibre;
  s.seed = 17;
  const auto gin = empirical_radial(spectrum(assemble(s)));
  std::vector<double> r, f;
  for (int i = 0; i <= 200; ++i) {
    r.push_back(1.0 * i / 200);
    f.push_back(2.0 * r.back());  // density of |z| for the uniform disk
  }
  EXPECT_LT(ks_distance(gin, Measure1D::from_grid(r, f)), 0.05);
}

TEST(MinSingular, examples) {
  KeyedRng rng(18, 0, StreamTag::test);
  const auto u = haar_unitary(60, rng);
  const auto r = min_singular_diagnostic(u, 0.0, 0.5);
  EXPECT_NEAR(r.sigma_min, 1.0, 1e-10);
  EXPECT_FALSE(r.flag);
  const auto a = random_matrix(60, 19);
  const double norm = singular_values(a).front();
  const auto far = min_singular_diagnostic(a, 2 * norm, 1.0);
  EXPECT_GE(far.sigma_min, norm - 1e-10);
  for (ComplexPoint z : {ComplexPoint(0.1, 0.2), ComplexPoint(-0.4, 0.0), ComplexPoint(1.0, 1.0)}) {
    CMatrix m = -a;
    m.diagonal().array() += z;
    EXPECT_NEAR(min_singular_diagnostic(a, z, 1.0).sigma_min, singular_values(m).back(), 1e-9);
  }
}

TEST(MinSingular, batch_frequencies) {
  auto s = utv(80, catalog::quarter_circle(), 20);
  s.noise_gamma = 1.0;
  const auto b = min_singular_batch(s, 10, {ComplexPoint(0.2, 0.1), ComplexPoint(-0.3, 0.3)}, 3.0);
  ASSERT_EQ(b.flag_frequency.size(), 2u);
  for (double f : b.flag_frequency) EXPECT_EQ(f, 0.0);
  for (double m : b.smallest) EXPECT_GT(m, 0.0);
}

TEST(Invariance, left_unitary_factor_leaves_the_radial_law) {
  const std::size_t n = 40, draws = 200;
  std::vector<double> plain, rotated;
  KeyedRng wrng(21, 0, StreamTag::test);
  const auto w = haar_unitary(n, wrng);
  for (std::size_t k = 0; k < draws; ++k) {
    const auto a = assemble(utv(n, two_atoms(), 22).with_replica(static_cast<std::uint32_t>(k)));
    for (const auto& l : spectrum(a)) plain.push_back(std::abs(l));
    for (const auto& l : spectrum(multiply(w, a))) rotated.push_back(std::abs(l));
  }
  // draws as the independent unit: two-sample KS critical value at 0.1%
  const double crit = 1.95 * std::sqrt(2.0 / draws);
  EXPECT_LT(ks_distance(Measure1D::from_samples(plain), Measure1D::from_samples(rotated)), crit);
}

TEST(GirkoIdentity, bump_statistic_matches_field_integral) {
  const auto a = assemble(utv(150, two_atoms(), 23));
  const auto eigs = spectrum(a);
  const ComplexPoint c(0.4, -0.2);
  const double rho = 1.2;
  auto psi = [&](ComplexPoint z) {
    const double u = std::norm(z - c) / (rho * rho);
    return u < 1 ? std::pow(1 - u, 4) : 0.0;
  };
  auto lap = [&](ComplexPoint z) {
    const double u = std::norm(z - c) / (rho * rho);
    return u < 1 ? 16.0 / (rho * rho) * (1 - u) * (1 - u) * (4 * u - 1) : 0.0;
  };
  double lhs = 0.0;
  for (const auto& l : eigs) lhs += psi(l);
  lhs /= static_cast<double>(eigs.size());
  const auto g = square_grid(rho, 121, c + ComplexPoint(1e-4, 2e-4));
  const auto f = girko_field(a, g, FieldMethod::determinant);
  const double cell = g.step_re() * g.step_im();
  double rhs = 0.0;
  for (std::size_t i = 0; i < g.re.size(); ++i)
    for (std::size_t j = 0; j < g.im.size(); ++j) rhs += lap(g.at(i, j)) * f.h(i, j) * cell;
  rhs /= 2 * kPi;
  EXPECT_NEAR(lhs, rhs, 0.02);
}

TEST(Csv, formats) {
  const auto dir = std::filesystem::temp_directory_path() / "ringlab_test_rmt";
  std::filesystem::create_directories(dir);
  const auto p = (dir / "eig.csv").string();
  write_spectrum_csv(p, {{1.0, -0.5}, {0.1, 0.0}});
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "re,im\n1,-0.5\n0.10000000000000001,0\n");
  EXPECT_THROW(write_singular_values_csv("/nonexistent/dir/x.csv", {1.0}), Error);
}
