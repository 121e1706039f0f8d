#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ringlab/freeprob.hpp"

using namespace ringlab;

namespace {

Measure1D bernoulli(double rho) { return Measure1D::from_atoms({{-rho, 0.5}, {rho, 0.5}}); }

// arcsine law on [-2, 2] = lambda_1 (+) lambda_1; G(z) = 1/sqrt(z^2 - 4) with the ~1/z branch
Complex arcsine_stieltjes(Complex z) {
  const Complex r = std::sqrt(z - 2.0) * std::sqrt(z + 2.0);
  return 1.0 / r;
}

}  // namespace

TEST(BernoulliR, examples) {
  EXPECT_EQ(bernoulli_r(1.0, 0.0), Complex(0.0, 0.0));
  EXPECT_NEAR(std::abs(bernoulli_r(1.0, 1e-12)), 1e-12, 1e-20);
  const Complex r = bernoulli_r(1.0, 0.1);
  EXPECT_NEAR(r.real(), 0.0990195, 1e-7);
  EXPECT_NEAR(r.real(), 0.1 - 0.001, 2e-4);  // series rho^2 w - rho^4 w^3
  const Complex s = bernoulli_r(2.0, Complex(0.0, -0.1));
  EXPECT_LT(s.imag(), 0.0);
  EXPECT_NEAR(s.real(), 0.0, 1e-15);
  // satisfies rho R^2 - ... : R solves rho w R^2 + R - rho w = 0 ... check the defining relation
  for (Complex w : {Complex(0.3, -0.2), Complex(-1.0, -0.5), Complex(0.05, -2.0)}) {
    const double rho = 1.3;
    const Complex R = bernoulli_r(rho, w);
    EXPECT_NEAR(std::abs(rho * w * R * R + R - rho * w), 0.0, 1e-13) << w;
  }
}

TEST(BernoulliR, maps_lower_half_plane_near_zero_to_lower_half_plane) {
  for (double rho : {0.5, 1.0, 2.0})
    for (Complex w : {Complex(0.01, -0.02), Complex(-0.1, -0.05), Complex(0.2, -0.1)})
      EXPECT_LT(bernoulli_r(rho, w).imag(), 0.0);
}

TEST(SDSolve, degenerate_cases) {
  const auto d0 = catalog::delta(0.0);
  const auto sol = sd_solve(d0, 1.0, {0.0, 2.0});
  EXPECT_NEAR(std::abs(sol.G - Complex(0.0, -0.4)), 0.0, 1e-14);
  const auto b = bernoulli(1.0);
  const auto zero = sd_solve(b, 0.0, {0.0, 1.0});
  EXPECT_NEAR(std::abs(zero.G - stieltjes(b, {0.0, 1.0})), 0.0, 0.0);
  EXPECT_THROW(sd_solve(b, 1.0, {0.0, 0.0}), DomainError);
  EXPECT_THROW(sd_solve(catalog::delta(1.0), 1.0, {0.0, 1.0}), DomainError);
}

TEST(SDSolve, tiny_symmetric_atoms_reproduce_bernoulli_law) {
  // theta~ close to delta_0 without the shortcut: nu ~ lambda_1, G = z/(z^2 - 1)
  const auto near0 = bernoulli(1e-7);
  const Complex z(0.3, 2.0);
  const auto sol = sd_solve(near0, 1.0, z);
  EXPECT_NEAR(std::abs(sol.G - z / (z * z - 1.0)), 0.0, 1e-10);
}

TEST(SDSolve, arcsine_closed_form) {
  const auto b = bernoulli(1.0);
  for (Complex z : {Complex(0.0, 1.0), Complex(1.0, 0.1), Complex(-1.7, 0.01), Complex(2.5, 1e-3), Complex(0.2, 1e-4),
                    Complex(1.99, 1e-4)}) {
    const auto sol = sd_solve(b, 1.0, z);
    EXPECT_NEAR(std::abs(sol.G - arcsine_stieltjes(z)), 0.0, 1e-9 * std::max(1.0, std::abs(sol.G))) << z;
    EXPECT_GE(sol.z2.imag(), z.imag() * (1 - 1e-12));
    EXPECT_LE(sol.residual, 1e-10 * std::max(1.0, std::abs(sol.G))) << z;
    EXPECT_LT(sol.G.imag(), 0.0);
  }
}

TEST(SDSolve, large_height_moment_expansion) {
  const auto b = bernoulli(1.0);
  for (double y : {20.0, 50.0, 200.0}) {
    const Complex z(0.0, y);
    const auto sol = sd_solve(b, 1.0, z);
    const Complex expansion = 1.0 / z + 2.0 / (z * z * z);
    // second moment of the arcsine law is 2; next term O(z^-5)
    EXPECT_NEAR(std::abs(sol.G - expansion), 0.0, 10.0 / std::pow(y, 5)) << y;
  }
}

TEST(SDSolve, invariants_on_quarter_circle) {
  const auto th = symmetrize(catalog::quarter_circle());
  for (double rho : {0.3, 1.0, 2.5})
    for (Complex z : {Complex(0.0, 0.5), Complex(1.2, 0.05), Complex(-3.0, 1e-3), Complex(0.01, 1e-4)}) {
      const auto sol = sd_solve(th, rho, z);
      EXPECT_GE(sol.z2.imag(), z.imag() * (1 - 1e-12));
      EXPECT_LE(sol.residual, 1e-10) << rho << " " << z;
      EXPECT_LT(sol.G.imag(), 0.0);
      // companion transform solves 2 G_U (1 + 2 rho G_U) = rho G^2
      const Complex gu = companion_stieltjes(sol, rho);
      EXPECT_NEAR(std::abs(2.0 * gu * (1.0 + 2.0 * rho * gu) - rho * sol.G * sol.G), 0.0,
                  1e-10 * std::max(1.0, std::norm(sol.G)));
    }
}

TEST(SDSolve, diag_bounds) {
  const auto th = symmetrize(catalog::quarter_circle());
  // density of theta~ is at most 1/pi, so |Im G_theta~| <= pi * sup density = 1 on C+
  const auto sol = sd_solve(th, 0.5, {0.3, 0.2});
  EXPECT_TRUE(diag_bounds_check(sol, 1.0));
  SDSolution fake{{0, 1}, Complex(0.0, -10.0), {0, 1}, 0.0, 0};
  EXPECT_FALSE(diag_bounds_check(fake, 1.0));
  const auto atomic = sd_solve(bernoulli(1.0), 0.0, {1.0, 1e-3});
  EXPECT_FALSE(diag_bounds_check(atomic, 1.0));
}

TEST(FreeConvolve, arcsine_oracle) {
  const double edge[] = {2.0};
  const auto grid = mirrored(clustered_grid(0.0, 2.5, 1e-3, edge));
  const auto res = free_convolve_bernoulli(catalog::delta(1.0), 1.0, grid, 1e-4);
  double err = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    if (std::abs(x) > 1.9) continue;
    err = std::max(err, std::abs(res.density.values()[i] - 1.0 / (kPi * std::sqrt(4 - x * x))));
  }
  EXPECT_LT(err, 1e-3);
  EXPECT_TRUE(res.density.is_symmetric(0.0));
  EXPECT_NEAR(log_potential(res.density), 0.0, 1e-4);
}

TEST(FreeConvolve, no_convolution_keeps_two_peaks) {
  std::vector<double> grid;
  for (double x = -1.5; x <= 1.5 + 1e-12; x += 1e-3) grid.push_back(x);
  const auto res = free_convolve_bernoulli(catalog::delta(1.0), 0.0, grid, 1e-2);
  const double left = res.density.cdf(0.0);
  EXPECT_NEAR(left, 0.5, 1e-2);
  EXPECT_NEAR(res.density.cdf(1.5) - left, 0.5, 1e-2);
}

TEST(FreeConvolve, quarter_circle_support_and_variance) {
  const auto grid = mirrored(clustered_grid(0.0, 3.0, 1e-2, {}));
  const auto res = free_convolve_bernoulli(catalog::quarter_circle(), 0.5, grid, 1e-3);
  EXPECT_TRUE(res.density.is_symmetric(0.0));
  EXPECT_NEAR(res.density.total_mass(), 1.0, 1e-9);
  EXPECT_LT(res.density.cdf(-2.5), 1e-3);
  EXPECT_GT(res.density.cdf(2.5), 1 - 1e-3);
  EXPECT_NEAR(moment(res.density, 2), 1.0 + 0.25, 2e-3);
}

TEST(STransform, point_mass_is_constant) {
  for (double c : {0.5, 2.0})
    for (double t : {0.1, 0.5, 0.9, -0.3, -0.9})
      EXPECT_NEAR(s_transform(catalog::delta(c), t), 1.0 / c, 1e-10) << c << " " << t;
}

TEST(STransform, marchenko_pastur_closed_form) {
  const auto mp = catalog::marchenko_pastur(1600);
  const auto mp_exact = HalfLineMeasure::square_of(catalog::quarter_circle(1600));
  for (double t : {-0.9, -0.5, -0.1, 0.1, 0.5, 0.9}) {
    EXPECT_NEAR(s_transform(mp_exact, t) * (1.0 + t), 1.0, 2e-6) << t;
    // grid in x: the x^{-1/2} singularity at 0 costs accuracy
    EXPECT_NEAR(s_transform(mp, t) * (1.0 + t), 1.0, 5e-4) << t;
  }
  // psi from the Catalan moments: psi(u) = sum_k C_k u^k, small u
  const double u = 0.05;
  const double series = u + 2 * u * u + 5 * std::pow(u, 3) + 14 * std::pow(u, 4) + 42 * std::pow(u, 5) +
                        132 * std::pow(u, 6) + 429 * std::pow(u, 7) + 1430 * std::pow(u, 8);
  EXPECT_NEAR(psi(mp, u), series, 1e-6);
}

TEST(STransform, two_atoms_bounds_and_errors) {
  const auto m = Measure1D::from_atoms({{1.0, 0.5}, {4.0, 0.5}});
  const double s = s_transform(m, 0.5);
  EXPECT_GT(s, 0.25);
  EXPECT_LT(s, 1.0);
  EXPECT_THROW(s_transform(m, 1.0), DomainError);
  EXPECT_THROW(s_transform(m, -1.0), DomainError);
  EXPECT_THROW(s_transform(Measure1D::from_atoms({{0.0, 0.5}, {1.0, 0.5}}), 0.5), DomainError);
  // psi blows up at 1/x_max for atoms, so every t < 1 is reachable
  EXPECT_NO_THROW(s_transform(m, 0.99));
  // a density vanishing fast at x_max keeps sup psi below 1
  std::vector<double> xs, vs;
  for (int i = 0; i <= 400; ++i) {
    const double x = 1.0 + 9.0 * i / 400.0;
    xs.push_back(x);
    vs.push_back(std::pow(10.0 - x, 6));
  }
  const auto steep = Measure1D::from_grid(xs, vs, std::nullopt, true);
  const double sup = psi(steep, 0.1 * (1 - 1e-13));
  ASSERT_LT(sup, 0.9);
  EXPECT_THROW(s_transform(steep, sup + 0.05), DomainError);
  EXPECT_NO_THROW(s_transform(steep, 0.9 * sup));
}

TEST(STransform, table_identity_and_monotone_F) {
  const auto tab = s_transform_table(HalfLineMeasure::square_of(catalog::quarter_circle()));
  EXPECT_LE(tab.max_identity_error, 1e-10);
  for (std::size_t k = 0; k + 1 < tab.t_grid.size(); ++k) EXPECT_GE(tab.F_values[k + 1], tab.F_values[k] - 1e-10);
  for (std::size_t k = 0; k < tab.t_grid.size(); k += 37) EXPECT_NEAR(tab.F_values[k], std::sqrt(tab.t_grid[k]), 1e-7);
  EXPECT_NEAR(tab.F_values.back(), 1.0, 1e-12);
}

TEST(PoissonPair, matches_quadrature_and_identity) {
  const auto qc = catalog::quarter_circle();
  const PoissonPair pq(qc);
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double s : {1e-3, 0.1, 1.0, 19.0, 21.0, 300.0}) {
    const auto v = pq(s);
    const double p = ts.integrate([&](double x) { return s / (s * s + x * x) * std::sqrt(4 - x * x) / kPi; }, 0.0, 2.0);
    EXPECT_NEAR(v.p, p, 1e-6 * p) << s;
    EXPECT_NEAR(v.q, 1.0 - s * v.p, 1e-12) << s;
    const double h = 1e-5 * s;
    EXPECT_NEAR(v.dp, (pq(s + h).p - pq(s - h).p) / (2 * h), 1e-6 * std::abs(v.dp)) << s;
    EXPECT_NEAR(v.dq, (pq(s + h).q - pq(s - h).q) / (2 * h), 1e-6 * std::abs(v.dq) + 1e-12) << s;
    EXPECT_NEAR(v.d2p, (pq(s + h).dp - pq(s - h).dp) / (2 * h), 1e-6 * std::abs(v.d2p) + 1e-12) << s;
    EXPECT_NEAR(v.d2q, (pq(s + h).dq - pq(s - h).dq) / (2 * h), 1e-6 * std::abs(v.d2q) + 1e-12) << s;
  }
}
