#include <gtest/gtest.h>

#include "ringlab/ringlaw.hpp"

using namespace ringlab;

namespace {

Measure1D two_atoms() { return Measure1D::from_atoms({{1.0, 0.5}, {2.0, 0.5}}); }

std::vector<double> uniform_grid(double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i <= n; ++i) g.push_back(hi * i / n);
  return g;
}

}  // namespace

TEST(RingRadii, examples) {
  const auto one = ring_radii(catalog::delta(1.0));
  EXPECT_DOUBLE_EQ(one.inner, 1.0);
  EXPECT_DOUBLE_EQ(one.outer, 1.0);
  const auto two = ring_radii(two_atoms());
  EXPECT_NEAR(two.inner, 1.0 / std::sqrt(0.625), 1e-12);
  EXPECT_NEAR(two.inner, 1.264911, 1e-6);
  EXPECT_NEAR(two.outer, 1.581139, 1e-6);
  const auto qc = ring_radii(catalog::quarter_circle());
  EXPECT_EQ(qc.inner, 0.0);
  EXPECT_NEAR(qc.outer, 1.0, 1e-12);
  EXPECT_THROW(ring_radii(catalog::uniform(-1.0, 1.0)), DomainError);
}

TEST(StransformPipeline, uniform_disk) {
  const auto g = uniform_grid(1.2, 240);
  const auto law = radial_density_stransform(catalog::quarter_circle(), g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] <= 1.0) {
      EXPECT_NEAR(law.density[i], 1.0 / kPi, 1e-3) << g[i];
      EXPECT_NEAR(law.cdf[i], g[i] * g[i], 1e-5) << g[i];
    } else {
      EXPECT_EQ(law.density[i], 0.0);
      EXPECT_EQ(law.cdf[i], 1.0);
    }
  }
  EXPECT_FALSE(law.collapsed);
}

TEST(StransformPipeline, collapsed_ring) {
  const auto law = radial_density_stransform(catalog::delta(1.5), uniform_grid(2.0, 20));
  EXPECT_TRUE(law.collapsed);
  EXPECT_EQ(law.inner, 1.5);
  EXPECT_EQ(ring_cdf(law, 1.49), 0.0);
  EXPECT_EQ(ring_cdf(law, 1.5), 1.0);
  EXPECT_TRUE(radial_density_girko(catalog::delta(1.5), uniform_grid(2.0, 20)).collapsed);
}

TEST(StransformPipeline, quantile_identity) {
  for (const auto& th : {catalog::quarter_circle(), catalog::uniform(1.0, 2.0), two_atoms()}) {
    const auto rr = ring_radii(th);
    const auto law = radial_density_stransform(th, uniform_grid(1.2 * rr.outer, 600));
    for (double t : {0.25, 0.5, 0.75}) EXPECT_NEAR(ring_cdf(law, radial_quantile(th, t)), t, 2e-3) << t;
    EXPECT_NEAR(radial_quantile(th, 1.0), rr.outer, 1e-9);
    EXPECT_EQ(ring_cdf(law, 0.5 * rr.inner), 0.0);
    EXPECT_NEAR(ring_cdf(law, rr.outer), 1.0, 1e-4);
  }
  // disk: F(t) = sqrt(t)
  EXPECT_NEAR(radial_quantile(catalog::quarter_circle(), 0.36), 0.6, 1e-6);
}

TEST(GirkoPipeline, potential_of_unit_atom_is_log_max) {
  const GirkoFlux f(catalog::delta(1.0));
  for (double r : {0.0, 0.3, 0.7, 1.5, 3.0}) EXPECT_NEAR(f(r).potential, std::log(std::max(r, 1.0)), 1e-8) << r;
  EXPECT_NEAR(f(0.5).flux, 0.0, 1e-8);
  EXPECT_NEAR(f(2.0).flux, 1.0, 1e-8);
}

TEST(GirkoPipeline, potential_matches_real_axis_convolution) {
  const auto th = two_atoms();
  const auto grid = mirrored(clustered_grid(0.0, 4.0, 2e-3, {}));
  const GirkoFlux f(th);
  for (double r : {0.5, 1.4}) EXPECT_NEAR(f(r).potential, girko_potential_real_axis(th, r, grid, 1e-4), 2e-3) << r;
}

TEST(GirkoPipeline, flux_is_radial_cdf_and_density_is_its_derivative) {
  const GirkoFlux f(catalog::uniform(1.0, 2.0));
  const auto law = radial_density_stransform(catalog::uniform(1.0, 2.0), std::vector<double>{1.45, 1.5});
  EXPECT_NEAR(f(1.45).flux, law.cdf[0], 1e-6);
  EXPECT_NEAR(f(1.5).flux, law.cdf[1], 1e-6);
  // C' = 2 pi r rho against a centered difference
  const double r = 1.47, h = 1e-5;
  EXPECT_NEAR((f(r + h).flux - f(r - h).flux) / (2 * h), 2 * kPi * r * f(r).density, 1e-5);
}

TEST(GirkoPipeline, disk_and_finite_difference_laplacian) {
  const auto g = uniform_grid(1.2, 120);
  const auto law = radial_density_girko(catalog::quarter_circle(), g);
  GirkoOptions fd;
  fd.laplacian = Laplacian::finite_difference;
  const auto law_fd = radial_density_girko(catalog::quarter_circle(), g, fd);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] <= 1.0) {
      EXPECT_NEAR(law.density[i], 1.0 / kPi, 5e-3) << g[i];
    } else {
      EXPECT_LE(law.density[i], 1e-3 / kPi) << g[i];
    }
    // finite differences straddle the jump at r = 1
    if (std::abs(g[i] - 1.0) > 0.02) {
      EXPECT_NEAR(law_fd.density[i], law.density[i], 1e-3) << g[i];
    }
  }
  EXPECT_NEAR(law.renormalization, 1.0, 1e-4);
  EXPECT_NEAR(law.cdf.back(), 1.0, 1e-4);
}

TEST(RingLaw, scaling_covariance) {
  const double c = 2.0;
  const auto th = catalog::uniform(1.0, 2.0);
  const auto th_c = catalog::scaled(th, c);
  const auto rr = ring_radii(th), rc = ring_radii(th_c);
  EXPECT_NEAR(rc.inner, c * rr.inner, 1e-12);
  EXPECT_NEAR(rc.outer, c * rr.outer, 1e-12);
  const std::vector<double> r{1.42, 1.46, 1.5};
  std::vector<double> cr;
  for (double x : r) cr.push_back(c * x);
  const auto a = radial_density_stransform(th, r);
  const auto b = radial_density_stransform(th_c, cr);
  const auto bg = radial_density_girko(th_c, cr);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_NEAR(b.density[i] * c * c, a.density[i], 1e-3);
    EXPECT_NEAR(bg.density[i] * c * c, a.density[i], 1e-3);
  }
}

TEST(RingLaw, shape_checks) {
  for (const auto& th : {catalog::quarter_circle(), catalog::uniform(1.0, 2.0), two_atoms()}) {
    const auto rr = ring_radii(th);
    const auto g = uniform_grid(1.2 * rr.outer, 300);
    for (const auto& law : {radial_density_stransform(th, g), radial_density_girko(th, g)}) {
      const auto sc = check_shape(law);
      EXPECT_TRUE(sc.single_ring);
      EXPECT_TRUE(sc.radii_consistent) << sc.first_positive << " " << sc.last_positive;
      EXPECT_NEAR(sc.mass, 1.0, 1e-4);
    }
  }
  // a law with a hole is caught
  RingLaw fake;
  fake.inner = 0.0;
  fake.outer = 1.0;
  fake.r_grid = uniform_grid(1.0, 10);
  fake.density = {1, 1, 1, 0, 0, 0, 0, 1, 1, 1, 1};
  fake.cdf.assign(11, 0.0);
  EXPECT_FALSE(check_shape(fake).single_ring);
}

TEST(RingLaw, cross_validation_passes_on_three_laws) {
  for (const auto& th : {catalog::quarter_circle(), catalog::uniform(1.0, 2.0), two_atoms()}) {
    const auto rr = ring_radii(th);
    const auto cv = cross_validate(th, uniform_grid(1.2 * rr.outer, 240));
    EXPECT_TRUE(cv.pass) << cv.sup_distance;
    EXPECT_LT(cv.l1_distance, 1e-3);
  }
}

TEST(RingLaw, json_round_shape) {
  const auto law = radial_density_stransform(catalog::quarter_circle(), uniform_grid(1.2, 12));
  const nlohmann::json j = law;
  EXPECT_EQ(j["pipeline"], "stransform");
  EXPECT_EQ(j["r"].size(), 13u);
  EXPECT_EQ(j["collapsed"], false);
}
