// Radii and radial density of the limit law for a few singular value laws.
#include <cstdio>
#include <vector>

#include "ringlab/ringlab.hpp"

int main() {
  using namespace ringlab;
  struct Case {
    const char* name;
    Measure1D theta;
  };
  const Case cases[] = {{"quarter circle", catalog::quarter_circle()},
                        {"uniform [1, 2]", catalog::uniform(1.0, 2.0)},
                        {"atoms 1, 2", Measure1D::from_atoms({{1.0, 0.5}, {2.0, 0.5}})},
                        {"delta 1", catalog::delta(1.0)}};
  for (const auto& c : cases) {
    const auto rr = ring_radii(c.theta);
    std::vector<double> r;
    for (int i = 0; i <= 120; ++i) r.push_back(1.2 * rr.outer * i / 120.0);
    const auto cv = cross_validate(c.theta, r);
    std::printf("%-16s a = %.6f  b = %.6f  pipelines differ by %.2e%s\n", c.name, rr.inner, rr.outer,
                cv.sup_distance, cv.stransform.collapsed ? "  (collapsed ring)" : "");
    if (cv.stransform.collapsed) continue;
    for (double t : {0.25, 0.5, 0.75})
      std::printf("    %.0f%% of the eigenvalues inside |z| = %.4f\n", 100 * t, radial_quantile(c.theta, t));
  }
}
