// Metropolis chain for V(x) = x at n = 100 against its equilibrium measure.
#include <cstdio>
#include <vector>

#include "ringlab/ringlab.hpp"

int main() {
  using namespace ringlab;
  const auto v = Potential::linear();
  const auto eq = equilibrium_measure(v);
  std::printf("support [%.4f, %.4f]%s\n", eq.lower, eq.upper, eq.hard_edge ? ", hard edge at 0" : "");
  KeyedRng rng(5, 0, StreamTag::log_gas);
  std::vector<double> pooled;
  ChainOptions opt;
  opt.thin = 5;
  const auto st = fz_mcmc(v, 100, 1500, rng, opt,
                          [&](std::uint64_t, const std::vector<double>& x) { pooled.insert(pooled.end(), x.begin(), x.end()); });
  std::printf("acceptance %.2f, step %.4f\n", st.acceptance_rate, st.step_scale);
  std::printf("KS to the equilibrium measure %.4f over %zu points\n",
              ks_distance(Measure1D::from_samples(pooled), eq.squared), pooled.size());
}
