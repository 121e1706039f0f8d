#pragma once
// Orchestration: theory pipelines, ensemble replicas, theory-vs-simulation
// comparison, log-gas sampling, report assembly and persistence.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ringlab/error.hpp"
#include "ringlab/freeprob.hpp"
#include "ringlab/fz.hpp"
#include "ringlab/harness/config.hpp"
#include "ringlab/measures.hpp"
#include "ringlab/parallel.hpp"
#include "ringlab/ringlaw.hpp"
#include "ringlab/rmt.hpp"
#include "ringlab/rng.hpp"

namespace ringlab::harness {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// theory
// ---------------------------------------------------------------------------

struct PotentialPoint {
  double r = 0.0;
  double from_convolution = kNaN;  // real-axis free convolution, then log potential
  double from_law = kNaN;          // log R - int_r^R F(s)/s ds from the radial CDF
};

struct TheoryResult {
  RingRadii radii{0.0, 0.0};
  std::optional<RingLaw> stransform;
  std::optional<RingLaw> girko;
  std::optional<CrossValidation> crossval;
  std::optional<ShapeCheck> shape;
  std::vector<PotentialPoint> potential_check;
  std::vector<std::string> errors;
};

/// h(r) = int log max(r, |lambda|) dmu_A, from the radial CDF.
inline double law_log_potential(const RingLaw& law, double r) {
  if (law.collapsed) return std::log(std::max(r, law.outer));
  const double top = std::max(r, law.outer);
  if (r >= top) return std::log(r);
  const std::size_t m = 4000;
  const double h = (top - r) / static_cast<double>(m);
  double acc = 0.0;
  for (std::size_t k = 0; k <= m; ++k) {
    const double s = r + h * static_cast<double>(k);
    const double f = s > 0.0 ? ring_cdf(law, s) / s : 0.0;
    acc += (k == 0 || k == m) ? 0.5 * f : f;
  }
  return std::log(top) - acc * h;
}

inline TheoryResult run_theory(const RunConfig& c) {
  TheoryResult t;
  t.radii = c.radii();
  const auto r_grid = c.r_grid();
  try {
    t.stransform = radial_density_stransform(c.theta, r_grid);
  } catch (const Error& e) {
    t.errors.push_back(std::string("stransform: ") + e.what());
  }
  GirkoOptions opt;
  opt.laplacian = c.grids.laplacian;
  opt.dr_fraction = c.grids.dr;
  try {
    t.girko = radial_density_girko(c.theta, r_grid, opt);
  } catch (const Error& e) {
    t.errors.push_back(std::string("girko: ") + e.what());
  }
  if (t.stransform && t.girko) {
    t.crossval = cross_validate(*t.stransform, *t.girko, c.theta.is_atomic(), c.grids.edge_band);
    try {
      t.shape = check_shape(*t.stransform);
    } catch (const Error& e) {
      t.errors.push_back(std::string("shape: ") + e.what());
    }
  }
  const RingLaw* law = t.stransform ? &*t.stransform : (t.girko ? &*t.girko : nullptr);
  for (double r : c.grids.potential_check_r) {
    PotentialPoint p;
    p.r = r;
    try {
      const double span = 1.05 * (c.theta.support_hint().hi + r) + 0.1;
      std::vector<double> grid(2001);
      for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
      p.from_convolution = girko_potential_real_axis(c.theta, r, grid, c.grids.eta);
    } catch (const Error& e) {
      t.errors.push_back("potential check at r = " + ringlab::detail::g17(r) + ": " + e.what());
    }
    if (law) p.from_law = law_log_potential(*law, r);
    t.potential_check.push_back(p);
  }
  return t;
}

// ---------------------------------------------------------------------------
// simulation
// ---------------------------------------------------------------------------

struct ReplicaRecord {
  std::uint32_t replica = 0;
  bool ok = false;
  std::string error;
  std::vector<std::complex<double>> eigenvalues;
  double min_modulus = kNaN;
  double max_modulus = kNaN;
  double weyl_rel = kNaN;
  double trace_rel = kNaN;
  double det_rel = kNaN;
  std::optional<double> hermitize;
};

struct SimulationResult {
  std::vector<ReplicaRecord> replicas;
  std::optional<GirkoField> field;
  std::optional<DensityEstimate> density;
  std::optional<MinSingularBatch> min_singular;
  std::vector<std::string> errors;

  std::vector<std::vector<double>> moduli() const {
    std::vector<std::vector<double>> out;
    for (const auto& r : replicas) {
      if (!r.ok) continue;
      std::vector<double> m;
      m.reserve(r.eigenvalues.size());
      for (const auto& l : r.eigenvalues) m.push_back(std::abs(l));
      std::sort(m.begin(), m.end());
      out.push_back(std::move(m));
    }
    return out;
  }
};

/// Largest relative excess of an eigenvalue product over the singular value
/// product, per factor.
inline double weyl_relative(const WeylReport& w, std::size_t n) {
  double per = 0.0;
  if (w.worst_k > 0) per = w.worst_excess / static_cast<double>(w.worst_k);
  if (n > 0) per = std::max(per, w.full_product_defect / static_cast<double>(n));
  return std::expm1(per);
}

inline SimulationResult run_simulation(const RunConfig& c) {
  SimulationResult sim;
  sim.replicas.resize(c.replicas);
  std::vector<std::optional<GirkoField>> fields(c.replicas);
  const ZGrid zg = c.z_grid();
  parallel_for(c.replicas, [&](std::size_t i) {
    auto& rec = sim.replicas[i];
    rec.replica = static_cast<std::uint32_t>(i);
    try {
      const auto spec = c.ensemble.with_replica(rec.replica);
      const CMatrix a = assemble(spec);
      const auto s = analyze(a, spec, c.gate("weyl_rel").tolerance);
      rec.eigenvalues = s.eigenvalues;
      rec.min_modulus = kInf;
      rec.max_modulus = 0.0;
      double log_eig = 0.0;
      for (const auto& l : s.eigenvalues) {
        rec.min_modulus = std::min(rec.min_modulus, std::abs(l));
        rec.max_modulus = std::max(rec.max_modulus, std::abs(l));
        log_eig += std::log(std::abs(l));
      }
      const double n = static_cast<double>(spec.n);
      rec.weyl_rel = weyl_relative(s.weyl, spec.n);
      rec.trace_rel = s.trace_defect / (n * std::max(s.norm, 1e-300));
      rec.det_rel = std::isfinite(log_eig) ? s.det_defect / (n * std::max(1.0, std::abs(log_eig))) : 0.0;
      if (i < c.checks.hermitize_replicas) {
        double worst = 0.0;
        for (const auto& z : c.checks.hermitize_z) worst = std::max(worst, hermitize_defect(a, z));
        rec.hermitize = worst;
      }
      if (i == 0 && c.checks.field) fields[i] = girko_field(a, zg, c.grids.field_method, &s.eigenvalues);
      rec.ok = true;
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });
  if (!fields.empty() && fields[0]) {
    sim.field = std::move(fields[0]);
    try {
      sim.density = density_from_field(*sim.field);
    } catch (const Error& e) {
      sim.errors.push_back(std::string("field density: ") + e.what());
    }
  }
  if (!c.checks.min_singular_z.empty()) {
    try {
      sim.min_singular =
          min_singular_batch(c.ensemble, c.checks.min_singular_draws, c.checks.min_singular_z, c.checks.min_singular_delta);
    } catch (const Error& e) {
      sim.errors.push_back(std::string("min singular: ") + e.what());
    }
  }
  return sim;
}

// ---------------------------------------------------------------------------
// comparison
// ---------------------------------------------------------------------------

struct GateVerdict {
  std::string name;
  double value = kNaN;
  double tolerance = 0.0;
  Direction direction = Direction::at_most;
  std::string status = "skipped";  // pass | fail | skipped
  std::string detail;
  bool loosened = false;
};

inline GateVerdict judge(const GateSpec& g, double value, std::string detail = {}) {
  GateVerdict v{g.name, value, g.tolerance, g.direction, "fail", std::move(detail), g.loosened};
  const bool ok = g.direction == Direction::at_most ? value <= g.tolerance : value >= g.tolerance;
  if (ok) v.status = "pass";
  return v;
}

inline GateVerdict skipped(const GateSpec& g, std::string detail) {
  return {g.name, kNaN, g.tolerance, g.direction, "skipped", std::move(detail), g.loosened};
}

struct ComparisonReport {
  std::string name;
  std::string command;
  bool override_gates = false;
  double a_theory = kNaN;
  double b_theory = kNaN;
  double min_mod_empirical = kNaN;
  double max_mod_empirical = kNaN;
  double ks_radial = kNaN;
  double w1_radial = kNaN;
  double sup_density_crossval = kNaN;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::vector<GateVerdict> gates;
  std::vector<std::string> errors;

  bool pass() const {
    return std::none_of(gates.begin(), gates.end(), [](const GateVerdict& g) { return g.status == "fail"; });
  }
  GateVerdict* find(const std::string& gate) {
    for (auto& g : gates)
      if (g.name == gate) return &g;
    return nullptr;
  }
  const GateVerdict* find(const std::string& gate) const {
    for (const auto& g : gates)
      if (g.name == gate) return &g;
    return nullptr;
  }
};

/// KS and W1 between sorted moduli and the radial law of a RingLaw.
struct RadialDistances {
  double ks = 0.0;
  double w1 = 0.0;
};

inline RadialDistances radial_distances(const RingLaw& law, const std::vector<double>& sorted) {
  RadialDistances d;
  const double n = static_cast<double>(sorted.size());
  if (law.collapsed) {
    // moduli within rounding of the circle count as on it
    const double b = law.outer, band = 1e-9 * std::max(1.0, b);
    const auto below = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), b - band) - sorted.begin());
    const auto above = static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), b + band));
    d.ks = std::max(below, above) / n;
    for (double r : sorted) d.w1 += std::abs(r - b);
    d.w1 /= n;
    return d;
  }
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = ring_cdf(law, sorted[i]);
    d.ks = std::max({d.ks, std::abs(f - static_cast<double>(i + 1) / n), std::abs(f - static_cast<double>(i) / n)});
  }
  // F is piecewise linear between these breakpoints and the empirical CDF
  // is constant, so each piece integrates exactly
  std::vector<double> cuts(sorted.begin(), sorted.end());
  for (double r : law.r_grid) cuts.push_back(r);
  cuts.push_back(law.inner);
  cuts.push_back(law.outer);
  cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::size_t below = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double x0 = cuts[k], x1 = cuts[k + 1];
    while (below < sorted.size() && sorted[below] <= x0) ++below;
    const double c = static_cast<double>(below) / n;
    const double u = ring_cdf(law, x0) - c, v = ring_cdf(law, x1) - c;
    const double w = x1 - x0;
    if (u * v >= 0.0) {
      d.w1 += 0.5 * w * (std::abs(u) + std::abs(v));
    } else {
      const double t = u / (u - v);
      d.w1 += 0.5 * w * (t * std::abs(u) + (1.0 - t) * std::abs(v));
    }
  }
  return d;
}

/// True when the modulus histogram has no empty bin with at least 1% of the
/// points on each side (isolated outliers past the edges do not count).
inline bool single_ring_histogram(const std::vector<double>& sorted) {
  if (sorted.size() < 8) return true;
  const double lo = sorted.front(), hi = sorted.back();
  if (!(hi - lo > 1e-9 * std::max(1.0, hi))) return true;
  const std::size_t bins =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(sorted.size())) / 2.0)),
                              8, 60);
  std::vector<std::size_t> count(bins, 0);
  for (double r : sorted) {
    auto b = static_cast<std::size_t>((r - lo) / (hi - lo) * static_cast<double>(bins));
    count[std::min(b, bins - 1)]++;
  }
  const auto floor = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(sorted.size())));
  std::size_t left = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0 && left >= floor && sorted.size() - left >= floor) return false;
    left += count[b];
  }
  return true;
}

inline double annulus_excursion(const RingLaw& law, double lo, double hi) {
  return std::max({0.0, law.inner - lo, hi - law.outer});
}

/// Ring gates: radial KS, annulus containment of the pooled moduli, and the
/// per-replica rate of (inside the annulus and single ring). failed counts
/// replicas that produced no spectrum; they count against the rate.
inline ComparisonReport compare(const RingLaw& theory, const std::vector<std::vector<double>>& replica_moduli,
                                const std::vector<GateSpec>& gates, std::size_t failed = 0) {
  std::vector<double> pooled;
  for (const auto& m : replica_moduli) pooled.insert(pooled.end(), m.begin(), m.end());
  if (pooled.empty()) throw PreconditionError("compare: empirical input is empty");
  std::sort(pooled.begin(), pooled.end());
  auto find = [&](const char* name) -> const GateSpec& {
    for (const auto& g : gates)
      if (g.name == name) return g;
    throw PreconditionError(std::string("compare: gate '") + name + "' missing");
  };
  ComparisonReport rep;
  rep.a_theory = theory.inner;
  rep.b_theory = theory.outer;
  rep.min_mod_empirical = pooled.front();
  rep.max_mod_empirical = pooled.back();
  const auto dist = radial_distances(theory, pooled);
  rep.ks_radial = dist.ks;
  rep.w1_radial = dist.w1;
  const auto& ann = find("annulus_excursion");
  std::size_t good = 0;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& m : replica_moduli) {
    std::vector<double> s = m;
    std::sort(s.begin(), s.end());
    const double exc = s.empty() ? kInf : annulus_excursion(theory, s.front(), s.back());
    const bool single = single_ring_histogram(s);
    const bool ok = exc <= ann.tolerance && single;
    if (ok) ++good;
    per.push_back({{"excursion", exc}, {"single_ring", single}, {"pass", ok}});
  }
  rep.diagnostics["replica_ring_checks"] = per;
  const double total = static_cast<double>(replica_moduli.size() + failed);
  rep.gates.push_back(judge(find("ks_radial"), dist.ks));
  rep.gates.push_back(judge(ann, annulus_excursion(theory, pooled.front(), pooled.back()), "pooled moduli"));
  rep.gates.push_back(judge(find("ring_pass_rate"), static_cast<double>(good) / total,
                            std::to_string(good) + " of " + std::to_string(replica_moduli.size() + failed)));
  return rep;
}

// ---------------------------------------------------------------------------
// log-gas sampling
// ---------------------------------------------------------------------------

struct FzSampleResult {
  Potential potential = Potential::linear();
  std::optional<EquilibriumMeasure> equilibrium;
  std::optional<LogGasState> state;
  std::vector<double> kept;  // squared points of every kept state, pooled
  double ks = kNaN;           // pooled kept states vs the equilibrium measure
  double stationarity = kNaN;  // first half of the kept states vs the second
  std::vector<std::string> errors;
};

inline FzSampleResult run_fz_sample(const RunConfig& c, const LogGasState* resume = nullptr) {
  FzSampleResult out;
  if (!c.theta_spec.potential) throw PreconditionError("fz-sample: theta.kind must be \"fz\"");
  out.potential = *c.theta_spec.potential;
  if (resume && resume->sweeps_done >= c.fz.sweeps)
    throw PreconditionError("fz-sample: checkpoint already has " + std::to_string(resume->sweeps_done) +
                            " sweeps; set fz.sweeps above that to continue the chain");
  try {
    out.equilibrium = c.equilibrium ? *c.equilibrium : equilibrium_measure(out.potential, c.fz.cells);
  } catch (const Error& e) {
    out.errors.push_back(std::string("equilibrium: ") + e.what());
  }
  std::vector<std::vector<double>> states;
  try {
    KeyedRng rng(c.ensemble.seed, 0, StreamTag::log_gas);
    ChainOptions opt;
    opt.burn_in_sweeps = c.fz.burn_in;
    opt.thin = c.fz.thin;
    out.state = fz_mcmc(out.potential, c.fz.n, c.fz.sweeps, rng, opt,
                        [&](std::uint64_t, const std::vector<double>& x) { states.push_back(x); }, resume);
  } catch (const Error& e) {
    out.errors.push_back(std::string("chain: ") + e.what());
  }
  for (const auto& s : states) out.kept.insert(out.kept.end(), s.begin(), s.end());
  if (out.equilibrium && !out.kept.empty()) out.ks = ks_distance(Measure1D::from_samples(out.kept), out.equilibrium->squared);
  if (states.size() >= 2) {
    std::vector<double> first, second;
    for (std::size_t k = 0; k < states.size(); ++k) {
      auto& dst = k < states.size() / 2 ? first : second;
      dst.insert(dst.end(), states[k].begin(), states[k].end());
    }
    out.stationarity = ks_distance(Measure1D::from_samples(first), Measure1D::from_samples(second));
  }
  return out;
}

// ---------------------------------------------------------------------------
// report assembly
// ---------------------------------------------------------------------------

inline std::vector<double> all_of(const SimulationResult& sim, double ReplicaRecord::*field) {
  std::vector<double> v;
  for (const auto& r : sim.replicas)
    if (r.ok) v.push_back(r.*field);
  return v;
}

inline double max_or_nan(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return *std::max_element(v.begin(), v.end());
}

/// One report for any subcommand. Gates that a subcommand does not evaluate
/// are listed as skipped, so every configured gate appears exactly once.
inline ComparisonReport build_report(const RunConfig& c, const std::string& command, const TheoryResult* theory,
                                     const SimulationResult* sim, const FzSampleResult* fz) {
  ComparisonReport rep;
  const bool ring_model = c.ensemble.model != Model::additive;
  std::optional<ComparisonReport> cmp;
  if (theory && sim && ring_model) {
    const RingLaw* law = theory->stransform ? &*theory->stransform : (theory->girko ? &*theory->girko : nullptr);
    const auto mod = sim->moduli();
    if (!law) {
      rep.errors.push_back("compare: no theory law");
    } else if (mod.empty()) {
      rep.errors.push_back("compare: no replica produced a spectrum");
    } else {
      cmp = compare(*law, mod, c.gates, sim->replicas.size() - mod.size());
      rep = *cmp;
    }
  }
  rep.name = c.name;
  rep.command = command;
  rep.override_gates = c.override_gates;
  auto& diag = rep.diagnostics;
  const auto rr = c.radii();
  rep.a_theory = theory && theory->stransform ? theory->stransform->inner : rr.inner;
  rep.b_theory = theory && theory->stransform ? theory->stransform->outer : rr.outer;

  if (theory) {
    for (const auto& e : theory->errors) rep.errors.push_back("theory: " + e);
    if (theory->crossval) {
      rep.sup_density_crossval = theory->crossval->sup_distance;
      diag["crossval_l1"] = theory->crossval->l1_distance;
    }
    if (theory->stransform) diag["stransform_renormalization"] = theory->stransform->renormalization;
    if (theory->girko) diag["girko_renormalization"] = theory->girko->renormalization;
    diag["collapsed"] = theory->stransform && theory->stransform->collapsed;
    if (theory->shape)
      diag["shape"] = {{"single_ring", theory->shape->single_ring}, {"radii_consistent", theory->shape->radii_consistent}};
    if (!theory->potential_check.empty()) {
      auto& pc = diag["potential_check"];
      pc = nlohmann::json::array();
      for (const auto& p : theory->potential_check)
        pc.push_back({{"r", p.r}, {"from_convolution", p.from_convolution}, {"from_law", p.from_law}});
    }
  }
  if (sim) {
    for (const auto& e : sim->errors) rep.errors.push_back("simulation: " + e);
    std::size_t failed = 0;
    double lo = kInf, hi = 0.0;
    for (const auto& r : sim->replicas) {
      if (!r.ok) {
        ++failed;
        rep.errors.push_back("replica " + std::to_string(r.replica) + ": " + r.error);
        continue;
      }
      lo = std::min(lo, r.min_modulus);
      hi = std::max(hi, r.max_modulus);
    }
    if (hi > 0.0) {
      rep.min_mod_empirical = lo;
      rep.max_mod_empirical = hi;
    }
    diag["replicas"] = sim->replicas.size();
    diag["replica_failures"] = failed;
    diag["weyl_pass"] = max_or_nan(all_of(*sim, &ReplicaRecord::weyl_rel)) <= c.gate("weyl_rel").tolerance;
    std::vector<double> herm;
    for (const auto& r : sim->replicas)
      if (r.hermitize) herm.push_back(*r.hermitize);
    if (!herm.empty()) diag["hermitize_pass"] = max_or_nan(herm) <= c.gate("hermitize").tolerance;
    if (sim->density) {
      diag["girko_mass_defect"] = std::abs(sim->density->raw_mass - 1.0);
      diag["girko_excluded_points"] = sim->field->excluded.size();
    }
    if (sim->min_singular) {
      const auto& m = *sim->min_singular;
      auto& ms = diag["min_singular_stats"];
      ms["draws"] = m.matrices;
      ms["delta"] = c.checks.min_singular_delta;
      for (std::size_t k = 0; k < m.z.size(); ++k)
        ms["points"].push_back({{"z", {m.z[k].real(), m.z[k].imag()}},
                                {"flag_frequency", m.flag_frequency[k]},
                                {"smallest", m.smallest[k]}});
    }
  }
  if (fz) {
    for (const auto& e : fz->errors) rep.errors.push_back("fz: " + e);
    diag["fz_ks"] = fz->ks;
    diag["fz_stationarity"] = fz->stationarity;
    if (fz->state) {
      diag["fz_acceptance"] = fz->state->acceptance_rate;
      diag["fz_step"] = fz->state->step_scale;
    }
    if (fz->equilibrium)
      diag["fz_support"] = {fz->equilibrium->lower, fz->equilibrium->upper};
  }

  std::vector<GateVerdict> verdicts;
  for (const auto& g : c.gates) {
    if (cmp) {
      if (const auto* v = cmp->find(g.name)) {
        verdicts.push_back(*v);
        continue;
      }
    }
    const std::string& n = g.name;
    if (n == "crossval_sup") {
      if (!theory) verdicts.push_back(skipped(g, "theory not run"));
      else if (!theory->crossval) verdicts.push_back(judge(g, kInf, "a pipeline failed"));
      else verdicts.push_back(judge(g, theory->crossval->sup_distance));
    } else if (n == "ks_radial" || n == "annulus_excursion" || n == "ring_pass_rate") {
      if (!theory || !sim) verdicts.push_back(skipped(g, "needs theory and simulation"));
      else if (!ring_model) verdicts.push_back(skipped(g, "no ring-law prediction for the additive model"));
      else verdicts.push_back(judge(g, g.direction == Direction::at_most ? kInf : 0.0, "comparison not possible"));
    } else if (n == "weyl_rel" || n == "identity_rel") {
      if (!sim) {
        verdicts.push_back(skipped(g, "simulation not run"));
        continue;
      }
      double v = n == "weyl_rel" ? max_or_nan(all_of(*sim, &ReplicaRecord::weyl_rel))
                                 : std::max(max_or_nan(all_of(*sim, &ReplicaRecord::trace_rel)),
                                            max_or_nan(all_of(*sim, &ReplicaRecord::det_rel)));
      if (std::isnan(v)) verdicts.push_back(judge(g, kInf, "no replica produced a spectrum"));
      else verdicts.push_back(judge(g, v, "max over replicas"));
    } else if (n == "hermitize") {
      std::vector<double> herm;
      if (sim)
        for (const auto& r : sim->replicas)
          if (r.hermitize) herm.push_back(*r.hermitize);
      if (herm.empty()) verdicts.push_back(skipped(g, "no hermitized replica"));
      else verdicts.push_back(judge(g, max_or_nan(herm), std::to_string(herm.size()) + " replica(s)"));
    } else if (n == "girko_mass_defect") {
      if (!sim || !sim->field) verdicts.push_back(skipped(g, "no Girko field"));
      else if (!sim->density) verdicts.push_back(judge(g, kInf, "density from field failed"));
      else verdicts.push_back(judge(g, std::abs(sim->density->raw_mass - 1.0), "replica 0"));
    } else if (n == "min_singular_rate") {
      if (!sim || !sim->min_singular) verdicts.push_back(skipped(g, "not configured"));
      else
        verdicts.push_back(judge(g, max_or_nan(sim->min_singular->flag_frequency),
                                 "max over " + std::to_string(sim->min_singular->z.size()) + " points"));
    } else if (n == "fz_ks" || n == "fz_stationarity") {
      if (!fz) {
        verdicts.push_back(skipped(g, "log-gas chain not run"));
        continue;
      }
      const double v = n == "fz_ks" ? fz->ks : fz->stationarity;
      if (std::isnan(v)) verdicts.push_back(judge(g, kInf, "no kept states"));
      else verdicts.push_back(judge(g, v));
    } else {
      verdicts.push_back(skipped(g, "unknown gate"));
    }
  }
  rep.gates = std::move(verdicts);
  return rep;
}

inline nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["command"] = r.command;
  j["override"] = r.override_gates;
  j["pass"] = r.pass();
  j["radii"] = {{"a_theory", number_or_null(r.a_theory)},
                {"b_theory", number_or_null(r.b_theory)},
                {"min_mod_empirical", number_or_null(r.min_mod_empirical)},
                {"max_mod_empirical", number_or_null(r.max_mod_empirical)}};
  j["distances"] = {{"ks_radial", number_or_null(r.ks_radial)},
                    {"w1_radial", number_or_null(r.w1_radial)},
                    {"sup_density_crossval", number_or_null(r.sup_density_crossval)}};
  j["diagnostics"] = r.diagnostics;
  j["gates"] = nlohmann::json::array();
  for (const auto& g : r.gates) {
    nlohmann::json e{{"name", g.name},
                     {"value", number_or_null(g.value)},
                     {"tolerance", g.tolerance},
                     {"direction", to_string(g.direction)},
                     {"status", g.status}};
    if (std::isinf(g.value)) e["value"] = g.value > 0 ? "inf" : "-inf";
    if (!g.detail.empty()) e["detail"] = g.detail;
    if (g.loosened) e["loosened"] = true;
    j["gates"].push_back(e);
  }
  j["errors"] = r.errors;
  return j;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

inline std::string ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir + ": " + ec.message());
  return dir;
}

inline void write_text(const std::string& path, const std::string& text) {
  auto out = ringlab::detail::open_for_write(path);
  out << text;
  if (!out) throw Error("write failed: " + path);
}

inline void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline void write_law_csv(const std::string& path, const RingLaw& law) {
  auto out = ringlab::detail::open_for_write(path);
  out << "r,density,cdf\n";
  for (std::size_t i = 0; i < law.r_grid.size(); ++i)
    out << ringlab::detail::g17(law.r_grid[i]) << ',' << ringlab::detail::g17(law.density[i]) << ',' << ringlab::detail::g17(law.cdf[i]) << '\n';
}

inline void write_theory(const std::string& dir, const TheoryResult& t) {
  ensure_dir(dir);
  if (t.stransform) write_law_csv(dir + "/theory_stransform.csv", *t.stransform);
  if (t.girko) write_law_csv(dir + "/theory_girko.csv", *t.girko);
  nlohmann::json j;
  j["radii"] = {{"inner", t.radii.inner}, {"outer", t.radii.outer}};
  if (t.crossval)
    j["crossval"] = {{"sup", t.crossval->sup_distance},
                     {"l1", t.crossval->l1_distance},
                     {"threshold", t.crossval->threshold},
                     {"pass", t.crossval->pass}};
  j["collapsed"] = t.stransform && t.stransform->collapsed;
  j["errors"] = t.errors;
  write_json(dir + "/theory.json", j);
}

inline void write_simulation(const std::string& dir, const SimulationResult& s) {
  ensure_dir(dir);
  {
    auto out = ringlab::detail::open_for_write(dir + "/eigenvalues.csv");
    out << "replica,re,im\n";
    for (const auto& r : s.replicas)
      for (const auto& l : r.eigenvalues)
        out << r.replica << ',' << ringlab::detail::g17(l.real()) << ',' << ringlab::detail::g17(l.imag()) << '\n';
  }
  {
    std::vector<double> pooled;
    for (const auto& m : s.moduli()) pooled.insert(pooled.end(), m.begin(), m.end());
    std::sort(pooled.begin(), pooled.end());
    auto out = ringlab::detail::open_for_write(dir + "/radial_empirical.csv");
    out << "r\n";
    for (double r : pooled) out << ringlab::detail::g17(r) << '\n';
  }
  {
    auto out = ringlab::detail::open_for_write(dir + "/replicas.csv");
    out << "replica,status,min_modulus,max_modulus,weyl_rel,trace_rel,det_rel,hermitize,error\n";
    for (const auto& r : s.replicas) {
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      out << r.replica << ',' << (r.ok ? "ok" : "failed") << ',' << ringlab::detail::g17(r.min_modulus) << ','
          << ringlab::detail::g17(r.max_modulus) << ',' << ringlab::detail::g17(r.weyl_rel) << ',' << ringlab::detail::g17(r.trace_rel) << ','
          << ringlab::detail::g17(r.det_rel) << ',' << (r.hermitize ? ringlab::detail::g17(*r.hermitize) : "") << ',' << err << '\n';
    }
  }
  if (s.field) write_field_csv(dir + "/girko_field.csv", *s.field);
  if (s.density) {
    auto out = ringlab::detail::open_for_write(dir + "/girko_density.csv");
    out << "re,im,density\n";
    const auto& g = s.density->grid;
    for (std::size_t i = 0; i < g.re.size(); ++i)
      for (std::size_t j = 0; j < g.im.size(); ++j)
        out << ringlab::detail::g17(g.re[i]) << ',' << ringlab::detail::g17(g.im[j]) << ','
            << ringlab::detail::g17(s.density->density(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
  }
}

inline void write_fz(const std::string& dir, const FzSampleResult& f) {
  ensure_dir(dir);
  if (f.state) {
    write_json(dir + "/fz_checkpoint.json", nlohmann::json(*f.state));
    auto out = ringlab::detail::open_for_write(dir + "/fz_final_state.csv");
    out << "x\n";
    std::vector<double> x = f.state->x;
    std::sort(x.begin(), x.end());
    for (double v : x) out << ringlab::detail::g17(v) << '\n';
  }
  if (f.equilibrium) {
    auto out = ringlab::detail::open_for_write(dir + "/fz_equilibrium.csv");
    out << "x,density\n";
    const auto& e = *f.equilibrium;
    const std::size_t m = 400;
    for (std::size_t k = 1; k < m; ++k) {
      const double x = e.lower + (e.upper - e.lower) * static_cast<double>(k) / static_cast<double>(m);
      out << ringlab::detail::g17(x) << ',' << ringlab::detail::g17(e.density(x)) << '\n';
    }
  }
}

inline void write_gates_csv(const std::string& path, const ComparisonReport& r) {
  auto out = ringlab::detail::open_for_write(path);
  out << "gate,value,tolerance,direction,status\n";
  for (const auto& g : r.gates)
    out << g.name << ',' << ringlab::detail::g17(g.value) << ',' << ringlab::detail::g17(g.tolerance) << ','
        << (g.direction == Direction::at_most ? "at_most" : "at_least") << ',' << g.status << '\n';
}

inline void write_report(const std::string& dir, const ComparisonReport& r) {
  ensure_dir(dir);
  write_json(dir + "/report.json", to_json(r));
  write_gates_csv(dir + "/gates.csv", r);
}

}  // namespace ringlab::harness
