#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "ringlab/ringlab.hpp"

using namespace ringlab;
using namespace ringlab::harness;

namespace {

const char* kSmall = R"(
spec_version = 1
name = "small"
output_dir = "OUT"
replicas = 3

[theta]
kind = "uniform"
lo = 1.0
hi = 2.0

[ensemble]
n = 40
seed = 9

[grids]
r_points = 61
z_points = 9
)";

RunConfig small_config(const std::string& out, const std::string& extra = "") {
  std::string text = kSmall;
  text.replace(text.find("OUT"), 3, out);
  return config_from_json(parse_toml_text(text + extra));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_dir(const std::string& leaf) {
  auto p = std::filesystem::temp_directory_path() / ("ringlab_test_" + leaf);
  std::filesystem::remove_all(p);
  return p.string();
}

RingLaw disk_law() {
  std::vector<double> r(201);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = 1.2 * static_cast<double>(i) / 200.0;
  return radial_density_stransform(catalog::quarter_circle(), r);
}

}  // namespace

TEST(Config, DefaultsAndValidation) {
  const auto c = small_config("x");
  EXPECT_EQ(c.replicas, 3u);
  EXPECT_EQ(c.ensemble.n, 40u);
  EXPECT_EQ(c.gates.size(), default_gates(false).size());
  EXPECT_DOUBLE_EQ(c.gate("crossval_sup").tolerance, 5e-3);
  EXPECT_DOUBLE_EQ(c.gate("ring_pass_rate").tolerance, 0.95);
  EXPECT_THROW(small_config("x", "[grids]\nbogus = 1\n"), Error);  // duplicate table
  EXPECT_THROW(config_from_json(parse_toml_text("spec_version = 2\n[theta]\nkind = \"delta\"\nat = 1.0\n")),
               PreconditionError);
  EXPECT_THROW(config_from_json(parse_toml_text("spec_version = 1\nrogue = 3\n[theta]\nkind = \"delta\"\nat = 1.0\n")),
               PreconditionError);
  EXPECT_THROW(parse_toml_text("spec_version = = 1"), PreconditionError);
}

TEST(Config, AtomicThetaGetsTheWiderCrossvalDefault) {
  const auto c = config_from_json(parse_toml_text(
      "spec_version = 1\n[theta]\nkind = \"atoms\"\natoms = [[1.0, 0.5], [2.0, 0.5]]\n"));
  EXPECT_DOUBLE_EQ(c.gate("crossval_sup").tolerance, 1e-2);
  EXPECT_NEAR(c.radii().inner, 1.264911064067352, 1e-12);
  EXPECT_NEAR(c.radii().outer, 1.5811388300841898, 1e-12);
}

TEST(Config, GatesTightenFreelyButLoosenOnlyWithOverride) {
  const auto tight = small_config("x", "[gates]\nks_radial = 0.01\nring_pass_rate = 0.99\n");
  EXPECT_DOUBLE_EQ(tight.gate("ks_radial").tolerance, 0.01);
  EXPECT_FALSE(tight.gate("ks_radial").loosened);
  EXPECT_THROW(small_config("x", "[gates]\nks_radial = 0.2\n"), PreconditionError);
  EXPECT_THROW(small_config("x", "[gates]\nring_pass_rate = 0.5\n"), PreconditionError);
  EXPECT_THROW(small_config("x", "[gates]\nno_such_gate = 0.5\n"), PreconditionError);
  EXPECT_THROW(small_config("x", "[gates]\nks_radial = -1.0\n"), PreconditionError);

  std::string text = kSmall;
  text.replace(text.find("OUT"), 3, "x");
  text = "override = true\n" + text + "[gates]\nks_radial = 0.2\n";
  const auto loose = config_from_json(parse_toml_text(text));
  EXPECT_TRUE(loose.gate("ks_radial").loosened);
  const auto rep = build_report(loose, "theory", nullptr, nullptr, nullptr);
  EXPECT_TRUE(rep.override_gates);
  EXPECT_TRUE(rep.find("ks_radial")->loosened);
  EXPECT_TRUE(to_json(rep)["override"].get<bool>());
}

TEST(Config, ResolvedJsonRoundTrips) {
  const auto c = small_config("x", "[checks]\nmin_singular_z = [[0.1, 0.2]]\n");
  const auto j = resolved_json(c);
  const auto back = config_from_json(j);
  EXPECT_EQ(resolved_json(back), j);
  EXPECT_EQ(back.checks.min_singular_z.size(), 1u);
}

TEST(Config, FzThetaIsTheInducedSingularValueLaw) {
  const auto c = config_from_json(parse_toml_text(
      "spec_version = 1\n[theta]\nkind = \"fz\"\npotential = \"linear\"\n[ensemble]\nn = 10\n"));
  ASSERT_TRUE(c.equilibrium.has_value());
  EXPECT_EQ(c.ensemble.t_source.kind, TSource::Kind::fz);
  // MP(1) squared, so Theta is the quarter circle: radii (0, 1)
  EXPECT_NEAR(c.radii().outer, 1.0, 1e-6);
  EXPECT_EQ(c.radii().inner, 0.0);
}

TEST(RadialDistances, HandOracles) {
  const auto law = disk_law();
  // all mass at r = 1/2 against F(r) = r^2:
  // KS = max(1/4, 3/4); W1 = int_0^.5 r^2 + int_.5^1 (1 - r^2) = 1/4
  const auto d = radial_distances(law, std::vector<double>(10, 0.5));
  EXPECT_NEAR(d.ks, 0.75, 2e-5);
  EXPECT_NEAR(d.w1, 0.25, 2e-5);
  // quantile points sqrt((i - 1/2)/N): KS = 1/(2N)
  std::vector<double> q;
  for (int i = 1; i <= 1000; ++i) q.push_back(std::sqrt((i - 0.5) / 1000.0));
  EXPECT_NEAR(radial_distances(law, q).ks, 0.5 / 1000.0, 1e-5);
  EXPECT_LT(radial_distances(law, q).w1, 1e-3);
}

TEST(RadialDistances, CollapsedLaw) {
  std::vector<double> r{0.5, 1.0, 1.5};
  const auto law = radial_density_stransform(catalog::delta(1.0), r);
  ASSERT_TRUE(law.collapsed);
  const auto d = radial_distances(law, {0.9, 1.0, 1.0 + 1e-14, 1.2});
  EXPECT_DOUBLE_EQ(d.ks, 0.25);
  EXPECT_NEAR(d.w1, (0.1 + 0.2) / 4.0, 1e-12);
}

TEST(LawPotential, DiskOracle) {
  const auto law = disk_law();
  for (double r : {0.2, 0.5, 0.9}) EXPECT_NEAR(law_log_potential(law, r), 0.5 * (r * r - 1.0), 1e-5) << r;
  EXPECT_NEAR(law_log_potential(law, 1.1), std::log(1.1), 1e-5);
}

TEST(SingleRing, Histogram) {
  std::vector<double> one, two;
  for (int i = 0; i < 1000; ++i) {
    one.push_back(1.0 + i / 1000.0);
    two.push_back(i < 500 ? 1.0 + i / 2000.0 : 2.0 + i / 2000.0);
  }
  EXPECT_TRUE(single_ring_histogram(one));
  EXPECT_FALSE(single_ring_histogram(two));
  auto outlier = one;
  outlier.insert(outlier.begin(), 0.2);  // one stray point is not a second ring
  EXPECT_TRUE(single_ring_histogram(outlier));
}

TEST(Compare, EmptyInputIsAPreconditionError) {
  const auto c = small_config("x");
  EXPECT_THROW(compare(disk_law(), {}, c.gates), PreconditionError);
  EXPECT_THROW(compare(disk_law(), {{}, {}}, c.gates), PreconditionError);
}

TEST(Compare, MismatchedThetaFailsTheRadiiGate) {
  const auto c = small_config("x");
  std::vector<double> r{0.5, 1.0, 1.5};
  const auto ring = radial_density_stransform(catalog::delta(1.0), r);
  std::vector<double> disk;
  for (int i = 1; i <= 400; ++i) disk.push_back(std::sqrt((i - 0.5) / 400.0));
  const auto rep = compare(ring, {disk}, c.gates);
  EXPECT_EQ(rep.find("annulus_excursion")->status, "fail");
  EXPECT_EQ(rep.find("ring_pass_rate")->status, "fail");
  const auto ok = compare(disk_law(), {disk}, c.gates);
  EXPECT_EQ(ok.find("ks_radial")->status, "pass");
  EXPECT_EQ(ok.find("annulus_excursion")->status, "pass");
}

TEST(Compare, FailedReplicasCountAgainstThePassRate) {
  const auto c = small_config("x");
  std::vector<double> disk;
  for (int i = 1; i <= 400; ++i) disk.push_back(std::sqrt((i - 0.5) / 400.0));
  const auto rep = compare(disk_law(), {disk, disk, disk}, c.gates, 1);
  EXPECT_DOUBLE_EQ(rep.find("ring_pass_rate")->value, 0.75);
}

TEST(Report, EveryGateExactlyOncePerCommand) {
  const auto c = small_config("x");
  const auto t = run_theory(c);
  const auto s = run_simulation(c);
  for (const auto& [name, th, si] : std::vector<std::tuple<std::string, const TheoryResult*, const SimulationResult*>>{
           {"theory", &t, nullptr}, {"simulate", nullptr, &s}, {"compare", &t, &s}}) {
    const auto rep = build_report(c, name, th, si, nullptr);
    std::multiset<std::string> seen;
    for (const auto& g : rep.gates) seen.insert(g.name);
    for (const auto& g : c.gates) EXPECT_EQ(seen.count(g.name), 1u) << name << " " << g.name;
    EXPECT_EQ(rep.gates.size(), c.gates.size());
    for (const auto& g : rep.gates)
      if (g.status != "skipped") {
        EXPECT_FALSE(std::isnan(g.value)) << g.name;
      }
  }
}

TEST(Simulation, ReplicaFailureIsRecordedNotThrown) {
  auto c = small_config("x");
  c.ensemble.t_source = TSource::from_values({1.0, 2.0});  // wrong length for n = 40
  SimulationResult s;
  ASSERT_NO_THROW(s = run_simulation(c));
  ASSERT_EQ(s.replicas.size(), 3u);
  for (const auto& r : s.replicas) {
    EXPECT_FALSE(r.ok);
    EXPECT_NE(r.error.find("explicit T"), std::string::npos);
  }
  const auto t = run_theory(c);
  const auto rep = build_report(c, "compare", &t, &s, nullptr);
  EXPECT_FALSE(rep.pass());
  EXPECT_EQ(rep.errors.size(), 4u);  // three replicas plus the comparison
}

TEST(Simulation, UnitaryIdentityTGivesUnitModuli) {
  auto c = config_from_json(parse_toml_text(
      "spec_version = 1\nreplicas = 2\n[theta]\nkind = \"delta\"\nat = 1.0\n[ensemble]\nn = 60\nseed = 4\n"));
  const auto s = run_simulation(c);
  for (const auto& r : s.replicas) {
    ASSERT_TRUE(r.ok);
    EXPECT_NEAR(r.min_modulus, 1.0, 1e-10);
    EXPECT_NEAR(r.max_modulus, 1.0, 1e-10);
  }
  const auto t = run_theory(c);
  const auto rep = build_report(c, "compare", &t, &s, nullptr);
  EXPECT_TRUE(rep.pass()) << to_json(rep).dump(2);
}

TEST(Commands, RerunIsByteIdentical) {
  const auto d1 = temp_dir("det1"), d2 = temp_dir("det2");
  auto c = small_config(d1);
  const auto r1 = run_command("compare", c);
  c.output_dir = d2;
  const auto r2 = run_command("compare", c);
  EXPECT_GE(r1.plots.size(), 3u);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(d1)) {
    const auto name = e.path().filename().string();
    if (name == "config.json") continue;  // records its own output_dir
    ++files;
    EXPECT_EQ(slurp(e.path().string()), slurp(d2 + "/" + name)) << name;
  }
  EXPECT_GE(files, 12u);
  for (const char* svg : {"eigenvalues.svg", "radial_density.svg", "girko_field.svg"})
    EXPECT_TRUE(std::filesystem::exists(d1 + "/" + svg)) << svg;
}

TEST(Commands, CsvHeaders) {
  const auto d = temp_dir("csv");
  run_command("compare", small_config(d));
  auto first_line = [&](const char* f) {
    std::ifstream in(d + "/" + f);
    std::string line;
    std::getline(in, line);
    return line;
  };
  EXPECT_EQ(first_line("theory_stransform.csv"), "r,density,cdf");
  EXPECT_EQ(first_line("eigenvalues.csv"), "replica,re,im");
  EXPECT_EQ(first_line("radial_empirical.csv"), "r");
  EXPECT_EQ(first_line("replicas.csv"), "replica,status,min_modulus,max_modulus,weyl_rel,trace_rel,det_rel,hermitize,error");
  EXPECT_EQ(first_line("girko_field.csv"), "re,im,h");
  EXPECT_EQ(first_line("gates.csv"), "gate,value,tolerance,direction,status");
  EXPECT_EQ(slurp(d + "/gates.csv").find('\r'), std::string::npos);
}

TEST(Plots, CollapsedRingDrawsOneCircle) {
  auto count = [](const std::string& s, const std::string& what) {
    std::size_t n = 0;
    for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
    return n;
  };
  const auto delta = config_from_json(parse_toml_text("spec_version = 1\n[theta]\nkind = \"delta\"\nat = 1.0\n"));
  const auto t = run_theory(delta);
  EXPECT_EQ(count(eigenvalue_svg(delta, &t, nullptr), "<circle"), 1u);
  const auto two = config_from_json(
      parse_toml_text("spec_version = 1\n[theta]\nkind = \"atoms\"\natoms = [[1.0, 0.5], [2.0, 0.5]]\n"));
  const auto t2 = run_theory(two);
  EXPECT_EQ(count(eigenvalue_svg(two, &t2, nullptr), "<circle"), 2u);
}

TEST(Plots, UnwritableDirectoryNamesThePath) {
  auto c = small_config("/proc/ringlab_no_such_dir");
  try {
    emit_plots(c, c.output_dir, nullptr, nullptr);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/proc/ringlab_no_such_dir"), std::string::npos);
  }
}

TEST(FzSample, ShortChainReport) {
  auto c = config_from_json(parse_toml_text(
      "spec_version = 1\n[theta]\nkind = \"fz\"\npotential = \"linear\"\n[ensemble]\nn = 10\nseed = 3\n"
      "[fz]\nn = 60\nsweeps = 1100\nburn_in = 300\nthin = 5\n"));
  const auto f = run_fz_sample(c);
  ASSERT_TRUE(f.state.has_value());
  EXPECT_EQ(f.kept.size(), 60u * 160u);
  EXPECT_LT(f.ks, 0.1);
  EXPECT_LT(f.stationarity, 0.1);
  // resuming from the final state adds sweeps without redoing the old ones
  auto c2 = c;
  c2.fz.sweeps = 1200;
  const auto g = run_fz_sample(c2, &*f.state);
  EXPECT_EQ(g.state->sweeps_done, 1200u);
  EXPECT_EQ(g.kept.size(), 60u * 20u);
}
