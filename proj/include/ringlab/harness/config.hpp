#pragma once
// Experiment configuration. TOML is the authoring format; it is converted to
// JSON on load so both formats go through one parser.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "ringlab/error.hpp"
#include "ringlab/fz.hpp"
#include "ringlab/measures.hpp"
#include "ringlab/rmt.hpp"
#include "ringlab/ringlaw.hpp"

namespace ringlab::harness {

inline constexpr int kSpecVersion = 1;

enum class Direction { at_most, at_least };

inline const char* to_string(Direction d) { return d == Direction::at_most ? "<=" : ">="; }

struct GateSpec {
  std::string name;
  double tolerance = 0.0;
  Direction direction = Direction::at_most;
  bool loosened = false;  // only possible with override = true
};

/// Gate defaults. crossval_sup depends on whether theta is atomic.
inline std::vector<GateSpec> default_gates(bool atomic_theta) {
  return {
      {"crossval_sup", atomic_theta ? 1e-2 : 5e-3, Direction::at_most},
      {"ks_radial", 0.05, Direction::at_most},
      {"annulus_excursion", 0.1, Direction::at_most},
      {"ring_pass_rate", 0.95, Direction::at_least},
      {"weyl_rel", 1e-8, Direction::at_most},
      {"identity_rel", 1e-8, Direction::at_most},
      {"hermitize", 1e-10, Direction::at_most},
      {"girko_mass_defect", 0.05, Direction::at_most},
      {"min_singular_rate", 0.01, Direction::at_most},
      {"fz_ks", 0.08, Direction::at_most},
      {"fz_stationarity", 0.05, Direction::at_most},
  };
}

/// What theta is and how it was specified (kept for the resolved config).
struct ThetaSpec {
  std::string kind;  // atoms | grid | quarter_circle | uniform | delta | fz
  nlohmann::json source;
  std::optional<Potential> potential;  // kind == fz
};

struct Grids {
  std::size_t r_points = 241;
  std::optional<double> r_max;  // default 1.2 * outer radius
  std::size_t z_points = 13;
  std::optional<double> z_half_width;  // default 1.25 * outer radius
  ComplexPoint z_center = 0.0;
  FieldMethod field_method = FieldMethod::determinant;
  double eta = 1e-4;
  double dr = 1e-3;  // finite-difference step, fraction of the outer radius
  Laplacian laplacian = Laplacian::analytic;
  double edge_band = 0.0;
  std::vector<double> potential_check_r;  // radii for the real-axis h(r) check
};

struct Checks {
  std::size_t hermitize_replicas = 1;
  std::vector<ComplexPoint> hermitize_z{{0.5, 0.25}};
  bool field = true;  // Girko field on replica 0
  std::vector<ComplexPoint> min_singular_z;  // empty: diagnostic not run
  double min_singular_delta = 3.0;
  std::size_t min_singular_draws = 200;
};

struct FzRun {
  std::size_t n = 200;
  std::size_t sweeps = 2500;
  std::size_t burn_in = 500;
  std::size_t thin = 10;
  std::size_t cells = 800;
};

struct RunConfig {
  int spec_version = kSpecVersion;
  std::string name = "run";
  std::string output_dir = "out";
  std::size_t replicas = 1;
  bool override_gates = false;
  ThetaSpec theta_spec;
  Measure1D theta = catalog::delta(1.0);
  std::optional<EquilibriumMeasure> equilibrium;  // kind == fz
  EnsembleSpec ensemble;
  Grids grids;
  Checks checks;
  FzRun fz;
  std::vector<GateSpec> gates;

  const GateSpec& gate(const std::string& name) const {
    for (const auto& g : gates)
      if (g.name == name) return g;
    throw PreconditionError("no gate named '" + name + "'");
  }
  RingRadii radii() const { return ring_radii(theta); }
  double outer_radius() const {
    if (ensemble.model == Model::ginibre) return 1.0;
    return std::max(radii().outer, 1e-3);
  }
  std::vector<double> r_grid() const {
    const double hi = grids.r_max.value_or(1.2 * outer_radius());
    std::vector<double> g(grids.r_points);
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] = hi * static_cast<double>(i) / static_cast<double>(grids.r_points - 1);
    return g;
  }
  ZGrid z_grid() const {
    return square_grid(grids.z_half_width.value_or(1.25 * outer_radius()), grids.z_points, grids.z_center);
  }
};

namespace detail {

inline nlohmann::json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (const auto* a = node.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  throw PreconditionError("config: unsupported TOML value (dates and times are not used)");
}

inline ComplexPoint complex_from_json(const nlohmann::json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw PreconditionError(what + ": expected a number or [re, im]");
}

inline std::vector<ComplexPoint> complex_list(const nlohmann::json& j, const std::string& what) {
  std::vector<ComplexPoint> out;
  if (!j.is_array()) throw PreconditionError(what + ": expected a list of [re, im]");
  for (const auto& e : j) out.push_back(complex_from_json(e, what));
  return out;
}

inline void check_keys(const nlohmann::json& j, const std::string& section, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw PreconditionError("config: [" + section + "] must be a table");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::none_of(known.begin(), known.end(), [&](const char* s) { return k == s; }))
      throw PreconditionError("config: unknown key '" + k + "' in [" + section + "]");
  }
}

inline std::size_t positive_count(const nlohmann::json& j, const char* key, std::size_t fallback,
                                  const std::string& section) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<std::int64_t>();
  if (v < 1) throw PreconditionError("config: " + section + "." + key + " must be >= 1");
  return static_cast<std::size_t>(v);
}

inline std::optional<double> positive_opt(const nlohmann::json& j, const char* key, const std::string& section) {
  if (!j.contains(key)) return std::nullopt;
  const double v = j.at(key).get<double>();
  if (!(v > 0.0)) throw PreconditionError("config: " + section + "." + key + " must be positive");
  return v;
}

inline void parse_theta(RunConfig& c, const nlohmann::json& t) {
  check_keys(t, "theta", {"kind", "atoms", "x", "density", "lo", "hi", "at", "radius", "potential", "cells"});
  c.theta_spec.kind = t.value("kind", "");
  c.theta_spec.source = t;
  const auto& kind = c.theta_spec.kind;
  if (kind == "atoms") {
    std::vector<Atom> atoms;
    for (const auto& a : t.at("atoms")) atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
    c.theta = Measure1D::from_atoms(std::move(atoms));
  } else if (kind == "grid") {
    c.theta = Measure1D::from_grid(t.at("x").get<std::vector<double>>(), t.at("density").get<std::vector<double>>(),
                                   std::nullopt, true);
  } else if (kind == "quarter_circle") {
    c.theta = catalog::quarter_circle(t.value("cells", std::size_t{800}), t.value("radius", 2.0));
  } else if (kind == "uniform") {
    c.theta = catalog::uniform(t.at("lo").get<double>(), t.at("hi").get<double>());
  } else if (kind == "delta") {
    c.theta = catalog::delta(t.at("at").get<double>());
  } else if (kind == "fz") {
    c.theta_spec.potential = potential_from_json(t.at("potential"));
    c.equilibrium = equilibrium_measure(*c.theta_spec.potential, t.value("cells", std::size_t{800}));
    c.theta = c.equilibrium->singular;
  } else {
    throw PreconditionError("config: theta.kind must be one of atoms, grid, quarter_circle, uniform, delta, fz");
  }
  if (c.theta.support_hint().lo < 0.0) throw PreconditionError("config: theta must live on [0, inf)");
}

inline void parse_ensemble(RunConfig& c, const nlohmann::json& e) {
  check_keys(e, "ensemble", {"n", "model", "t_source", "noise_gamma", "seed", "fz_sweeps", "values"});
  auto& s = c.ensemble;
  s.n = positive_count(e, "n", 200, "ensemble");
  s.model = model_from_string(e.value("model", "utv_unitary"));
  s.seed = e.value("seed", std::uint64_t{1});
  if (e.contains("noise_gamma")) s.noise_gamma = e.at("noise_gamma").get<double>();
  const std::string src = e.value("t_source", c.theta_spec.kind == "fz" ? "fz" : "quantile");
  if (src == "quantile") {
    s.t_source = TSource::from_quantiles(c.theta);
  } else if (src == "fz") {
    if (!c.theta_spec.potential) throw PreconditionError("config: t_source = \"fz\" needs theta.kind = \"fz\"");
    s.t_source = TSource::from_log_gas(*c.theta_spec.potential, e.value("fz_sweeps", std::size_t{1500}));
  } else if (src == "explicit") {
    s.t_source = TSource::from_values(e.at("values").get<std::vector<double>>());
  } else {
    throw PreconditionError("config: ensemble.t_source must be quantile, fz or explicit");
  }
  s.validate();
}

inline void parse_grids(RunConfig& c, const nlohmann::json& g) {
  check_keys(g, "grids", {"r_points", "r_max", "z_points", "z_half_width", "z_center", "field_method", "eta", "dr",
                          "laplacian", "edge_band", "potential_check_r"});
  auto& d = c.grids;
  d.r_points = positive_count(g, "r_points", d.r_points, "grids");
  if (d.r_points < 2) throw PreconditionError("config: grids.r_points must be >= 2");
  d.r_max = positive_opt(g, "r_max", "grids");
  d.z_points = positive_count(g, "z_points", d.z_points, "grids");
  if (d.z_points < 5) throw PreconditionError("config: grids.z_points must be >= 5");
  d.z_half_width = positive_opt(g, "z_half_width", "grids");
  if (g.contains("z_center")) d.z_center = complex_from_json(g.at("z_center"), "grids.z_center");
  const std::string fm = g.value("field_method", "determinant");
  if (fm == "svd") d.field_method = FieldMethod::svd;
  else if (fm == "determinant") d.field_method = FieldMethod::determinant;
  else if (fm == "eigenvalue") d.field_method = FieldMethod::eigenvalue;
  else throw PreconditionError("config: grids.field_method must be svd, determinant or eigenvalue");
  d.eta = positive_opt(g, "eta", "grids").value_or(d.eta);
  d.dr = positive_opt(g, "dr", "grids").value_or(d.dr);
  const std::string lap = g.value("laplacian", "analytic");
  if (lap == "analytic") d.laplacian = Laplacian::analytic;
  else if (lap == "finite_difference") d.laplacian = Laplacian::finite_difference;
  else throw PreconditionError("config: grids.laplacian must be analytic or finite_difference");
  d.edge_band = g.value("edge_band", 0.0);
  if (d.edge_band < 0.0) throw PreconditionError("config: grids.edge_band must be >= 0");
  if (g.contains("potential_check_r")) d.potential_check_r = g.at("potential_check_r").get<std::vector<double>>();
}

inline void parse_checks(RunConfig& c, const nlohmann::json& k) {
  check_keys(k, "checks", {"hermitize_replicas", "hermitize_z", "field", "min_singular_z", "min_singular_delta",
                           "min_singular_draws"});
  auto& d = c.checks;
  d.hermitize_replicas = k.value("hermitize_replicas", d.hermitize_replicas);
  if (k.contains("hermitize_z")) d.hermitize_z = complex_list(k.at("hermitize_z"), "checks.hermitize_z");
  d.field = k.value("field", d.field);
  if (k.contains("min_singular_z")) d.min_singular_z = complex_list(k.at("min_singular_z"), "checks.min_singular_z");
  d.min_singular_delta = positive_opt(k, "min_singular_delta", "checks").value_or(d.min_singular_delta);
  d.min_singular_draws = positive_count(k, "min_singular_draws", d.min_singular_draws, "checks");
}

inline void parse_fz(RunConfig& c, const nlohmann::json& f) {
  check_keys(f, "fz", {"n", "sweeps", "burn_in", "thin", "cells"});
  auto& d = c.fz;
  d.n = positive_count(f, "n", d.n, "fz");
  d.sweeps = positive_count(f, "sweeps", d.sweeps, "fz");
  d.burn_in = f.value("burn_in", d.burn_in);
  d.thin = positive_count(f, "thin", d.thin, "fz");
  d.cells = positive_count(f, "cells", d.cells, "fz");
  if (d.sweeps <= d.burn_in) throw PreconditionError("config: fz.sweeps must exceed fz.burn_in");
}

inline void parse_gates(RunConfig& c, const nlohmann::json& g) {
  c.gates = default_gates(c.theta.is_atomic());
  if (g.is_null()) return;
  if (!g.is_object()) throw PreconditionError("config: [gates] must be a table");
  for (const auto& [name, v] : g.items()) {
    auto it = std::find_if(c.gates.begin(), c.gates.end(), [&](const GateSpec& s) { return s.name == name; });
    if (it == c.gates.end()) throw PreconditionError("config: unknown gate '" + name + "'");
    const double tol = v.get<double>();
    if (!(tol > 0.0) || !std::isfinite(tol)) throw PreconditionError("config: gate '" + name + "' must be positive");
    const bool looser = it->direction == Direction::at_most ? tol > it->tolerance : tol < it->tolerance;
    if (looser && !c.override_gates)
      throw PreconditionError("config: gate '" + name + "' is looser than its default; set override = true");
    it->loosened = looser;
    it->tolerance = tol;
  }
}

}  // namespace detail

/// Parses an already-loaded document (TOML converted or JSON).
inline RunConfig config_from_json(const nlohmann::json& j) {
  detail::check_keys(j, "top level", {"spec_version", "name", "output_dir", "replicas", "override", "theta", "ensemble",
                                      "grids", "checks", "fz", "gates"});
  RunConfig c;
  c.spec_version = j.value("spec_version", 0);
  if (c.spec_version != kSpecVersion)
    throw PreconditionError("config: spec_version " + std::to_string(c.spec_version) + " is not supported (expected " +
                            std::to_string(kSpecVersion) + ")");
  c.name = j.value("name", c.name);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.replicas = detail::positive_count(j, "replicas", 1, "top level");
  c.override_gates = j.value("override", false);
  if (!j.contains("theta")) throw PreconditionError("config: [theta] is required");
  detail::parse_theta(c, j.at("theta"));
  detail::parse_ensemble(c, j.value("ensemble", nlohmann::json::object()));
  detail::parse_grids(c, j.value("grids", nlohmann::json::object()));
  detail::parse_checks(c, j.value("checks", nlohmann::json::object()));
  detail::parse_fz(c, j.value("fz", nlohmann::json::object()));
  detail::parse_gates(c, j.value("gates", nlohmann::json()));
  return c;
}

inline nlohmann::json parse_toml_text(const std::string& text, const std::string& source = "config") {
  try {
    return detail::toml_to_json(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ": " << e.description() << " at line " << e.source().begin.line;
    throw PreconditionError(msg.str());
  }
}

/// .json files are read as JSON, anything else as TOML.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const bool json = std::filesystem::path(path).extension() == ".json";
  nlohmann::json doc;
  if (json) {
    try {
      doc = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
      throw PreconditionError(path + ": " + e.what());
    }
  } else {
    doc = parse_toml_text(ss.str(), path);
  }
  return config_from_json(doc);
}

/// The config as it will be run: every default filled in.
inline nlohmann::json resolved_json(const RunConfig& c) {
  nlohmann::json j;
  j["spec_version"] = c.spec_version;
  j["name"] = c.name;
  j["output_dir"] = c.output_dir;
  j["replicas"] = c.replicas;
  j["override"] = c.override_gates;
  j["theta"] = c.theta_spec.source;
  auto& e = j["ensemble"];
  e["n"] = c.ensemble.n;
  e["model"] = to_string(c.ensemble.model);
  e["seed"] = c.ensemble.seed;
  if (c.ensemble.noise_gamma) e["noise_gamma"] = *c.ensemble.noise_gamma;
  switch (c.ensemble.t_source.kind) {
    case TSource::Kind::quantile: e["t_source"] = "quantile"; break;
    case TSource::Kind::fz:
      e["t_source"] = "fz";
      e["fz_sweeps"] = c.ensemble.t_source.fz_sweeps;
      break;
    case TSource::Kind::explicit_values:
      e["t_source"] = "explicit";
      e["values"] = c.ensemble.t_source.values;
      break;
  }
  auto& g = j["grids"];
  const auto& d = c.grids;
  g["r_points"] = d.r_points;
  g["r_max"] = d.r_max.value_or(1.2 * c.outer_radius());
  g["z_points"] = d.z_points;
  g["z_half_width"] = d.z_half_width.value_or(1.25 * c.outer_radius());
  g["z_center"] = {d.z_center.real(), d.z_center.imag()};
  g["field_method"] = d.field_method == FieldMethod::svd           ? "svd"
                      : d.field_method == FieldMethod::determinant ? "determinant"
                                                                   : "eigenvalue";
  g["eta"] = d.eta;
  g["dr"] = d.dr;
  g["laplacian"] = d.laplacian == Laplacian::analytic ? "analytic" : "finite_difference";
  g["edge_band"] = d.edge_band;
  g["potential_check_r"] = d.potential_check_r;
  auto& k = j["checks"];
  k["hermitize_replicas"] = c.checks.hermitize_replicas;
  k["hermitize_z"] = nlohmann::json::array();
  for (const auto& z : c.checks.hermitize_z) k["hermitize_z"].push_back({z.real(), z.imag()});
  k["field"] = c.checks.field;
  k["min_singular_z"] = nlohmann::json::array();
  for (const auto& z : c.checks.min_singular_z) k["min_singular_z"].push_back({z.real(), z.imag()});
  k["min_singular_delta"] = c.checks.min_singular_delta;
  k["min_singular_draws"] = c.checks.min_singular_draws;
  j["fz"] = {{"n", c.fz.n}, {"sweeps", c.fz.sweeps}, {"burn_in", c.fz.burn_in}, {"thin", c.fz.thin},
             {"cells", c.fz.cells}};
  for (const auto& s : c.gates) j["gates"][s.name] = s.tolerance;
  return j;
}

}  // namespace ringlab::harness
