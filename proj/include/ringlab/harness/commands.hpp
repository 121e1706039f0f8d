#pragma once
// The five subcommands as library calls; the CLI is a thin wrapper.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ringlab/harness/config.hpp"
#include "ringlab/harness/plots.hpp"
#include "ringlab/harness/run.hpp"

namespace ringlab::harness {

struct CommandResult {
  ComparisonReport report;
  std::vector<std::string> plots;
  std::string out_dir;
};

/// theory | simulate | compare | fz-sample. Writes config.json, the CSV
/// artifacts, the SVG figures, report.json and gates.csv under c.output_dir.
inline CommandResult run_command(const std::string& command, const RunConfig& c,
                                 const LogGasState* resume = nullptr) {
  CommandResult res;
  res.out_dir = ensure_dir(c.output_dir);
  write_json(res.out_dir + "/config.json", resolved_json(c));
  std::optional<TheoryResult> theory;
  std::optional<SimulationResult> sim;
  std::optional<FzSampleResult> fz;
  if (command == "theory" || command == "compare" || command == "fz-sample") {
    theory = run_theory(c);
    write_theory(res.out_dir, *theory);
  }
  if (command == "simulate" || command == "compare") {
    sim = run_simulation(c);
    write_simulation(res.out_dir, *sim);
  }
  if (command == "fz-sample") {
    fz = run_fz_sample(c, resume);
    write_fz(res.out_dir, *fz);
  }
  if (!theory && !sim && !fz) throw PreconditionError("unknown command '" + command + "'");
  res.report = build_report(c, command, theory ? &*theory : nullptr, sim ? &*sim : nullptr, fz ? &*fz : nullptr);
  write_report(res.out_dir, res.report);
  res.plots = emit_plots(c, res.out_dir, theory ? &*theory : nullptr, sim ? &*sim : nullptr, fz ? &*fz : nullptr);
  return res;
}

inline nlohmann::json read_report(const std::string& dir) {
  const std::string path = dir + "/report.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(path + ": " + e.what());
  }
}

inline std::string format_value(const nlohmann::json& v) {
  if (v.is_number()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v.get<double>());
    return buf;
  }
  if (v.is_string()) return v.get<std::string>();
  return "-";
}

/// One line per gate, then the errors. Returns true iff no gate failed.
inline bool summarize(const nlohmann::json& report, std::ostream& out) {
  bool ok = true;
  out << report.value("name", "?") << " (" << report.value("command", "?") << ")";
  if (report.value("override", false)) out << " [override: loosened gates allowed]";
  out << '\n';
  for (const auto& g : report.at("gates")) {
    const std::string status = g.at("status").get<std::string>();
    if (status == "fail") ok = false;
    std::string tag = status == "pass" ? "PASS" : status == "fail" ? "FAIL" : "SKIP";
    out << "  " << tag << "  " << g.at("name").get<std::string>() << "  " << format_value(g.at("value")) << ' '
        << g.at("direction").get<std::string>() << ' ' << format_value(g.at("tolerance"));
    if (g.contains("detail")) out << "  (" << g.at("detail").get<std::string>() << ')';
    if (g.value("loosened", false)) out << "  loosened";
    out << '\n';
  }
  for (const auto& e : report.at("errors")) out << "  error: " << e.get<std::string>() << '\n';
  return ok;
}

}  // namespace ringlab::harness
