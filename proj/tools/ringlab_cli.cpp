// ringlab: theory, simulate, compare, fz-sample, report.
// Exit code 0 iff every evaluated gate passes; 2 on configuration or I/O errors.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ringlab/ringlab.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string resume;
};

void add_common(CLI::App* sub, Options& o, bool config_required = true) {
  auto* c = sub->add_option("--config", o.config, "experiment file (.toml or .json)");
  if (config_required) c->required();
  sub->add_option("--seed", o.seed, "override ensemble.seed");
  sub->add_option("--out", o.out, "override output_dir");
}

ringlab::harness::RunConfig load(const Options& o) {
  auto c = ringlab::harness::load_config(o.config);
  if (o.seed) c.ensemble.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  return c;
}

int run(const std::string& command, const Options& o) {
  using namespace ringlab::harness;
  const auto c = load(o);
  std::optional<ringlab::LogGasState> resume;
  if (!o.resume.empty()) {
    std::ifstream in(o.resume, std::ios::binary);
    if (!in) throw ringlab::PreconditionError("cannot read checkpoint " + o.resume);
    resume = nlohmann::json::parse(in).get<ringlab::LogGasState>();
  }
  std::cerr << "ringlab " << command << ": " << c.name << ", " << ringlab::worker_count() << " worker(s), output "
            << c.output_dir << '\n';
  const auto res = run_command(command, c, resume ? &*resume : nullptr);
  return summarize(to_json(res.report), std::cout) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single ring laboratory"};
  app.require_subcommand(1);
  Options o;
  auto* theory = app.add_subcommand("theory", "radial law from theta by both pipelines, cross-validated");
  auto* simulate = app.add_subcommand("simulate", "sample the ensemble, per-replica identity checks");
  auto* compare = app.add_subcommand("compare", "theory and simulation, then the ring gates");
  auto* fz = app.add_subcommand("fz-sample", "log-gas chain against its equilibrium measure");
  auto* report = app.add_subcommand("report", "print the verdicts of an earlier run");
  for (auto* s : {theory, simulate, compare, fz}) add_common(s, o);
  add_common(report, o, false);
  fz->add_option("--resume", o.resume, "continue the chain from a checkpoint json");
  CLI11_PARSE(app, argc, argv);

  try {
    for (auto* s : {theory, simulate, compare, fz})
      if (s->parsed()) return run(s->get_name(), o);
    std::string dir;
    if (o.out) dir = *o.out;
    else if (!o.config.empty()) dir = load(o).output_dir;
    else throw ringlab::PreconditionError("report: give --out or --config");
    return ringlab::harness::summarize(ringlab::harness::read_report(dir), std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
