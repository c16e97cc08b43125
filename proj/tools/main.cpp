#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gibbs/runner.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string output_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON configuration file");
  cmd->add_option("--out", opts.output_dir, "output directory (default: runs/<experiment>)");
  cmd->add_option("--seed", opts.seed, "master seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_option("--threads", opts.threads, "worker threads");
}

gibbs::RunConfig load_config(const CommonOpts& opts, const std::string& experiment) {
  gibbs::RunConfig cfg;
  if (!opts.config_path.empty()) cfg = gibbs::RunConfig::from_file(opts.config_path);
  if (!experiment.empty()) cfg.experiment = experiment;
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.threads > 0) cfg.threads = opts.threads;
  if (!opts.output_dir.empty())
    cfg.output_dir = opts.output_dir;
  else if (opts.config_path.empty() || cfg.output_dir.empty())
    cfg.output_dir = "runs/" + cfg.experiment;
  return cfg;
}

int run_experiment(const CommonOpts& opts, const std::string& experiment) {
  gibbs::RunConfig cfg = load_config(opts, experiment);
  const std::vector<std::string> violations = gibbs::validate(cfg);
  if (!violations.empty()) {
    std::cerr << "configuration rejected:\n";
    for (const std::string& v : violations) std::cerr << "  - " << v << "\n";
    return 2;
  }
  gibbs::RunOutcome out = gibbs::run(cfg);
  for (const gibbs::CheckResult& c : out.checks)
    std::cout << (c.pass ? "[ok]   " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
  std::cout << "report: " << out.report_path << "\n";
  std::cout << "manifest: " << out.manifest_path << "\n";
  return out.all_pass ? 0 : 1;
}

int validate_only(const CommonOpts& opts) {
  gibbs::RunConfig cfg = load_config(opts, "");
  const std::vector<std::string> violations = gibbs::validate(cfg);
  if (violations.empty()) {
    std::cout << "configuration ok (hash " << gibbs::fnv1a_hex(cfg.canonical_json()) << ")\n";
    return 0;
  }
  for (const std::string& v : violations) std::cout << "  - " << v << "\n";
  return 1;
}

int show_report(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    std::cerr << "cannot open " << path << "\n";
    return 2;
  }
  nlohmann::json j;
  f >> j;
  std::cout << "experiment: " << j.value("experiment", std::string("?")) << "\n";
  std::cout << "seed: " << j.value("seed", 0) << "\n";
  std::cout << "config hash: " << j.value("config_hash", std::string("?")) << "\n";
  bool all = true;
  for (const auto& c : j.value("checks", nlohmann::json::array())) {
    const bool pass = c.value("pass", false);
    all = all && pass;
    std::cout << (pass ? "[ok]   " : "[FAIL] ") << c.value("name", std::string("?")) << ": "
              << c.value("detail", std::string()) << "\n";
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulator and verification harness for gradient interface models"};
  app.require_subcommand(1);

  static const std::vector<std::pair<std::string, std::string>> experiments = {
      {"field", "sample the interface field and record site moments"},
      {"walk", "run walkers in the conductance environment and fit the diffusivity"},
      {"green", "solve lattice Green functions, capacities and equilibrium measures"},
      {"soup", "sample trajectory soups and their occupation fields"},
      {"isomorphism", "compare occupation-field MGF routes"},
      {"scaling", "rescaled Green-form ladders against the continuum operator"},
  };

  std::vector<CommonOpts> opts(experiments.size());
  for (size_t i = 0; i < experiments.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(experiments[i].first, experiments[i].second);
    add_common(cmd, opts[i]);
  }

  CommonOpts vopts;
  CLI::App* vcmd = app.add_subcommand("validate", "check a configuration without running it");
  add_common(vcmd, vopts);

  std::string report_path = "runs/report.json";
  CLI::App* rcmd = app.add_subcommand("report", "summarize a previously written report");
  rcmd->add_option("path", report_path, "path to report.json");

  CLI11_PARSE(app, argc, argv);

  try {
    for (size_t i = 0; i < experiments.size(); ++i)
      if (app.got_subcommand(experiments[i].first))
        return run_experiment(opts[i], experiments[i].first);
    if (app.got_subcommand("validate")) return validate_only(vopts);
    if (app.got_subcommand("report")) return show_report(report_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
