// Command-line front end for the sweep harness.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rsofdm/errors.hpp"
#include "rsofdm/harness.hpp"

namespace fs = std::filesystem;
using namespace rsofdm;

namespace {

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON experiment config (defaults when omitted)");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--trials", c.trials, "override the trial count");
  app->add_option("--seed", c.seed, "override the seed");
  app->add_option("--threads", c.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_flag("--quiet", c.quiet, "no progress output");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.trials) cfg.trials = *c.trials;
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  const fs::path path = fs::path(c.out) / name;
  std::ofstream os(path);
  if (!os) throw InvalidInput("cannot write " + path.string());
  std::cerr << "writing " << path.string() << '\n';
  return os;
}

SweepResult sweep(const Common& c, const ExperimentConfig& cfg, bool traces) {
  SweepOptions opts;
  opts.threads = c.threads;
  opts.keep_traces = traces;
  if (!c.quiet) {
    opts.progress = [](int done, int total) {
      std::cerr << "\r" << done << "/" << total << " work items" << (done == total ? "\n" : "")
                << std::flush;
    };
  }
  SweepResult r = run_sweep(cfg, opts);
  if (const int f = r.failures(); f > 0) {
    std::cerr << "warning: " << f << " cell(s) failed and were excluded from the means\n";
  }
  open_out(c, "summary.json") << sweep_to_json(r) << '\n';
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OFDMA / OFDM-NOMA / OFDM-RSMA sum-rate experiments"};
  app.require_subcommand(1);

  Common sweep_opts;
  Common power_opts;
  Common fair_opts;
  Common conv_opts;
  std::vector<double> snr_list;

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sum-rate sweep over SNR and Doppler");
  add_common(sweep_cmd, sweep_opts);
  CLI::App* power_cmd = app.add_subcommand("power-report", "power ratios and per-subcarrier allocations");
  add_common(power_cmd, power_opts);
  power_cmd->add_option("--snr", snr_list, "SNRs of the per-subcarrier report (default: config grid)");
  CLI::App* fair_cmd = app.add_subcommand("fairness", "Jain fairness per scheme and SNR");
  add_common(fair_cmd, fair_opts);
  CLI::App* conv_cmd = app.add_subcommand("convergence", "AO iteration traces");
  add_common(conv_cmd, conv_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep_cmd) {
      const ExperimentConfig cfg = load(sweep_opts);
      const SweepResult r = sweep(sweep_opts, cfg, false);
      auto os = open_out(sweep_opts, "sweep.csv");
      write_sweep_csv(os, r);
    } else if (*power_cmd) {
      const ExperimentConfig cfg = load(power_opts);
      const SweepResult r = sweep(power_opts, cfg, false);
      {
        auto os = open_out(power_opts, "power_ratio.csv");
        write_power_ratio_csv(os, power_ratio_report(r));
      }
      auto os = open_out(power_opts, "subcarrier_power.csv");
      write_subcarrier_csv(os, subcarrier_power_report(cfg, snr_list.empty() ? cfg.snr_grid_db : snr_list));
    } else if (*fair_cmd) {
      const ExperimentConfig cfg = load(fair_opts);
      const SweepResult r = sweep(fair_opts, cfg, false);
      auto os = open_out(fair_opts, "fairness.csv");
      write_fairness_csv(os, fairness_report(r));
    } else if (*conv_cmd) {
      const ExperimentConfig cfg = load(conv_opts);
      const SweepResult r = sweep(conv_opts, cfg, true);
      auto os = open_out(conv_opts, "convergence.csv");
      write_convergence_csv(os, r);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
