#include <algorithm>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "ionwalk/cli.hpp"
#include "ionwalk/error.hpp"

namespace cli = ionwalk::cli;

int main(int argc, char** argv) {
  CLI::App app{"Walking-wave cat-state simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, mode, format;
  std::optional<std::uint64_t> seed;
  std::optional<int> set;
  std::string input;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "root seed for synthetic data");
    sub->add_option("--mode", mode, "propagation mode")->check(CLI::IsMember({"exact", "sideband"}));
    sub->add_option("--format", format, "csv: data files and summary; summary: summary only")
        ->check(CLI::IsMember({"csv", "summary"}));
  };

  auto* simulate = app.add_subcommand("simulate", "classical and quantum evolution of both branches");
  auto* fig1 = app.add_subcommand("reproduce-fig1", "trajectories, Wigner grids and metrics at the embedded parameters");
  auto* table1 = app.add_subcommand("reproduce-table1", "derived columns of the embedded data sets");
  auto* sweep = app.add_subcommand("sweep-empirics", "regenerate the excursion and return-time laws");
  auto* synth = app.add_subcommand("synth", "synthetic fringe scans with shot noise");
  auto* fit = app.add_subcommand("fit", "fit fringe scans and infer drive parameters");
  for (auto* sub : {simulate, fig1, table1, sweep, synth, fit}) add_common(sub);
  table1->add_option("--set", set, "data set")->check(CLI::Range(1, 5));
  fit->add_option("input", input, "scan file (tau_us,phi,p_hat,shots)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  cli::Options opts;
  try {
    if (!config_path.empty()) opts.config = cli::load_config(config_path);
    if (!mode.empty()) opts.config.sim.mode = mode;
    if (seed) opts.config.scan.seed = *seed;
    if (!format.empty()) opts.config.outputs.formats = format == "csv" ? std::vector<std::string>{"csv", "summary"}
                                                                       : std::vector<std::string>{"summary"};
    opts.config.validate();
    const auto& f = opts.config.outputs.formats;
    opts.csv = std::find(f.begin(), f.end(), "csv") != f.end();
    opts.out = out_dir.empty() ? opts.config.outputs.directory : out_dir;
    opts.set = set;
    opts.input = input;
  } catch (const ionwalk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*simulate) return cli::cmd_simulate(opts, std::cout);
    if (*fig1) return cli::cmd_reproduce_fig1(opts, std::cout);
    if (*table1) return cli::cmd_reproduce_table1(opts, std::cout);
    if (*sweep) return cli::cmd_sweep_empirics(opts, std::cout);
    if (*synth) return cli::cmd_synth(opts, std::cout);
    if (*fit) return cli::cmd_fit(opts, std::cout);
  } catch (const ionwalk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
