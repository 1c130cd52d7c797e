// Command-line front end: scenario runs, A/B comparisons, synthetic dataset
// generation, and the grid-only cost baseline.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error. Failures print one
// machine-readable line to stderr: "error: <category>: <message>".

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "microgrid/config.hpp"
#include "microgrid/dataset.hpp"
#include "microgrid/report.hpp"
#include "microgrid/simulator.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string dataset_path;
  std::string out_dir = "out";
  std::optional<std::string> framework;
  std::optional<long long> epochs;
  std::optional<unsigned long long> seed;
  std::optional<unsigned long long> gas_price;
  std::optional<unsigned long long> eth_usd;
  std::optional<long long> grid_price;
};

const std::vector<std::string> kFrameworkNames = {"cda", "uniform-step", "uniform-regression",
                                                  "grid"};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_framework) {
  cmd->add_option("--config", o.config_path, "scenario config file (JSON)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--dataset", o.dataset_path, "dataset manifest (overrides config)");
  cmd->add_option("--out", o.out_dir, "report output directory");
  if (with_framework)
    cmd->add_option("--framework", o.framework, "market framework")
        ->check(CLI::IsMember(kFrameworkNames));
  cmd->add_option("--epochs", o.epochs, "number of hourly epochs");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--gas-price", o.gas_price, "gas price in Wei per gas unit");
  cmd->add_option("--eth-usd", o.eth_usd, "USD per Ether");
  cmd->add_option("--grid-price", o.grid_price, "grid retail price in milli-cents per kWh");
}

microgrid::ScenarioConfig make_config(const CommonOpts& o) {
  microgrid::ScenarioConfig cfg;
  if (!o.config_path.empty()) cfg = microgrid::load_config(o.config_path);
  if (o.framework) cfg.framework = microgrid::framework_from_string(*o.framework).value();
  if (o.epochs) cfg.epochs = static_cast<int>(*o.epochs);
  if (o.seed) cfg.seed = *o.seed;
  if (o.gas_price) cfg.gas.gas_price = microgrid::Wei(*o.gas_price);
  if (o.eth_usd) cfg.gas.eth_usd = *o.eth_usd;
  if (o.grid_price) cfg.grid_price = static_cast<microgrid::Millicents>(*o.grid_price);
  if (!o.dataset_path.empty()) cfg.dataset_manifest = o.dataset_path;
  return cfg;
}

// A config without a dataset runs on the default in-memory synthetic
// scenario, identical to the bundled fixture.
microgrid::Dataset resolve_dataset(const microgrid::ScenarioConfig& cfg) {
  if (cfg.dataset_manifest.empty()) return microgrid::build_synthetic({});
  return microgrid::load_dataset(cfg.dataset_manifest);
}

int cmd_run(const CommonOpts& o, bool force_baseline) {
  microgrid::ScenarioConfig cfg = make_config(o);
  if (force_baseline) cfg.framework = microgrid::Framework::GridBaseline;
  cfg.validate();
  const microgrid::Dataset ds = resolve_dataset(cfg);
  const microgrid::SimReport report = microgrid::run(cfg, ds);
  microgrid::write_report(report, o.out_dir);
  std::cout << "wrote " << o.out_dir << " framework=" << microgrid::to_string(report.framework)
            << " epochs=" << report.epochs << " trades=" << report.trades.size()
            << " volume_wh=" << report.total_volume_wh << '\n';
  return 0;
}

int cmd_ab(const CommonOpts& o, const std::string& fw_a, const std::string& fw_b) {
  microgrid::ScenarioConfig base = make_config(o);
  microgrid::ScenarioConfig cfg_a = base;
  microgrid::ScenarioConfig cfg_b = base;
  cfg_a.framework = microgrid::framework_from_string(fw_a).value();
  cfg_b.framework = microgrid::framework_from_string(fw_b).value();
  cfg_a.validate();
  cfg_b.validate();
  const microgrid::Dataset ds = resolve_dataset(base);
  const microgrid::ComparisonReport cmp = microgrid::ab_compare(cfg_a, cfg_b, ds);
  microgrid::write_comparison(cmp, o.out_dir);
  std::cout << "wrote " << o.out_dir << " a=" << fw_a << " b=" << fw_b << '\n';
  return 0;
}

int cmd_gen(const microgrid::SyntheticGenSpec& spec, const std::string& out_dir) {
  const microgrid::Dataset ds = microgrid::generate_synthetic(spec, out_dir);
  std::cout << "wrote " << out_dir << " households=" << ds.households.size()
            << " hours=" << ds.series_length() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"peer-to-peer microgrid electricity market simulator"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  auto* run_cmd = app.add_subcommand("run", "simulate one scenario and write reports");
  add_common(run_cmd, run_opts, true);

  CommonOpts ab_opts;
  std::string fw_a = "cda";
  std::string fw_b = "uniform-regression";
  auto* ab_cmd = app.add_subcommand("ab", "paired comparison of two frameworks");
  add_common(ab_cmd, ab_opts, false);
  ab_cmd->add_option("--framework-a", fw_a, "first framework")
      ->check(CLI::IsMember(kFrameworkNames));
  ab_cmd->add_option("--framework-b", fw_b, "second framework")
      ->check(CLI::IsMember(kFrameworkNames));

  CommonOpts baseline_opts;
  auto* baseline_cmd = app.add_subcommand("baseline", "grid-only cost counterfactual");
  add_common(baseline_cmd, baseline_opts, false);

  microgrid::SyntheticGenSpec gen_spec;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset");
  gen_cmd->add_option("--out", gen_out, "dataset output directory")->required();
  gen_cmd->add_option("--households", gen_spec.n_households, "number of households")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--days", gen_spec.days, "number of days")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_spec.seed, "generator seed");
  gen_cmd->add_option("--pv-min", gen_spec.pv_kwp_min, "smallest PV capacity, kWp");
  gen_cmd->add_option("--pv-max", gen_spec.pv_kwp_max, "largest PV capacity, kWp");
  gen_cmd->add_option("--biomass-wh", gen_spec.biomass_capacity_wh_per_epoch,
                      "dispatchable plant capacity per epoch, Wh (0 disables)");
  gen_cmd->add_option("--plants", gen_spec.biomass_plants, "number of dispatchable plants")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: usage: " << e.what() << '\n';
    std::cerr << app.help() << '\n';
    return 2;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_opts, false);
    if (baseline_cmd->parsed()) return cmd_run(baseline_opts, true);
    if (ab_cmd->parsed()) return cmd_ab(ab_opts, fw_a, fw_b);
    if (gen_cmd->parsed()) return cmd_gen(gen_spec, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << '\n';
    return 1;
  }
  std::cerr << "error: usage: no subcommand\n";
  return 2;
}
