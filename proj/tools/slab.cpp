// slab: run scaling experiments from a JSON config and emit CSV results.
//
//   slab run <config.json> --out <dir>
//   slab list-scenarios
//   slab fit <results.csv>
//   slab selftest
//
// Exit codes: 0 all verdicts pass, 1 some verdict failed or an experiment
// errored, 2 usage or config error, 3 output error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "slab/cli.hpp"

namespace {

using namespace slab::cli;

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  RunConfig config;
  try {
    config = parse_config(config_path);
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) std::cerr << "config error: " << p << "\n";
    return kExitConfig;
  }
  std::string dir = out_dir.empty() ? config.out : out_dir;
  if (dir.empty()) {
    std::cerr << "config error: out: no output directory (set \"out\" or pass --out)\n";
    return kExitConfig;
  }
  config.out = dir;
  const auto result = execute(config);
  try {
    write_outputs(dir, config, result);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  std::cout << config.scenario << ": " << result.rows.size() << " rows, " << result.fits.size() << " fits, "
            << result.failures() << " failed -> " << dir << "\n";
  return result.exit_code();
}

int cmd_fit(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    return kExitConfig;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  std::vector<FitRow> fits;
  try {
    fits = fit_series(parse_results_csv(ss.str()));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::cout << fits_to_csv(fits);
  for (const auto& f : fits) {
    if (f.verdict == "fail") return kExitFail;
  }
  return kExitPass;
}

int cmd_selftest() {
  std::size_t failures = 0;
  for (const char* scenario : {"invariants", "energy-drift"}) {
    const auto config = parse_config_text(std::string("{\"scenario\": \"") + scenario + "\"}");
    const auto result = execute(config);
    std::cout << report(config, result) << "\n";
    failures += result.failures();
  }
  std::cout << "selftest: " << (failures == 0 ? "PASS" : "FAIL") << "\n";
  return failures == 0 ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scaling experiments for Schroedinger-type flows on tori and S^3 x S^3"};
  app.require_subcommand(1);

  std::string config_path, out_dir, results_path;
  auto* run = app.add_subcommand("run", "Run the experiments of a config file");
  run->add_option("config", config_path, "JSON config")->required();
  run->add_option("--out,-o", out_dir, "Output directory (overrides \"out\" in the config)");
  auto* list = app.add_subcommand("list-scenarios", "List scenarios with their predicted exponents");
  auto* fit = app.add_subcommand("fit", "Re-fit the data series of a results.csv");
  fit->add_option("results", results_path, "results.csv")->required();
  auto* selftest = app.add_subcommand("selftest", "Run the invariant and energy checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir);
    if (*list) {
      std::cout << list_scenarios();
      return kExitPass;
    }
    if (*fit) return cmd_fit(results_path);
    if (*selftest) return cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitConfig;
}
