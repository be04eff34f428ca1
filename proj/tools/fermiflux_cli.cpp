#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fermiflux/fermiflux.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fermiflux: steady states, currents and entropy production of "
               "fermionic quantum walkers coupled to reservoirs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int t_max = 100;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "path to the JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
  };

  CLI::App* validate = app.add_subcommand("validate", "check all model assumptions");
  add_common(validate);
  CLI::App* steady = app.add_subcommand("steady", "steady state, currents, entropy rate");
  add_common(steady);
  CLI::App* evolve = app.add_subcommand("evolve", "finite-time lattice evolution");
  add_common(evolve);
  evolve->add_option("--t-max", t_max, "number of walk steps")->check(CLI::NonNegativeNumber);
  CLI::App* sweep = app.add_subcommand("sweep", "exact vs leading-order coupling sweep");
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : fermiflux::kExitUsage;
  }

  try {
    fermiflux::RunConfig cfg = fermiflux::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (validate->parsed()) return fermiflux::cmd_validate(cfg);
    if (steady->parsed()) return fermiflux::cmd_steady(cfg);
    if (evolve->parsed()) return fermiflux::cmd_evolve(cfg, t_max);
    if (sweep->parsed()) return fermiflux::cmd_sweep(cfg);
  } catch (const fermiflux::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fermiflux::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fermiflux::kExitNumerical;
  }
  return fermiflux::kExitUsage;
}
