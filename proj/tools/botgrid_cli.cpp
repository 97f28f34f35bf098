#include <iostream>

#include <CLI11.hpp>

#include "botgrid/app.hpp"

using namespace botgrid;

int main(int argc, char** argv)
{
  CLI::App cli{"Botnet-driven load attacks on power grids: epidemic, cyber game and grid simulation"};
  cli.require_subcommand(1);

  std::string config_path, preset_name, dump;
  app::RunOptions opt;
  cli.add_option("--dump-preset", dump, "print a compiled-in preset as JSON and exit");

  struct Sub
  {
    const char* name;
    const char* help;
    int (*fn)(const app::ScenarioConfig&, const app::RunOptions&, std::ostream&);
  };
  const Sub subs[] = {
      {"epidemic", "integrate the SIS mean-field sweep", app::cmd_epidemic},
      {"cyber-ne", "solve the cyber Nash equilibrium and best responses", app::cmd_cyber_ne},
      {"run", "simulate an attack scenario on the grid", app::cmd_run},
      {"validate", "check a config and report model diagnostics", app::cmd_validate},
  };
  for (const auto& s : subs) {
    auto* sc = cli.add_subcommand(s.name, s.help);
    auto* c = sc->add_option("--config", config_path, "scenario config (JSON)");
    auto* p = sc->add_option("--preset", preset_name, "compiled-in preset name");
    c->excludes(p);
    sc->add_option("--out", opt.out_dir, "output directory");
    sc->add_option("--seed", opt.seed, "seed for random initial perturbations");
    sc->add_option("--jobs", opt.jobs, "worker threads for independent sweep points")->check(CLI::PositiveNumber);
    if (std::string(s.name) == "run") sc->add_flag("--assert", opt.assert_safety, "exit 4 when any generator trips");
  }

  // --dump-preset works without a subcommand
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--dump-preset") {
      try {
        std::cout << app::preset_json(argv[i + 1]).dump(2) << "\n";
        return app::kOk;
      } catch (const app::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return app::kConfigError;
      }
    }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : app::kConfigError;
  }

  try {
    app::ScenarioConfig cfg;
    if (!config_path.empty()) cfg = app::load_config(config_path);
    else if (!preset_name.empty()) cfg = app::preset(preset_name);
    else throw app::ConfigError("one of --config or --preset is required");
    for (const auto& s : subs)
      if (cli.got_subcommand(s.name)) return s.fn(cfg, opt, std::cout);
  } catch (const app::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return app::kConfigError;
  } catch (const cyber::ConvergenceError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return app::kNonConvergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return app::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return app::kOk;
}
