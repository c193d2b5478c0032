#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lagbem/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Boundary integral solver for the elastodynamic lateral Cauchy problem (Laguerre domain)"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;
  std::uint64_t seed_override = 0;
  std::vector<int> grid_sizes;

  CLI::App* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", config_path, "experiment configuration (key = value text)")->required();
  run->add_option("--output", output_override, "write the result CSV here instead of the configured path");
  CLI::Option* run_seed = run->add_option("--seed", seed_override, "override the noise seed");

  CLI::App* sweep = app.add_subcommand("sweep", "Repeat an experiment over a list of grid sizes");
  sweep->add_option("config", config_path, "experiment configuration (key = value text)")->required();
  sweep->add_option("--M", grid_sizes, "comma-separated grid sizes, e.g. 8,16,32,64")
      ->required()
      ->delimiter(',');
  sweep->add_option("--output", output_override, "write the result CSV here instead of the configured path");
  CLI::Option* sweep_seed = sweep->add_option("--seed", seed_override, "override the noise seed");
  CLI::Option* emit_plot = sweep->add_flag("--emit-plot-data",
                                           "also write (M, log10 error) pairs next to the output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    lagbem::ExperimentConfig cfg = lagbem::load_config(config_path);
    if (run_seed->count() > 0 || sweep_seed->count() > 0) cfg.seed = seed_override;
    if (!output_override.empty()) cfg.output = output_override;
    if (run->parsed()) {
      const lagbem::RunResult result = lagbem::run_experiment(cfg);
      lagbem::write_output(cfg, result.rows);
    } else {
      const lagbem::SweepResult result = lagbem::run_sweep(cfg, grid_sizes);
      lagbem::write_output(cfg, result.rows);
      if (emit_plot->count() > 0) {
        std::string plot_path = cfg.output.empty() ? "sweep" : cfg.output;
        if (plot_path.size() > 4 && plot_path.substr(plot_path.size() - 4) == ".csv")
          plot_path.resize(plot_path.size() - 4);
        lagbem::write_plot_data(plot_path + ".plot", result);
      }
    }
  } catch (const lagbem::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const lagbem::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
