// Command-line front end: inspect / solve / experiment.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "loglap/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Pseudospectral fixed-point solver for the logarithmic Laplacian with drift"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string which;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Random seed (overrides seed)");
    sub->add_option("--threads", threads, "Worker threads for experiments")->check(CLI::PositiveNumber);
  };

  auto* inspect = app.add_subcommand("inspect", "Report C_ab, |K|_1, M, |u0|_2, epsilon_max and sigma");
  add_common(inspect);
  auto* solve = app.add_subcommand("solve", "Solve the linear problem and run the fixed-point iteration");
  add_common(solve);
  auto* experiment = app.add_subcommand("experiment", "Run a scripted experiment");
  add_common(experiment);
  experiment->add_option("which", which, "contraction | continuity | sweep")
      ->required()
      ->check(CLI::IsMember({"contraction", "continuity", "sweep"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(loglap::ExitCode::validation);
  }

  try {
    auto config = loglap::load_config(config_path);
    if (out_dir) config.output_dir = *out_dir;
    if (seed) config.seed = *seed;
    config.threads = threads;

    loglap::CommandResult result;
    if (inspect->parsed()) result = loglap::cmd_inspect(config);
    else if (solve->parsed()) result = loglap::cmd_solve(config);
    else result = loglap::cmd_experiment(config, loglap::parse_experiment(which));

    std::cout << result.payload.dump(2) << '\n';
    return result.exit_code;
  } catch (const loglap::Error& e) {
    std::cout << loglap::error_json(e).dump() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cout << nlohmann::json{{"error", "InternalError"}, {"message", e.what()}, {"exit_code", 1}}.dump() << '\n';
    return 1;
  }
}
