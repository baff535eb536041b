#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "experiments.hpp"

int main(int argc, char** argv) {
  const std::string env_err = wndyn::cli::check_worker_env();
  if (!env_err.empty()) {
    std::cout << R"({"error":{"type":"environment","message":")" << env_err
              << R"("}})" << std::endl;
    return 2;
  }

  CLI::App app{"wndyn: averaged dynamics of white-noise Hamiltonians"};
  app.require_subcommand(1);

  wndyn::cli::CliOptions opts;
  std::uint64_t seed_arg = 0;

  CLI::App* run = app.add_subcommand("run", "run one experiment from a config");
  run->add_option("--config", opts.config_path, "JSON config file")->required();
  CLI::Option* seed_opt =
      run->add_option("--seed", seed_arg, "override the config seed");
  run->add_option("--out", opts.out_dir, "output directory");

  CLI::App* validate =
      app.add_subcommand("validate", "check a config without running it");
  validate->add_option("--config", opts.config_path, "JSON config file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (seed_opt->count() > 0) opts.seed = seed_arg;
    return wndyn::cli::run_command(opts);
  }
  return wndyn::cli::validate_command(opts);
}
