#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "giem/errors.hpp"
#include "giem/experiment.hpp"

namespace {

int execute(const std::string& config_path, const std::string& out_dir, bool verify_only) {
  giem::ExperimentConfig cfg;
  try {
    cfg = giem::load_config(config_path);
  } catch (const giem::Error& e) {
    std::cerr << "giem-renorm: " << e.what() << '\n';
    return 1;
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;

  const auto rep = giem::run_experiment(cfg, verify_only);
  std::cout << "precision " << rep.precision << ", " << rep.levels << " levels, stop: " << rep.stop_reason << '\n';
  for (const auto& c : rep.checks) std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  for (const auto& [name, f] : rep.fits)
    std::cout << "fit " << name << ": slope " << giem::format_number(f.slope) << ", residual "
              << giem::format_number(f.residual) << " over " << f.points << " points\n";
  if (!verify_only) std::cout << "wrote " << rep.files.size() << " files to " << cfg.output_dir << '\n';
  if (!rep.error.empty()) std::cerr << "giem-renorm: " << rep.error << '\n';
  return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rauzy-Veech renormalization experiments for genus-one generalized interval exchanges"};
  app.require_subcommand(1);

  std::string config, out;
  auto* run = app.add_subcommand("run", "run the experiments of a config and write CSV reports");
  run->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory (overrides the config)");

  std::string verify_config;
  auto* verify = app.add_subcommand("verify", "run only the checks of a config");
  verify->add_option("--config", verify_config, "JSON config")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  if (*run) return execute(config, out, false);
  return execute(verify_config, "", true);
}
