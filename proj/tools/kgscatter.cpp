#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "kgs/reporting.hpp"

int main(int argc, char** argv) {
  CLI::App app{"kgscatter - Krein-space spectral and scattering experiments "
               "for charged Klein-Gordon models"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int parallel = 1;
  long long seed = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--parallel", parallel, "sweep worker count")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "override the config seed");
  };

  const std::vector<std::string> commands = {"check", "spectrum", "evolve",
                                             "scatter", "sweep"};
  for (const auto& c : commands) add_common(app.add_subcommand(c));

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    kgs::ExperimentConfig cfg = kgs::load_config(config_path);
    cfg.command = command;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (const char* env = std::getenv("KGSCATTER_OUT")) cfg.output_dir = env;

    const kgs::ReportBundle bundle = kgs::run_command(cfg, parallel);
    bundle.write(cfg.output_dir, cfg.formats);
    std::cout << "wrote " << cfg.output_dir << "/bundle.json\n";
    return 0;
  } catch (const kgs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case kgs::ErrorCode::ConfigInvalid:
        return 2;
      case kgs::ErrorCode::ModelBuildFailed:
      case kgs::ErrorCode::NotPositive:
      case kgs::ErrorCode::ZeroEnergyResonance:
      case kgs::ErrorCode::LongRangeDominates:
        return 3;
      default:
        return 4;
    }
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
