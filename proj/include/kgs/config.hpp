#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgs/kg_model.hpp"
#include "kgs/scattering.hpp"

namespace kgs {

struct SweepSpec {
  std::string param;  // "coupling" or a JSON pointer into the config
  std::vector<double> values;
};

struct FilterSpec {
  double center = 1.5;
  double halfwidth = 0.3;
  double ramp = 0.1;
};

struct ExperimentConfig {
  nlohmann::json echo;  // fully expanded config (re-runnable)

  double X = 60.0;
  int N = 256;
  CoefficientSet coefficients;
  PotentialSplit potential;

  std::string command = "check";
  std::vector<double> times;
  double horizon_T = 40.0;
  int direction = +1;
  bool use_modifier = true;
  std::vector<double> theta_list;
  double theta0 = 0.1;
  FilterSpec filter;
  std::vector<WavePacketSpec> packets;
  std::optional<SweepSpec> sweep;

  double eikonal_R = 10.0;
  double eikonal_alpha = 0.4;

  std::string output_dir = "out";
  std::vector<std::string> formats = {"json"};
  std::uint64_t seed = 42;
};

/// Parse and validate a config JSON; "scenario" expands from the stock
/// library before explicit keys are merged on top.
/// Throws ConfigInvalid with the JSON pointer of the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Stock scenario library.
std::vector<std::string> scenario_names();
nlohmann::json stock_scenario(const std::string& name);

}  // namespace kgs
