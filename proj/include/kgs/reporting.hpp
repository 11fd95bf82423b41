#pragma once

#include <json.hpp>

#include "kgs/config.hpp"
#include "kgs/definitize.hpp"
#include "kgs/dynamics.hpp"
#include "kgs/scattering.hpp"

namespace kgs {

inline constexpr const char* kVersion = "0.1.0";

struct ReportBundle {
  nlohmann::json doc;

  /// Atomic write of bundle.json plus any CSV series into dir.
  void write(const std::string& dir,
             const std::vector<std::string>& formats) const;
};

nlohmann::json to_json(const HypothesisReport& rep);
nlohmann::json to_json(const SpectrumClassification& S);
nlohmann::json to_json(const TrajectoryReport& rep);
nlohmann::json to_json(const VelocityDiagnostic& rep);
nlohmann::json to_json(const ScatteringReport& rep);

struct SweepRow {
  double value = 0.0;
  int kappa = 0;
  int complex_pairs = 0;
  double max_im = 0.0;
  double min_energy_eig = 0.0;
  std::string error;  // empty when the point succeeded
};

struct KleinScanResult {
  std::vector<SweepRow> rows;
  bool has_gamma_pos = false;
  double gamma_pos = 0.0;  // bisection-refined positivity loss
  bool has_gamma_cplx = false;
  double gamma_cplx = 0.0;  // first sweep value with a complex pair
  bool ordering_ok = true;  // gamma_cplx >= gamma_pos at sweep resolution
};

/// Coupling sweep: kappa(gamma) and complex-pair onset, gamma_pos bracketed
/// by bisection to 1e-3 relative width. Throws SweepTooCoarse.
KleinScanResult klein_paradox_scan(const ExperimentConfig& cfg, int parallel = 1);

/// Dispatch cfg.command and assemble the bundle. Exit codes: 0 ok,
/// 2 config error, 3 model error, 4 internal (mapped by the CLI).
ReportBundle run_command(const ExperimentConfig& cfg, int parallel = 1);

}  // namespace kgs
