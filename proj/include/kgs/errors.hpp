#pragma once

#include <stdexcept>
#include <string>

namespace kgs {

enum class ErrorCode {
  NonHermitian,
  Degenerate,
  DimensionMismatch,
  RankDeficientBasis,
  NotKreinSelfadjoint,
  ClusterAmbiguity,
  EigenvalueOnContour,
  QuadratureDiverged,
  NoCertifiedPolynomial,
  CriticalBoundary,
  SupportTouchesCriticalPoint,
  QuadratureNotConverged,
  SampleTooCloseToSpectrum,
  NotPositive,
  ZeroEnergyResonance,
  LongRangeDominates,
  OverflowAtExponentialGrowth,
  HorizonExceeded,
  WindowTouchesThreshold,
  CriticalThreshold,
  ClassificationAmbiguous,
  ShortRangeViolated,
  BranchCollapse,
  BandwidthExceeded,
  PhaseNotCertified,
  ConfigInvalid,
  ModelBuildFailed,
  SweepTooCoarse,
  Internal,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace kgs
