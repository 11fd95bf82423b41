#include "kgs/errors.hpp"

namespace kgs {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonHermitian: return "NonHermitian";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RankDeficientBasis: return "RankDeficientBasis";
    case ErrorCode::NotKreinSelfadjoint: return "NotKreinSelfadjoint";
    case ErrorCode::ClusterAmbiguity: return "ClusterAmbiguity";
    case ErrorCode::EigenvalueOnContour: return "EigenvalueOnContour";
    case ErrorCode::QuadratureDiverged: return "QuadratureDiverged";
    case ErrorCode::NoCertifiedPolynomial: return "NoCertifiedPolynomial";
    case ErrorCode::CriticalBoundary: return "CriticalBoundary";
    case ErrorCode::SupportTouchesCriticalPoint: return "SupportTouchesCriticalPoint";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::SampleTooCloseToSpectrum: return "SampleTooCloseToSpectrum";
    case ErrorCode::NotPositive: return "NotPositive";
    case ErrorCode::ZeroEnergyResonance: return "ZeroEnergyResonance";
    case ErrorCode::LongRangeDominates: return "LongRangeDominates";
    case ErrorCode::OverflowAtExponentialGrowth: return "OverflowAtExponentialGrowth";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::WindowTouchesThreshold: return "WindowTouchesThreshold";
    case ErrorCode::CriticalThreshold: return "CriticalThreshold";
    case ErrorCode::ClassificationAmbiguous: return "ClassificationAmbiguous";
    case ErrorCode::ShortRangeViolated: return "ShortRangeViolated";
    case ErrorCode::BranchCollapse: return "BranchCollapse";
    case ErrorCode::BandwidthExceeded: return "BandwidthExceeded";
    case ErrorCode::PhaseNotCertified: return "PhaseNotCertified";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ModelBuildFailed: return "ModelBuildFailed";
    case ErrorCode::SweepTooCoarse: return "SweepTooCoarse";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace kgs
