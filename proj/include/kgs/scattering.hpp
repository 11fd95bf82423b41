#pragma once

#include <map>
#include <string>
#include <vector>

#include "kgs/definitize.hpp"
#include "kgs/dynamics.hpp"
#include "kgs/kg_model.hpp"

namespace kgs {

struct WavePacketSpec {
  double x0 = 0.0;     // center
  double xi0 = 1.0;    // momentum
  double sigma = 2.0;  // width
  enum class Shell { Upper, Lower } shell = Shell::Upper;
};

/// Gaussian packet on the chosen L_inf shell, mapped to the B-representation
/// and normalized to unit h_inf norm. Validates support and momentum band.
CVec make_packet(const KGOperators& model, const WavePacketSpec& spec);

struct Decomposition {
  CMat P_pp, P_scatt;
  int pp_rank = 0;
  double selfadjoint_residual = 0.0;   // max over both projections, vs M_h
  double idempotent_residual = 0.0;
  double h_orthogonality = 0.0;        // max |h[u_pp, u_scatt]| over probes
  double omega_orthogonality = 0.0;
  double cross_norm = 0.0;             // ||P_pp P_scatt||
};

/// E = E_pp + E_scatt: complex-pair Riesz subspaces plus localized discrete
/// real eigenvalues vs the rest. Throws CriticalThreshold,
/// ClassificationAmbiguous.
Decomposition bound_scatt_decomposition(const KGOperators& model,
                                        const Propagator& P_B,
                                        const SpectrumClassification& S);

struct EikonalPhase {
  RVec x_nodes, xi_nodes;
  RMat phi_plus, phi_minus;    // phase samples, (N_x, N_xi)
  RMat dphi_plus, dphi_minus;  // d/dx samples
  double R = 0.0, alpha = 0.0, sigma_region = 0.0;  // Gamma(R, alpha, sigma)
  double m_inf = 1.0;
  double max_residual = 0.0;     // eikonal plug-back on Gamma samples
  double correction_coeff = 0.0; // empirical C in |phi - x xi| <= C <x>^{1-mu}
  bool certified = false;
};

/// Closed-form 1D flat-metric eikonal phases, integrated from phi(0, xi) = 0.
/// Off Gamma the correction is evaluated at clamped momentum and ramped to 0
/// below alpha/2. Throws BranchCollapse.
EikonalPhase eikonal_phase_1d(const PotentialSplit& pot, double m_inf,
                              const Grid1D& grid, double R, double alpha,
                              double sigma_region = 0.9);

/// j(phi, a) u by DFT in y and momentum quadrature; a = nullptr means a == 1.
/// Throws BandwidthExceeded.
CVec fio_apply(const EikonalPhase& phase, bool plus_branch,
               const std::function<double(double, double)>& amplitude,
               const CVec& u, double dx);

/// Dense matrix of j(phi_pm, a) on the grid.
CMat fio_matrix(const EikonalPhase& phase, bool plus_branch,
                const std::function<double(double, double)>& amplitude,
                double dx);

/// Time-independent modifier
/// T = s/2 [[j+ - j-, -(j+ + j-) eps_inf^{-1}], [-(j+ + j-) eps_inf, j+ - j-]].
/// Throws PhaseNotCertified.
CMat build_modifier_T(const KGOperators& model, const EikonalPhase& phase,
                      int lr_sign);

/// U^{-1} (sign diag(1,-1)) J2 U_inf with b^{-1}-conjugated FIO blocks.
CMat build_jhat_proxy(const KGOperators& model, const EikonalPhase& phase,
                      int lr_sign);

struct PacketRecord {
  WavePacketSpec spec;
  double completeness_defect = 0.0;  // ||(1 - P_scatt) raw|| at horizon T
  double intertwining_residual = 0.0;
  double increment_T = 0.0;     // ||f(T) - f(T/2)||
  double increment_half = 0.0;  // ||f(T/2) - f(T/4)||
  double convergence_ratio = 0.0;
  double inverse_residual = 0.0;  // short-range only
};

struct ScatteringReport {
  std::vector<PacketRecord> packets;
  std::vector<CVec> f_out;  // produced asymptotes at horizon T
  double horizon_T = 0.0;
  int direction = +1;
  bool modified = false;

  double unitarity_defect = 0.0;       // max over packet pairs at T
  double unitarity_defect_half = 0.0;  // same at T/2
  double max_completeness_defect = 0.0;
  double max_intertwining_residual = 0.0;
  double mean_convergence_ratio = 0.0;
  double max_inverse_residual = 0.0;
  double symplectic_residual = 0.0;  // |f omega g - free omega| max over pairs
};

struct WaveOpInputs {
  const KGOperators* model = nullptr;
  const Propagator* P_B = nullptr;
  const Propagator* P_B_inf = nullptr;
  const Decomposition* decomp = nullptr;
};

/// Short-range wave operator at finite horizons {T/4, T/2, T}.
/// Requires v_l == 0. Throws ShortRangeViolated, HorizonExceeded.
ScatteringReport short_range_wave_operator(const WaveOpInputs& in,
                                           const std::vector<WavePacketSpec>& packets,
                                           double T, int direction);

/// Long-range wave operator with the modifier T_mod (pass identity for the
/// ablation probe). Throws HorizonExceeded, PhaseNotCertified.
ScatteringReport long_range_wave_operator(const WaveOpInputs& in,
                                          const CMat& T_mod,
                                          const std::vector<WavePacketSpec>& packets,
                                          double T, int direction);

}  // namespace kgs
