#pragma once

#include <map>
#include <vector>

#include "kgs/kg_model.hpp"
#include "kgs/smooth.hpp"
#include "kgs/types.hpp"

namespace kgs {

enum class PropagatorMethod { HermitianSimilarity, Spectral, SchurPade };

/// e^{-itG} through a cached factorization of -iG.
struct Propagator {
  PropagatorMethod method = PropagatorMethod::Spectral;
  CMat generator;  // G

  // spectral form: -iG = V diag(mu) V^{-1}
  CMat V, V_inv;
  CVec mu;

  // Schur form: -iG = Q T Q*
  CMat Q, T;
  mutable std::map<double, CMat> exp_cache;  // per-time exponentials (Schur path)

  double reconstruction_residual = 0.0;  // vs -iG, relative
  double eigenvector_condition = 0.0;
  double growth_rate = 0.0;  // max Re(mu)

  const char* method_tag() const;
  CVec apply(const CVec& f, double t) const;  // e^{-itG} f
  CMat matrix(double t) const;
};

/// Generic factorization: spectral when cond(V) < cond_cap, complex Schur
/// with per-time Pade exponentials otherwise.
Propagator make_propagator(const CMat& G, double cond_cap = 1e6);

/// Exact-arithmetic spectral form for positive-definite Gram: G is similar
/// to the hermitian S_half G S_half_inv.
Propagator make_propagator_hermitian(const CMat& G, const CMat& S_half,
                                     const CMat& S_half_inv);

/// Propagators for the assembled model (B-space and reduced L-space pick the
/// hermitian route when kappa = 0).
Propagator make_propagator_B(const KGOperators& model);
Propagator make_propagator_L(const KGOperators& model);
Propagator make_propagator_B_inf(const KGOperators& model);
Propagator make_propagator_L_inf(const KGOperators& model);

/// e^{-itG} f with an overflow guard. Throws OverflowAtExponentialGrowth.
CVec evolve(const Propagator& P, const CVec& f, double t);

enum class GrowthClass { Bounded, Polynomial, Exponential };
const char* growth_class_name(GrowthClass g);

/// Classify a norm curve: bounded, polynomial(k) or exponential(rate).
GrowthClass classify_growth(const std::vector<double>& times,
                            const std::vector<double>& norms, int* poly_order,
                            double* exp_rate, double* fit_residual);

struct TrajectoryReport {
  std::vector<double> times;
  std::vector<double> h_values, q_values, norms;
  double h_drift = 0.0;  // max relative drift
  double q_drift = 0.0;
  GrowthClass growth_class = GrowthClass::Bounded;
  int poly_order = 0;
  double exp_rate = 0.0;
  double fit_residual = 0.0;
};

TrajectoryReport conservation_report(const KGOperators& model,
                                     const Propagator& P, const CVec& f,
                                     const std::vector<double>& times);

/// chi(G) by eigen-filtering through the propagator's spectral data.
CMat energy_filter(const Propagator& P, const SmoothFunction& chi);

struct VelocityDiagnostic {
  std::vector<double> times;
  std::vector<double> theta_values;
  // tail_mass[i][k] = ||1_{|x| >= theta_k t_i} u_t||, relative to ||u||
  std::vector<std::vector<double>> tail_mass;
  std::vector<double> inner_mass;  // ||1_{|x| <= theta0 t} chi(L) u_t|| / ||u||
  double theta0 = 0.0;
  std::string energy_filter_desc;
  bool tail_trend_pass = false;   // terminal <= 0.25 * initial
  bool inner_trend_pass = false;
};

/// Large/minimal velocity decay curves for e^{-itL}.
/// chi must avoid [-m_grid, m_grid] (minimal-velocity precondition).
/// Throws WindowTouchesThreshold, HorizonExceeded.
VelocityDiagnostic velocity_diagnostics(const KGOperators& model,
                                        const Propagator& P_L, const CVec& u,
                                        const SmoothFunction& chi,
                                        const std::vector<double>& theta_list,
                                        double theta0,
                                        const std::vector<double>& times);

/// a = (x D (D^2+m^2)^{-1} + (D^2+m^2)^{-1} D x)/2, hermitian by assembly.
CMat build_conjugate_operator(const Grid1D& g, double m_inf);

struct MourreReport {
  double c0_hat = 0.0;
  double defect = 0.0;
  double c0_plane = 0.0;  // min over the window of |l|^{-3}(l^2 - m^2)
  double window_lo = 0.0, window_hi = 0.0;
};

/// Local commutator positivity probe at lambda0 (|lambda0| > m_grid).
/// Throws WindowTouchesThreshold.
MourreReport mourre_probe(const KGOperators& model, const Propagator& P_L,
                          const CMat& a_scalar, double lambda0, double delta,
                          int n_samples = 12, std::uint64_t seed = 1234);

}  // namespace kgs
