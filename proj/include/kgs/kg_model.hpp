#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kgs/errors.hpp"
#include "kgs/types.hpp"

namespace kgs {

using Profile = std::function<double(double)>;

struct Grid1D {
  double half_width = 0.0;  // X
  int points = 0;           // N
  double dx = 0.0;          // 2X/N
  RVec nodes;               // cell-centered, symmetric about 0
};

/// Cell-centered Dirichlet grid on [-X, X]. N >= 16.
Grid1D make_grid(double X, int N);

struct CoefficientSet {
  Profile a, b, c, m_x;  // metric, magnetic, weight, variable mass
  double m_inf = 1.0;    // asymptotic mass
  double mu0 = 1.0;      // decay exponent of a-1, b, c-1, m_x - m_inf
};

CoefficientSet flat_coefficients(double m_inf);

struct PotentialSplit {
  Profile v_s, v_l;  // v = v_s + v_l
  double mu_s = 2.0;
  double mu_l = 0.5;
  int lr_sign = 0;  // +1 / -1 per hypothesis (C); 0 = no long-range part

  double v(double x) const { return v_s(x) + v_l(x); }
};

PotentialSplit zero_potential();

/// eps^2 = c^{-1} (D-b) a (D-b) c^{-1} + m^2 on the grid, assembled as a
/// symmetric product of staggered difference factors with symmetric link
/// phases for b (exactly hermitian, exactly gauge covariant).
/// Throws NotPositive.
CMat build_epsilon2(const Grid1D& g, const CoefficientSet& coef);

struct KGOperators {
  Grid1D grid;
  double m_inf = 1.0;

  CMat eps2;      // N x N
  CMat eps2_inf;  // free reference -Delta + m_inf^2
  CMat eps_inf;   // PSD square root
  CMat eps_inf_inv;

  CMat B;      // 2N x 2N generator
  CMat M_h;    // energy Gram diag(eps2 - v^2, 1)
  CMat B_inf;  // free generator
  CMat M_h_inf;

  CMat b_op;   // (eps2 - v_l^2)^{1/2} after support adjustment
  CMat b_inv;

  CMat U, U_inv, U_inf, U_inf_inv;
  CMat L, L0, Vl_block, Vs_block, K;  // reduced operators, 2N x 2N
  CMat L_inf;                          // diag(eps_inf, -eps_inf)

  RVec v, v_s, v_l;  // node samples after the long-range support adjustment
  double adjustment_radius = 0.0;  // 0 = no adjustment applied

  double m0_sq = 0.0;   // min m_x^2 (E1 lower bound)
  double m_grid = 0.0;  // bottom of the discrete free branch
  int kappa = 0;        // negative eigenvalue count of eps2 - v^2

  // cached hermitian eigendecompositions
  RVec energy_evals;  CMat energy_evecs;    // of eps2 - v^2
  RVec eps_inf_evals; CMat eps_inf_evecs;   // of eps2_inf

  double diag_residual = 0.0;  // ||L - U B U^{-1}|| / ||L||

  int n() const { return grid.points; }
  int dim2() const { return 2 * grid.points; }

  // Forms carry the dx weight of the reference l^2 inner product.
  Complex h_form(const CVec& f, const CVec& g) const;
  Complex h_inf_form(const CVec& f, const CVec& g) const;
  Complex omega_form(const CVec& f, const CVec& g) const;   // interacting v
  Complex omega_inf_form(const CVec& f, const CVec& g) const;  // v = 0
  Complex charge_form(const CVec& f, const CVec& g) const;  // q = i omega
  Complex k_form(const CVec& u, const CVec& w) const;  // (u|(1+K)w) dx
  double l2_norm(const CVec& f) const;
};

/// Assemble the full model. Throws ZeroEnergyResonance, LongRangeDominates,
/// NotPositive.
KGOperators build_generator(const Grid1D& g, const CoefficientSet& coef,
                            const PotentialSplit& pot);

/// fbar omega g = -i (f0.g1 + f1.g0 - 2 f0.(v g0)) with the dx weight.
Complex symplectic_form(const CVec& f, const CVec& g, const RVec& v, double dx);

/// | fbar omega g - i h[f, B^{-1} g] |  (Eq.-level consistency, dense solve).
double symplectic_energy_bridge_residual(const KGOperators& model,
                                         const CVec& f, const CVec& g);

struct HypothesisEntry {
  std::string name;
  bool pass = false;
  double margin = 0.0;
  std::string detail;
  bool proxy = false;
};

struct HypothesisReport {
  std::vector<HypothesisEntry> entries;
  int neg_index_energy = 0;  // kappa of M_h

  bool all_pass() const;
  const HypothesisEntry* find(const std::string& name) const;
};

HypothesisReport check_hypotheses(const KGOperators& model,
                                  const CoefficientSet& coef,
                                  const PotentialSplit& pot);

}  // namespace kgs
