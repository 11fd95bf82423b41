#pragma once

#include <vector>

#include "kgs/krein.hpp"
#include "kgs/smooth.hpp"
#include "kgs/types.hpp"

namespace kgs {

enum class SignChar { Positive, Negative, Indefinite, Degenerate };
const char* sign_char_name(SignChar s);

struct ComplexPairEntry {
  Complex z;       // Im z > 0 representative
  int riesz_rank;  // rank of the Riesz projection = algebraic multiplicity
  int riesz_index; // largest Jordan chain length
};

struct RealPointEntry {
  double lambda;
  int alg_mult;
  int geo_mult;
  int jordan_index;  // nu(lambda)
  SignChar sign_char;
  bool is_critical;  // needs a definitizing factor
};

struct SpectrumClassification {
  std::vector<ComplexPairEntry> complex_pairs;
  std::vector<RealPointEntry> real_points;  // ascending lambda
  double pairing_residual = 0.0;
  double cluster_radius = 0.0;
  double spectral_radius = 0.0;

  std::vector<double> predicted_critical_points() const;
};

/// Cluster the dense nonsymmetric spectrum of a Krein-selfadjoint matrix
/// into conjugate pairs and real points with sign characteristics.
/// Throws NotKreinSelfadjoint, ClusterAmbiguity.
SpectrumClassification classify_spectrum(const KreinOperator& A,
                                         double eta_rel = 1e-7);

/// Riesz projection via trapezoid quadrature on a circle. Node count doubles
/// from quad_points until the projector moves by < 1e-10.
/// Throws EigenvalueOnContour, QuadratureDiverged.
CMat riesz_projection(const CMat& A, Complex center, double radius,
                      int quad_points = 64, double margin = 0.05);

struct DefinitizingPolynomial {
  RVec coeffs;  // real, ascending powers, even degree
  double certificate_residual = 0.0;  // min eig of herm(M p(A)) / norm
  std::vector<double> critical_points;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  double eval(double x) const;
  Complex eval(Complex z) const;
  CMat eval(const CMat& A) const;
};

/// Canonical definitizing polynomial: factor exponents searched smallest
/// total even degree first, PSD certificate on herm(M p(A)).
/// Throws NoCertifiedPolynomial.
DefinitizingPolynomial definitizing_polynomial(const KreinOperator& A,
                                               const SpectrumClassification& S,
                                               double tol = 1e-8);

/// 1_I(A) as a sum of Riesz projections of real eigenvalues inside [lo, hi].
/// Throws CriticalBoundary when an endpoint sits on a critical point.
CMat spectral_projection_interval(const KreinOperator& A,
                                  const SpectrumClassification& S, double lo,
                                  double hi);

/// || E_0 + 1(A) - 1 ||. Contour quadrature for dim <= contour_dim_cap,
/// eigendecomposition-based projections beyond (diagnostic at desk scale).
double completeness_identity(const KreinOperator& A,
                             const SpectrumClassification& S,
                             int contour_dim_cap = 64);

struct AlmostAnalyticExtension {
  int taylor_order = 6;  // N
  double delta = 0.5;    // cutoff width
  SmoothFunction f;
  double support_lo = 0.0, support_hi = 0.0;
  double box_y = 0.0;  // |y| extent of supp f-tilde

  struct Sample {
    double x, y;
    Complex dbar;
  };
  std::vector<Sample> sample_grid;
  double empirical_C = 0.0;  // sup |dbar| <x>^{N+1} / |y|^N over samples

  Complex f_tilde(double x, double y) const;
  Complex dbar_f_tilde(double x, double y) const;
};

AlmostAnalyticExtension make_almost_analytic(const SmoothFunction& f,
                                             int taylor_order = 6,
                                             double delta = 0.5);

struct HsOptions {
  int nx = 16;            // x resolution knob (GL-12 panels = nx/16 per piece)
  int ny_per_level = 14;  // GL order on the chi shell (dyadic bands use half)
  double y_cut = 1e-3;    // |Im z| cut near the axis (integrand is O(y^N))
  double resolvent_cap = 1e13;
  double richardson_tol = 1e-6;  // relative, scaled by ||f||_inf
  int max_refine = 2;
  double critical_margin = 1e-6;
  std::vector<double> critical_points;  // supp f must avoid these
};

/// f(A) by 2D quadrature of (i/2pi) dbar f-tilde (z-A)^{-1} dz wedge dzbar.
/// Throws SupportTouchesCriticalPoint, QuadratureDiverged,
/// QuadratureNotConverged.
CMat hs_functional_calculus(const CMat& A, const SmoothFunction& f,
                            const AlmostAnalyticExtension& ext,
                            const HsOptions& opt = {});

struct ResolventProbeSample {
  Complex z;
  double weighted_q_resolvent;  // ||q(A)(A-z)^{-1}|| |Im z|
  double weighted_resolvent;    // ||(A-z)^{-1}|| |Im z|^{m+1}
};

struct ResolventBoundReport {
  double C_q = 0.0;      // sup of weighted_q_resolvent
  double C_strip = 0.0;  // sup of weighted_resolvent
  int max_real_zero_order = 0;  // m
  std::vector<ResolventProbeSample> samples;
};

/// Empirical constants of the definitizable resolvent bounds.
/// Throws SampleTooCloseToSpectrum.
ResolventBoundReport resolvent_bound_probe(const KreinOperator& A,
                                           const DefinitizingPolynomial& p,
                                           const std::vector<Complex>& z_samples);

}  // namespace kgs
