#pragma once

#include <array>
#include <cmath>
#include <functional>

namespace kgs {

/// Truncated Taylor series at a point (value + derivatives/r!).
/// Arithmetic on jets propagates exact derivatives through any expression
/// built from +,-,*,/,exp,sqrt, which is how the C-infinity cutoffs and
/// bumps below expose machine-accurate high-order derivatives.
class Jet {
 public:
  static constexpr int kLen = 10;  // orders 0..9

  Jet() { c.fill(0.0); }
  static Jet constant(double v) {
    Jet j;
    j.c[0] = v;
    return j;
  }
  static Jet variable(double x) {
    Jet j;
    j.c[0] = x;
    j.c[1] = 1.0;
    return j;
  }

  double value() const { return c[0]; }
  /// r-th derivative (r! * coefficient).
  double deriv(int r) const {
    double f = 1.0;
    for (int k = 2; k <= r; ++k) f *= k;
    return c[r] * f;
  }

  std::array<double, kLen> c;
};

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r;
  for (int i = 0; i < Jet::kLen; ++i) r.c[i] = a.c[i] + b.c[i];
  return r;
}
inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r;
  for (int i = 0; i < Jet::kLen; ++i) r.c[i] = a.c[i] - b.c[i];
  return r;
}
inline Jet operator-(const Jet& a) {
  Jet r;
  for (int i = 0; i < Jet::kLen; ++i) r.c[i] = -a.c[i];
  return r;
}
inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  for (int i = 0; i < Jet::kLen; ++i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += a.c[j] * b.c[i - j];
    r.c[i] = s;
  }
  return r;
}
inline Jet operator*(double s, const Jet& a) {
  Jet r;
  for (int i = 0; i < Jet::kLen; ++i) r.c[i] = s * a.c[i];
  return r;
}
inline Jet operator*(const Jet& a, double s) { return s * a; }
inline Jet operator+(const Jet& a, double s) { return a + Jet::constant(s); }
inline Jet operator+(double s, const Jet& a) { return a + Jet::constant(s); }
inline Jet operator-(double s, const Jet& a) { return Jet::constant(s) - a; }
inline Jet operator-(const Jet& a, double s) { return a - Jet::constant(s); }

inline Jet operator/(const Jet& a, const Jet& b) {
  Jet r;
  r.c[0] = a.c[0] / b.c[0];
  for (int i = 1; i < Jet::kLen; ++i) {
    double s = a.c[i];
    for (int j = 1; j <= i; ++j) s -= b.c[j] * r.c[i - j];
    r.c[i] = s / b.c[0];
  }
  return r;
}

inline Jet exp(const Jet& a) {
  Jet r;
  r.c[0] = std::exp(a.c[0]);
  for (int i = 1; i < Jet::kLen; ++i) {
    double s = 0.0;
    for (int j = 1; j <= i; ++j) s += j * a.c[j] * r.c[i - j];
    r.c[i] = s / i;
  }
  return r;
}

inline Jet sqrt(const Jet& a) {
  Jet r;
  r.c[0] = std::sqrt(a.c[0]);
  for (int i = 1; i < Jet::kLen; ++i) {
    double s = a.c[i];
    for (int j = 1; j < i; ++j) s -= r.c[j] * r.c[i - j];
    r.c[i] = s / (2.0 * r.c[0]);
  }
  return r;
}

/// A C-infinity real function exposed through jet evaluation.
struct SmoothFunction {
  std::function<Jet(const Jet&)> fn;
  double support_lo = -1e300;
  double support_hi = 1e300;
  std::vector<double> knots;  // piecewise-smooth joints (ramp edges)

  double operator()(double x) const { return fn(Jet::variable(x)).value(); }
  double deriv(double x, int r) const { return fn(Jet::variable(x)).deriv(r); }
  Jet jet(double x) const { return fn(Jet::variable(x)); }
};

/// psi(u) = exp(-1/u) for u>0, else 0 (flat at 0).
inline Jet bump_seed(const Jet& u) {
  if (u.value() <= 1e-12) return Jet();  // identically 0 branch, all derivatives 0
  return exp(-(Jet::constant(1.0) / u));
}

/// Monotone smooth step: 0 for u<=0, 1 for u>=1.
inline Jet smoothstep01(const Jet& u) {
  if (u.value() <= 1e-12) return Jet();
  if (u.value() >= 1.0 - 1e-12) return Jet::constant(1.0);
  Jet a = bump_seed(u);
  Jet b = bump_seed(1.0 - u);
  return a / (a + b);
}

/// Cutoff chi: 1 on |s|<=1/2, 0 on |s|>=1 (even, smooth).
inline Jet chi_cutoff(const Jet& s) { return smoothstep01(2.0 - 2.0 * (s * s)); }

/// Same shape with the C^8 polynomial step (tame derivatives for quadrature).
Jet poly_smoothstep01(const Jet& u);
inline Jet chi_cutoff_poly(const Jet& s) {
  return poly_smoothstep01(2.0 - 2.0 * (s * s));
}

/// Polynomial smoothstep of class C^8 (degree 17): 0 for u<=0, 1 for u>=1.
/// Unlike the exp-based step its high-order derivatives stay resolvable,
/// which the almost-analytic quadrature needs.

/// F(a <= x <= b): smooth indicator, 1 on [a+ramp, b-ramp], 0 outside [a, b].
SmoothFunction smooth_indicator(double a, double b, double ramp);

/// Same shape with C^8 polynomial ramps (preferred for hs_functional_calculus).
SmoothFunction smooth_indicator_poly(double a, double b, double ramp);

/// F(|x| >= c): 0 on |x|<=c, 1 on |x|>=c+ramp.
SmoothFunction smooth_outer(double c, double ramp);

/// Gaussian exp(-(x-x0)^2/(2 sigma^2)) (not compactly supported).
SmoothFunction gaussian_profile(double x0, double sigma);

}  // namespace kgs
