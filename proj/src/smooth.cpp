#include "kgs/smooth.hpp"

#include <stdexcept>

namespace kgs {

Jet poly_smoothstep01(const Jet& u) {
  if (u.value() <= 0.0) return Jet();
  if (u.value() >= 1.0) return Jet::constant(1.0);
  // S_8(u) = u^9 sum_{n=0}^{8} C(8+n,n) C(17,8-n) (-u)^n
  static const double coef[9] = {24310.0,   -175032.0, 556920.0,
                                 -1021020.0, 1178100.0, -875160.0,
                                 408408.0,  -109395.0, 12870.0};
  Jet p = Jet::constant(coef[8]);
  for (int n = 7; n >= 0; --n) p = p * u + coef[n];
  Jet u9 = u;
  for (int i = 0; i < 8; ++i) u9 = u9 * u;
  return u9 * p;
}

SmoothFunction smooth_indicator_poly(double a, double b, double ramp) {
  if (!(b - a >= 2.0 * ramp) || !(ramp > 0))
    throw std::invalid_argument("smooth_indicator_poly: need b - a >= 2*ramp > 0");
  SmoothFunction f;
  f.support_lo = a;
  f.support_hi = b;
  f.knots = {a, a + ramp, b - ramp, b};
  f.fn = [a, b, ramp](const Jet& x) {
    Jet up = poly_smoothstep01((x - a) * (1.0 / ramp));
    Jet down = poly_smoothstep01((b - x) * (1.0 / ramp));
    return up * down;
  };
  return f;
}

SmoothFunction smooth_indicator(double a, double b, double ramp) {
  if (!(b - a >= 2.0 * ramp) || !(ramp > 0))
    throw std::invalid_argument("smooth_indicator: need b - a >= 2*ramp > 0");
  SmoothFunction f;
  f.support_lo = a;
  f.support_hi = b;
  f.knots = {a, a + ramp, b - ramp, b};
  f.fn = [a, b, ramp](const Jet& x) {
    Jet up = smoothstep01((x - a) * (1.0 / ramp));
    Jet down = smoothstep01((b - x) * (1.0 / ramp));
    return up * down;
  };
  return f;
}

SmoothFunction smooth_outer(double c, double ramp) {
  if (!(c >= 0) || !(ramp > 0))
    throw std::invalid_argument("smooth_outer: need c >= 0, ramp > 0");
  SmoothFunction f;
  f.fn = [c, ramp](const Jet& x) {
    // |x| handled by branch; the kink at 0 sits inside the flat zero zone.
    Jet ax = x.value() >= 0.0 ? x : -x;
    if (c == 0.0 && std::abs(x.value()) < 1e-300) return Jet();
    return smoothstep01((ax - c) * (1.0 / ramp));
  };
  return f;
}

SmoothFunction gaussian_profile(double x0, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("gaussian_profile: sigma > 0");
  SmoothFunction f;
  f.fn = [x0, sigma](const Jet& x) {
    Jet u = (x - x0) * (1.0 / sigma);
    return exp(-0.5 * (u * u));
  };
  return f;
}

}  // namespace kgs
