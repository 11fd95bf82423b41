#include "kgs/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>

#include "kgs/expm.hpp"

namespace kgs {

const char* Propagator::method_tag() const {
  switch (method) {
    case PropagatorMethod::HermitianSimilarity: return "hermitian-similarity";
    case PropagatorMethod::Spectral: return "spectral";
    case PropagatorMethod::SchurPade: return "schur-pade";
  }
  return "?";
}

CVec Propagator::apply(const CVec& f, double t) const {
  if (method == PropagatorMethod::SchurPade) return matrix(t) * f;
  CVec c = V_inv * f;
  for (int i = 0; i < c.size(); ++i) c(i) *= std::exp(t * mu(i));
  return V * c;
}

CMat Propagator::matrix(double t) const {
  if (method == PropagatorMethod::SchurPade) {
    auto it = exp_cache.find(t);
    if (it == exp_cache.end()) {
      if (exp_cache.size() > 64) exp_cache.clear();
      it = exp_cache.emplace(t, expm(CMat(t * T))).first;
    }
    return Q * it->second * Q.adjoint();
  }
  CVec e(mu.size());
  for (int i = 0; i < mu.size(); ++i) e(i) = std::exp(t * mu(i));
  return V * e.asDiagonal() * V_inv;
}

namespace {

double spectral_reconstruction_residual(const Propagator& P) {
  const CMat miG = Complex(0, -1) * P.generator;
  if (P.method == PropagatorMethod::SchurPade)
    return (P.Q * P.T * P.Q.adjoint() - miG).norm() / std::max(1.0, miG.norm());
  return (P.V * P.mu.asDiagonal() * P.V_inv - miG).norm() /
         std::max(1.0, miG.norm());
}

}  // namespace

Propagator make_propagator(const CMat& G, double cond_cap) {
  Propagator P;
  P.generator = G;
  Eigen::ComplexEigenSolver<CMat> es(G, true);
  const CMat& V = es.eigenvectors();
  Eigen::PartialPivLU<CMat> lu(V);
  const CMat Vinv = lu.inverse();
  const double cond = V.norm() * Vinv.norm();  // Frobenius bound on cond_2
  P.eigenvector_condition = cond;
  if (cond < cond_cap) {
    P.method = PropagatorMethod::Spectral;
    P.V = V;
    P.V_inv = Vinv;
    P.mu = Complex(0, -1) * es.eigenvalues();
  } else {
    P.method = PropagatorMethod::SchurPade;
    Eigen::ComplexSchur<CMat> sch(Complex(0, -1) * G);
    P.Q = sch.matrixU();
    P.T = sch.matrixT();
  }
  P.growth_rate = 0.0;
  if (P.method == PropagatorMethod::Spectral)
    for (int i = 0; i < P.mu.size(); ++i)
      P.growth_rate = std::max(P.growth_rate, std::abs(P.mu(i).real()));
  else
    for (int i = 0; i < P.T.rows(); ++i)
      P.growth_rate = std::max(P.growth_rate, std::abs(P.T(i, i).real()));
  P.reconstruction_residual = spectral_reconstruction_residual(P);
  return P;
}

Propagator make_propagator_hermitian(const CMat& G, const CMat& S_half,
                                     const CMat& S_half_inv) {
  Propagator P;
  P.generator = G;
  P.method = PropagatorMethod::HermitianSimilarity;
  CMat S = S_half * G * S_half_inv;
  S = 0.5 * (S + S.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(S);
  P.V = S_half_inv * es.eigenvectors();
  P.V_inv = es.eigenvectors().adjoint() * S_half;
  P.mu = Complex(0, -1) * es.eigenvalues().cast<Complex>();
  P.growth_rate = 0.0;
  P.eigenvector_condition = P.V.norm() * P.V_inv.norm();
  P.reconstruction_residual = spectral_reconstruction_residual(P);
  return P;
}

namespace {

CMat gram_half(const KGOperators& model, bool inverse) {
  // M_h = diag(eps^2 - v^2, 1); kappa = 0 so the sqrt exists
  const int N = model.n();
  RVec d(N);
  for (int i = 0; i < N; ++i)
    d(i) = inverse ? 1.0 / std::sqrt(model.energy_evals(i))
                   : std::sqrt(model.energy_evals(i));
  CMat half = CMat::Zero(2 * N, 2 * N);
  half.block(0, 0, N, N) =
      model.energy_evecs * d.asDiagonal() * model.energy_evecs.adjoint();
  half.block(N, N, N, N) = CMat::Identity(N, N);
  return half;
}

}  // namespace

Propagator make_propagator_B(const KGOperators& model) {
  if (model.kappa == 0)
    return make_propagator_hermitian(model.B, gram_half(model, false),
                                     gram_half(model, true));
  return make_propagator(model.B);
}

Propagator make_propagator_L(const KGOperators& model) {
  if (model.kappa == 0) {
    // 1 + K > 0; S_half from its hermitian eigendecomposition
    const int n2 = model.dim2();
    CMat OneK = CMat::Identity(n2, n2) + model.K;
    OneK = 0.5 * (OneK + OneK.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(OneK);
    RVec dh(n2), dhi(n2);
    for (int i = 0; i < n2; ++i) {
      dh(i) = std::sqrt(es.eigenvalues()(i));
      dhi(i) = 1.0 / dh(i);
    }
    const CMat half = es.eigenvectors() * dh.asDiagonal() * es.eigenvectors().adjoint();
    const CMat half_inv =
        es.eigenvectors() * dhi.asDiagonal() * es.eigenvectors().adjoint();
    return make_propagator_hermitian(model.L, half, half_inv);
  }
  return make_propagator(model.L);
}

Propagator make_propagator_B_inf(const KGOperators& model) {
  const int n2 = model.dim2();
  return make_propagator_hermitian(
      model.B_inf,
      [&] {
        CMat h = CMat::Zero(n2, n2);
        h.block(0, 0, model.n(), model.n()) = model.eps_inf;
        h.block(model.n(), model.n(), model.n(), model.n()) =
            CMat::Identity(model.n(), model.n());
        return h;
      }(),
      [&] {
        CMat h = CMat::Zero(n2, n2);
        h.block(0, 0, model.n(), model.n()) = model.eps_inf_inv;
        h.block(model.n(), model.n(), model.n(), model.n()) =
            CMat::Identity(model.n(), model.n());
        return h;
      }());
}

Propagator make_propagator_L_inf(const KGOperators& model) {
  Propagator P;
  P.generator = model.L_inf;
  P.method = PropagatorMethod::HermitianSimilarity;
  const int N = model.n(), n2 = model.dim2();
  P.V = CMat::Zero(n2, n2);
  P.V.block(0, 0, N, N) = model.eps_inf_evecs;
  P.V.block(N, N, N, N) = model.eps_inf_evecs;
  P.V_inv = P.V.adjoint();
  CVec mu(n2);
  for (int i = 0; i < N; ++i) {
    const double e = std::sqrt(model.eps_inf_evals(i));
    mu(i) = Complex(0, -e);
    mu(N + i) = Complex(0, e);
  }
  P.mu = mu;
  P.eigenvector_condition = P.V.norm() * P.V_inv.norm();
  P.reconstruction_residual = spectral_reconstruction_residual(P);
  return P;
}

CVec evolve(const Propagator& P, const CVec& f, double t) {
  if (P.growth_rate * std::abs(t) > 690.0)
    fail(ErrorCode::OverflowAtExponentialGrowth,
         "e^{|Im z| t} exceeds floating range at growth rate " +
             std::to_string(P.growth_rate));
  return P.apply(f, t);
}

const char* growth_class_name(GrowthClass g) {
  switch (g) {
    case GrowthClass::Bounded: return "bounded";
    case GrowthClass::Polynomial: return "polynomial";
    case GrowthClass::Exponential: return "exponential";
  }
  return "?";
}

TrajectoryReport conservation_report(const KGOperators& model,
                                     const Propagator& P, const CVec& f,
                                     const std::vector<double>& times) {
  TrajectoryReport rep;
  rep.times = times;
  const double h0 = model.h_form(f, f).real();
  const double q0 = model.charge_form(f, f).real();
  for (double t : times) {
    const CVec ft = evolve(P, f, t);
    const double h = model.h_form(ft, ft).real();
    const double q = model.charge_form(ft, ft).real();
    rep.h_values.push_back(h);
    rep.q_values.push_back(q);
    rep.norms.push_back(model.l2_norm(ft));
    rep.h_drift = std::max(rep.h_drift, std::abs(h - h0) / std::max(1.0, std::abs(h0)));
    rep.q_drift = std::max(rep.q_drift, std::abs(q - q0) / std::max(1.0, std::abs(q0)));
  }

  rep.growth_class = classify_growth(times, rep.norms, &rep.poly_order,
                                     &rep.exp_rate, &rep.fit_residual);
  return rep;
}

GrowthClass classify_growth(const std::vector<double>& times,
                            const std::vector<double>& norms, int* poly_order,
                            double* exp_rate, double* fit_residual) {
  const int n = static_cast<int>(times.size());
  if (n < 4) return GrowthClass::Bounded;
  const double n0 = norms.front();
  const double nmax = *std::max_element(norms.begin(), norms.end());
  if (nmax <= 2.0 * std::max(n0, 1e-300)) return GrowthClass::Bounded;

  // least squares of log n against t (exponential) and log(1+t) (polynomial)
  double st = 0, st2 = 0, sl = 0, stl = 0;
  double su = 0, su2 = 0, sul = 0;
  for (int i = 0; i < n; ++i) {
    const double t = times[i], l = std::log(std::max(norms[i], 1e-300));
    const double u = std::log1p(t);
    st += t; st2 += t * t; sl += l; stl += t * l;
    su += u; su2 += u * u; sul += u * l;
  }
  const double rate = (n * stl - st * sl) / (n * st2 - st * st);
  const double pord = (n * sul - su * sl) / (n * su2 - su * su);
  double res_exp = 0, res_pol = 0;
  const double be = (sl - rate * st) / n, bp = (sl - pord * su) / n;
  for (int i = 0; i < n; ++i) {
    const double l = std::log(std::max(norms[i], 1e-300));
    res_exp += std::pow(l - (be + rate * times[i]), 2);
    res_pol += std::pow(l - (bp + pord * std::log1p(times[i])), 2);
  }
  if (res_exp < res_pol) {
    if (exp_rate) *exp_rate = rate;
    if (fit_residual) *fit_residual = std::sqrt(res_exp / n);
    return GrowthClass::Exponential;
  }
  if (poly_order) *poly_order = static_cast<int>(std::lround(pord));
  if (fit_residual) *fit_residual = std::sqrt(res_pol / n);
  return GrowthClass::Polynomial;
}

CMat energy_filter(const Propagator& P, const SmoothFunction& chi) {
  if (P.method == PropagatorMethod::SchurPade)
    fail(ErrorCode::Internal, "energy_filter needs a spectral-form propagator");
  CVec w(P.mu.size());
  for (int i = 0; i < P.mu.size(); ++i) {
    const Complex lambda = Complex(0, 1) * P.mu(i);  // recover generator eigenvalue
    w(i) = chi(lambda.real());
  }
  return P.V * w.asDiagonal() * P.V_inv;
}

VelocityDiagnostic velocity_diagnostics(const KGOperators& model,
                                        const Propagator& P_L, const CVec& u,
                                        const SmoothFunction& chi,
                                        const std::vector<double>& theta_list,
                                        double theta0,
                                        const std::vector<double>& times) {
  const Grid1D& g = model.grid;
  const int N = g.points;
  if (chi.support_lo <= model.m_grid && chi.support_hi >= -model.m_grid)
    if (!(chi.support_hi < -model.m_grid || chi.support_lo > model.m_grid))
      fail(ErrorCode::WindowTouchesThreshold,
           "chi support meets [-m_grid, m_grid]; minimal-velocity probe needs "
           "chi in C0^inf(R \\ [-m, m])");

  // boundary-reflection horizon from the packet's initial support
  double mass = 0.0;
  RVec site(N);
  for (int j = 0; j < N; ++j) {
    site(j) = std::norm(u(j)) + std::norm(u(N + j));
    mass += site(j);
  }
  double r0 = 0.0, acc = 0.0;
  std::vector<int> order(N);
  for (int j = 0; j < N; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(g.nodes(a)) < std::abs(g.nodes(b));
  });
  for (int j : order) {
    acc += site(j);
    r0 = std::abs(g.nodes(j));
    if (acc >= 0.99 * mass) break;
  }
  const double t_max = g.half_width - r0;
  for (double t : times)
    if (t > t_max)
      fail(ErrorCode::HorizonExceeded,
           "time " + std::to_string(t) + " beyond reflection horizon " +
               std::to_string(t_max));

  VelocityDiagnostic d;
  d.times = times;
  d.theta_values = theta_list;
  d.theta0 = theta0;
  d.energy_filter_desc = "smooth indicator on [" +
                         std::to_string(chi.support_lo) + ", " +
                         std::to_string(chi.support_hi) + "]";

  const CMat chiL = energy_filter(P_L, chi);
  const CVec cu = chiL * u;
  const double nu = std::max(model.l2_norm(u), 1e-300);
  d.tail_mass.assign(theta_list.size(), {});

  for (double t : times) {
    const CVec ut = evolve(P_L, u, t);
    const CVec cut = evolve(P_L, cu, t);
    for (size_t k = 0; k < theta_list.size(); ++k) {
      double s = 0.0;
      for (int j = 0; j < N; ++j)
        if (std::abs(g.nodes(j)) >= theta_list[k] * t)
          s += std::norm(ut(j)) + std::norm(ut(N + j));
      d.tail_mass[k].push_back(std::sqrt(g.dx * s) / nu);
    }
    double s0 = 0.0;
    for (int j = 0; j < N; ++j)
      if (std::abs(g.nodes(j)) <= theta0 * t)
        s0 += std::norm(cut(j)) + std::norm(cut(N + j));
    d.inner_mass.push_back(std::sqrt(g.dx * s0) / nu);
  }

  auto trend = [](const std::vector<double>& c) {
    return !c.empty() && c.back() <= 0.25 * std::max(c.front(), 1e-300);
  };
  d.tail_trend_pass = true;
  for (const auto& curve : d.tail_mass)
    d.tail_trend_pass = d.tail_trend_pass && trend(curve);
  d.inner_trend_pass = trend(d.inner_mass);
  return d;
}

CMat build_conjugate_operator(const Grid1D& g, double m_inf) {
  const int N = g.points;
  CMat D = CMat::Zero(N, N);
  const Complex mi(0.0, -1.0);
  for (int j = 0; j < N; ++j) {
    if (j + 1 < N) D(j, j + 1) = mi / (2.0 * g.dx);
    if (j - 1 >= 0) D(j, j - 1) = -mi / (2.0 * g.dx);
  }
  const CMat R = (D * D + m_inf * m_inf * CMat::Identity(N, N))
                     .partialPivLu()
                     .inverse();
  CMat X = CMat::Zero(N, N);
  X.diagonal() = g.nodes.cast<Complex>();
  const CMat F = X * D * R;
  CMat a = 0.5 * (F + F.adjoint());
  return a;
}

MourreReport mourre_probe(const KGOperators& model, const Propagator& P_L,
                          const CMat& a_scalar, double lambda0, double delta,
                          int n_samples, std::uint64_t seed) {
  const double m = model.m_grid;
  if (std::abs(lambda0) <= m)
    fail(ErrorCode::WindowTouchesThreshold, "|lambda0| must exceed m_grid");
  const double lo = lambda0 - 2.0 * delta, hi = lambda0 + 2.0 * delta;
  if ((lo <= m && hi >= -m) && !(hi < -m || lo > m))
    fail(ErrorCode::WindowTouchesThreshold,
         "chi_delta window meets [-m_grid, m_grid]");

  MourreReport rep;
  rep.window_lo = lo;
  rep.window_hi = hi;
  const double sgn = lambda0 > 0 ? 1.0 : -1.0;

  const int N = model.n(), n2 = model.dim2();
  CMat aK = CMat::Zero(n2, n2);
  aK.block(0, 0, N, N) = a_scalar;
  aK.block(N, N, N, N) = a_scalar;

  const SmoothFunction chi_d = smooth_indicator(lo, hi, delta);
  const CMat Xd = energy_filter(P_L, chi_d);
  const CMat comm = Complex(0, 1) * (model.L * aK - aK * model.L);
  const CMat C = Xd * comm * Xd;

  // scalar plane-wave weight w(l) = |l|^{-3} (l^2 - m^2) on the window
  auto w = [&](double l) {
    return (l * l - m * m) / std::pow(std::abs(l), 3.0);
  };
  rep.c0_plane = 1e300;
  for (int i = 0; i <= 64; ++i) {
    const double l = lo + (hi - lo) * i / 64.0;
    rep.c0_plane = std::min(rep.c0_plane, w(l));
  }

  // Fourier-band calibration of the weight the grid commutator realizes:
  // expectation on wide traveling packets across the window band.
  const Grid1D& grid = model.grid;
  const int ncal = 7;
  std::vector<double> cal_l(ncal), cal_w(ncal);
  for (int k = 0; k < ncal; ++k) {
    const double lam = lo + (hi - lo) * k / (ncal - 1);
    const double xi = std::sqrt(std::max(lam * lam - m * m, 1e-12));
    CVec u = CVec::Zero(n2);
    for (int j = 0; j < N; ++j) {
      const double x = grid.nodes(j);
      const Complex val = std::exp(-0.5 * std::pow(x / (0.3 * grid.half_width), 2)) *
                          std::polar(1.0, xi * x);
      if (lambda0 > 0) u(j) = val;
      else u(N + j) = val;
    }
    const double den = model.grid.dx * u.squaredNorm();
    cal_l[k] = lam;
    cal_w[k] = sgn * model.k_form(u, comm * u).real() / den;
  }
  auto w_grid = [&](double l) {
    if (l <= cal_l.front()) return cal_w.front();
    if (l >= cal_l.back()) return cal_w.back();
    for (int k = 0; k + 1 < ncal; ++k)
      if (l <= cal_l[k + 1]) {
        const double t = (l - cal_l[k]) / (cal_l[k + 1] - cal_l[k]);
        return (1.0 - t) * cal_w[k] + t * cal_w[k + 1];
      }
    return cal_w.back();
  };
  double c0_grid = 1e300;
  for (int i = 0; i <= 64; ++i)
    c0_grid = std::min(c0_grid, w_grid(lo + (hi - lo) * i / 64.0));

  SmoothFunction g2fun;
  g2fun.support_lo = lo;
  g2fun.support_hi = hi;
  g2fun.fn = [c0_grid, w_grid, lo, hi](const Jet& x) {
    // only evaluated through energy_filter (pointwise values)
    const double l = x.value();
    Jet r;
    if (l < lo || l > hi) return r;
    r.c[0] = std::sqrt(std::max(w_grid(l) - c0_grid, 0.0));
    return r;
  };
  const CMat gL = energy_filter(P_L, g2fun);

  // Traveling-packet samples (Fourier-band evaluation). Dirichlet
  // eigenvectors are standing waves on which commutator expectations vanish
  // identically (virial theorem), so random spectral samples cannot see the
  // continuum constant; directed packets in the window band can.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double rmin = 1e300;
  for (int s = 0; s < n_samples; ++s) {
    const double lam = lambda0 + 0.4 * delta * uni(rng);
    const double xi = std::copysign(std::sqrt(lam * lam - m * m),
                                    s % 2 == 0 ? 1.0 : -1.0);
    const double x0 = 0.1 * grid.half_width * uni(rng);
    const double sigma = 0.3 * grid.half_width;
    CVec u = CVec::Zero(n2);
    for (int j = 0; j < N; ++j) {
      const double x = grid.nodes(j);
      const Complex val = std::exp(-0.5 * std::pow((x - x0) / sigma, 2)) *
                          std::polar(1.0, xi * x);
      if (lambda0 > 0)
        u(j) = val;  // upper shell
      else
        u(N + j) = val;
    }
    const CVec xu = Xd * u;
    const double den = model.grid.dx * xu.squaredNorm();
    if (den < 1e-10 * model.grid.dx * u.squaredNorm()) continue;
    const double num = sgn * model.k_form(u, C * u).real();
    const CVec gu = gL * xu;
    const double g2term = model.k_form(gu, gu).real();
    rmin = std::min(rmin, (num - g2term) / den);
  }
  if (rmin > 1e299) rmin = 0.0;
  rep.c0_hat = std::max(0.0, rmin);
  rep.defect = std::max(0.0, rep.c0_plane - rep.c0_hat);
  return rep;
}

}  // namespace kgs
