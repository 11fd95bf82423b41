#include "kgs/scattering.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>

#include "kgs/smooth.hpp"

namespace kgs {

CVec make_packet(const KGOperators& model, const WavePacketSpec& spec) {
  const Grid1D& g = model.grid;
  const int N = g.points;
  const double margin = 3.0 * spec.sigma;
  if (std::abs(spec.x0) + margin > g.half_width)
    fail(ErrorCode::ConfigInvalid, "packet support leaves [-X+margin, X-margin]");
  const double nyquist = M_PI / g.dx;
  const double band = 3.0 / spec.sigma;
  if (std::abs(spec.xi0) + band > 0.9 * nyquist)
    fail(ErrorCode::BandwidthExceeded, "packet momentum band reaches the grid limit");
  if (std::abs(spec.xi0) - band < 0.0)
    fail(ErrorCode::BandwidthExceeded, "packet momentum band touches 0");

  CVec gvec(N);
  for (int j = 0; j < N; ++j) {
    const double x = g.nodes(j);
    gvec(j) = std::exp(-0.5 * std::pow((x - spec.x0) / spec.sigma, 2)) *
              std::polar(1.0, spec.xi0 * x);
  }
  CVec u = CVec::Zero(2 * N);
  if (spec.shell == WavePacketSpec::Shell::Upper)
    u.head(N) = gvec;
  else
    u.tail(N) = gvec;
  u /= (std::sqrt(g.dx) * u.norm());  // unit l^2(dx) norm = unit h_inf norm
  return model.U_inf_inv * u;
}

Decomposition bound_scatt_decomposition(const KGOperators& model,
                                        const Propagator& P_B,
                                        const SpectrumClassification& S) {
  const double m = model.m_grid;
  const double tol = 1e-8 * std::max(1.0, S.spectral_radius);
  for (double c : S.predicted_critical_points())
    if (std::abs(std::abs(c) - m) < 1e-3)
      fail(ErrorCode::CriticalThreshold,
           "critical point at +-m_grid; (B2) proxy fails");

  if (P_B.method == PropagatorMethod::SchurPade)
    fail(ErrorCode::Internal, "decomposition needs a spectral-form propagator");

  const int n2 = model.dim2();
  const int N = model.n();
  const Grid1D& g = model.grid;

  // localization is only a meaningful surrogate in the interior of the
  // discretized branch; its top clusters with zero group velocity
  const double band_top = std::sqrt(model.eps_inf_evals.maxCoeff());
  const double interior_cap = m + 0.75 * (band_top - m);

  CVec sel = CVec::Zero(n2);
  int rank = 0;
  for (int i = 0; i < n2; ++i) {
    const Complex lambda = Complex(0, 1) * P_B.mu(i);
    bool pp = false;
    if (std::abs(lambda.imag()) > tol) {
      pp = true;  // complex pair member
    } else if (std::abs(lambda.real()) < m - tol) {
      pp = true;  // discrete eigenvalue in the gap
    } else if (std::abs(lambda.real()) > interior_cap) {
      pp = false;
    } else {
      // embedded candidate: localization score of the eigenvector
      const CVec col = P_B.V.col(i);
      double inside = 0.0, total = 0.0;
      for (int j = 0; j < N; ++j) {
        const double w = std::norm(col(j)) + std::norm(col(N + j));
        total += w;
        if (std::abs(g.nodes(j)) <= 0.5 * g.half_width) inside += w;
      }
      const double score = inside / std::max(total, 1e-300);
      if (score >= 0.9) {
        const bool near_threshold = std::abs(std::abs(lambda.real()) - m) < 0.05 * m;
        if (near_threshold && score < 0.97)
          fail(ErrorCode::ClassificationAmbiguous,
               "near-threshold eigenvector with indeterminate localization");
        pp = true;
      }
    }
    if (pp) {
      sel(i) = 1.0;
      ++rank;
    }
  }

  Decomposition d;
  d.P_pp = P_B.V * sel.asDiagonal() * P_B.V_inv;
  d.P_scatt = CMat::Identity(n2, n2) - d.P_pp;
  d.pp_rank = rank;
  d.cross_norm = (d.P_pp * d.P_scatt).norm();
  d.idempotent_residual = std::max((d.P_pp * d.P_pp - d.P_pp).norm(),
                                   (d.P_scatt * d.P_scatt - d.P_scatt).norm());

  // dagger selfadjointness vs the energy Gram
  Eigen::PartialPivLU<CMat> lu(model.M_h);
  auto dag = [&](const CMat& A) { return CMat(lu.solve(A.adjoint() * model.M_h)); };
  d.selfadjoint_residual = std::max((dag(d.P_pp) - d.P_pp).norm(),
                                    (dag(d.P_scatt) - d.P_scatt).norm());

  // h- and omega-orthogonality of the ranges on random probes
  for (int s = 0; s < 8; ++s) {
    const CVec u = d.P_pp * random_cvec(n2, 901 + s);
    const CVec w = d.P_scatt * random_cvec(n2, 2901 + s);
    const double nu = model.l2_norm(u), nw = model.l2_norm(w);
    if (nu < 1e-12 || nw < 1e-12) continue;
    d.h_orthogonality = std::max(
        d.h_orthogonality, std::abs(model.h_form(u, w)) / (nu * nw));
    d.omega_orthogonality = std::max(
        d.omega_orthogonality, std::abs(model.omega_form(u, w)) / (nu * nw));
  }
  return d;
}

namespace {

// The assembled operators carry the lattice dispersion g(eta) =
// 2 sin(eta dx/2)/dx, not the continuum eta; the eikonal is solved for the
// symbol the model actually has (-> the continuum formula as dx -> 0).
struct Dispersion {
  double dx;
  double g(double eta) const { return 2.0 * std::sin(0.5 * eta * dx) / dx; }
  double g_inv(double y) const {  // clamped at the band top
    const double s = std::min(std::max(0.5 * y * dx, -1.0), 1.0);
    return 2.0 * std::asin(s) / dx;
  }
  double energy(double eta, double m) const { return std::hypot(g(eta), m); }
};

double eikonal_dphi(double xi, double vl, double m, bool plus_branch,
                    const Dispersion& disp, bool* collapsed) {
  const double e = disp.energy(xi, m);
  const double shifted = plus_branch ? e + vl : e - vl;
  const double rad = shifted * shifted - m * m;
  if (rad <= 0.0) {
    *collapsed = true;
    return 0.0;
  }
  return (xi >= 0 ? 1.0 : -1.0) * disp.g_inv(std::sqrt(rad));
}

}  // namespace

EikonalPhase eikonal_phase_1d(const PotentialSplit& pot, double m_inf,
                              const Grid1D& grid, double R, double alpha,
                              double sigma_region) {
  EikonalPhase ph;
  ph.x_nodes = grid.nodes;
  ph.R = R;
  ph.alpha = alpha;
  ph.sigma_region = sigma_region;  // vacuous in 1D: |x.xi| = |x||xi|
  ph.m_inf = m_inf;

  const int N = grid.points;
  ph.xi_nodes.resize(N);
  const double dxi = M_PI / grid.half_width;
  for (int k = 0; k < N; ++k) ph.xi_nodes(k) = (k - N / 2) * dxi;

  ph.phi_plus.resize(N, N);
  ph.phi_minus.resize(N, N);
  ph.dphi_plus.resize(N, N);
  ph.dphi_minus.resize(N, N);

  // smooth momentum ramp: correction off below alpha/2, exact above alpha
  SmoothFunction ramp = smooth_indicator(alpha / 2.0, 1e6, alpha / 2.0);
  const Dispersion disp{grid.dx};

  // the lattice band is bounded: the + branch eikonal is unsolvable where
  // (E(xi) + max v_l)^2 - m^2 exceeds the top of g^2; cap and ramp off there
  double vmax = 0.0;
  for (int j = 0; j < N; ++j)
    vmax = std::max(vmax, std::abs(pot.v_l(grid.nodes(j))));
  const double band_top = 2.0 / grid.dx;
  double xi_cap = std::abs(ph.xi_nodes(0));
  for (int k = 0; k < N; ++k) {
    const double e = disp.energy(ph.xi_nodes(k), m_inf);
    const double y2 = (e + vmax) * (e + vmax) - m_inf * m_inf;
    if (y2 >= std::pow(0.95 * band_top, 2)) {
      xi_cap = std::min(xi_cap, std::abs(ph.xi_nodes(k)));
    }
  }
  SmoothFunction hi_ramp =
      smooth_indicator(-1e6, xi_cap, std::max(0.1 * xi_cap, 1e-6));

  const int sub = 8;  // sub-intervals per node step for the phase integral
  std::vector<bool> exact_band(N, false);
  for (int k = 0; k < N; ++k) {
    const double xi = ph.xi_nodes(k);
    const double axi = std::abs(xi);
    const double axi_eff = std::min(std::max(axi, alpha), 0.9 * xi_cap);
    const double xi_eff = std::copysign(axi_eff, xi == 0 ? 1.0 : xi);
    const double w = (axi >= alpha ? 1.0 : ramp(axi)) * hi_ramp(axi);
    exact_band[k] = axi >= alpha && axi <= 0.9 * xi_cap && w == 1.0;

    for (int branch = 0; branch < 2; ++branch) {
      const bool plus = branch == 0;
      bool collapsed = false;
      // cumulative integral of (dphi - xi) from 0, trapezoid on a fine grid
      auto corr_deriv = [&](double x) {
        bool c = false;
        const double d = eikonal_dphi(xi_eff, pot.v_l(x), m_inf, plus, disp, &c);
        if (c) {
          // collapse inside Gamma is fatal; outside it the ramp suppresses it
          if (axi >= alpha && std::abs(x) >= R) collapsed = true;
          return 0.0;
        }
        return w * (d - xi_eff);
      };
      RVec corr(N);
      // integrate outward from 0 in both directions over node positions
      const double h = grid.dx / sub;
      double acc = 0.0;
      double xprev = 0.0;
      // positive side
      for (int j = N / 2; j < N; ++j) {
        const double xj = grid.nodes(j);
        double local = acc;
        double prev = corr_deriv(xprev);
        for (double x = xprev + h; x <= xj + 1e-12; x += h) {
          const double cur = corr_deriv(x);
          local += 0.5 * h * (prev + cur);
          prev = cur;
        }
        corr(j) = local;
        acc = local;
        xprev = xj;
      }
      acc = 0.0;
      xprev = 0.0;
      for (int j = N / 2 - 1; j >= 0; --j) {
        const double xj = grid.nodes(j);
        double local = acc;
        double prev = corr_deriv(xprev);
        for (double x = xprev - h; x >= xj - 1e-12; x -= h) {
          const double cur = corr_deriv(x);
          local -= 0.5 * h * (prev + cur);
          prev = cur;
        }
        corr(j) = local;
        acc = local;
        xprev = xj;
      }
      if (collapsed)
        fail(ErrorCode::BranchCollapse,
             "eikonal radicand <= 0 inside Gamma(R, alpha, sigma)");
      for (int j = 0; j < N; ++j) {
        const double x = grid.nodes(j);
        bool c = false;
        const double d = eikonal_dphi(xi_eff, pot.v_l(x), m_inf, plus, disp, &c);
        const double dval = xi + (c ? 0.0 : w * (d - xi_eff));
        const double pval = x * xi + corr(j);
        if (plus) {
          ph.dphi_plus(j, k) = dval;
          ph.phi_plus(j, k) = pval;
        } else {
          ph.dphi_minus(j, k) = dval;
          ph.phi_minus(j, k) = pval;
        }
      }
    }
  }

  // plug-back residual on Gamma samples and the correction growth constant,
  // with the model's flat symbol eps(eta) = sqrt(g(eta)^2 + m^2)
  double res = 0.0, ccoef = 0.0;
  const double mu_l = pot.mu_l;
  for (int k = 0; k < N; ++k) {
    const double xi = ph.xi_nodes(k);
    if (!exact_band[k]) continue;
    const double rhs = disp.energy(xi, m_inf);
    for (int j = 0; j < N; ++j) {
      const double x = grid.nodes(j);
      const double corr_p = std::abs(ph.phi_plus(j, k) - x * xi);
      const double corr_m = std::abs(ph.phi_minus(j, k) - x * xi);
      const double wgt = std::pow(std::hypot(1.0, x), 1.0 - mu_l);
      ccoef = std::max(ccoef, std::max(corr_p, corr_m) / wgt);
      if (std::abs(x) < R) continue;
      const double dp = ph.dphi_plus(j, k);
      const double dm = ph.dphi_minus(j, k);
      const double vl = pot.v_l(x);
      // +: eps(dphi+) - vl = rhs ; -: -eps(dphi-) - vl = -rhs
      res = std::max(res, std::abs(disp.energy(dp, m_inf) - vl - rhs));
      res = std::max(res, std::abs(-disp.energy(dm, m_inf) - vl + rhs));
    }
  }
  ph.max_residual = res;
  ph.correction_coeff = ccoef;
  ph.certified = res <= 1e-8;
  return ph;
}

namespace {

CMat dft_matrix(const RVec& x, const RVec& xi, double dx) {
  const int N = static_cast<int>(x.size());
  CMat F(N, N);
  for (int k = 0; k < N; ++k)
    for (int j = 0; j < N; ++j)
      F(k, j) = dx * std::polar(1.0, -x(j) * xi(k));
  return F;
}

}  // namespace

CMat fio_matrix(const EikonalPhase& phase, bool plus_branch,
                const std::function<double(double, double)>& amplitude,
                double dx) {
  const int N = static_cast<int>(phase.x_nodes.size());
  const CMat F = dft_matrix(phase.x_nodes, phase.xi_nodes, dx);
  const double dxi = phase.xi_nodes(1) - phase.xi_nodes(0);
  const RMat& phi = plus_branch ? phase.phi_plus : phase.phi_minus;
  CMat P(N, N);
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < N; ++k) {
      const double a =
          amplitude ? amplitude(phase.x_nodes(j), phase.xi_nodes(k)) : 1.0;
      P(j, k) = (dxi / (2.0 * M_PI)) * a * std::polar(1.0, phi(j, k));
    }
  return P * F;
}

CVec fio_apply(const EikonalPhase& phase, bool plus_branch,
               const std::function<double(double, double)>& amplitude,
               const CVec& u, double dx) {
  const int N = static_cast<int>(phase.x_nodes.size());
  if (u.size() != N) fail(ErrorCode::DimensionMismatch, "fio_apply: size");
  const CMat F = dft_matrix(phase.x_nodes, phase.xi_nodes, dx);
  const CVec uhat = F * u;
  // bandwidth check: mass beyond 0.9 Nyquist
  const double cutoff = 0.9 * std::abs(phase.xi_nodes(0));
  double tail = 0.0, total = 0.0;
  for (int k = 0; k < N; ++k) {
    const double m2 = std::norm(uhat(k));
    total += m2;
    if (std::abs(phase.xi_nodes(k)) > cutoff) tail += m2;
  }
  if (tail > 1e-10 * std::max(total, 1e-300))
    fail(ErrorCode::BandwidthExceeded, "input not band-limited within the xi grid");

  const double dxi = phase.xi_nodes(1) - phase.xi_nodes(0);
  const RMat& phi = plus_branch ? phase.phi_plus : phase.phi_minus;
  CVec out(N);
  for (int j = 0; j < N; ++j) {
    Complex s = 0.0;
    for (int k = 0; k < N; ++k) {
      const double a =
          amplitude ? amplitude(phase.x_nodes(j), phase.xi_nodes(k)) : 1.0;
      s += a * std::polar(1.0, phi(j, k)) * uhat(k);
    }
    out(j) = s * dxi / (2.0 * M_PI);
  }
  return out;
}

CMat build_modifier_T(const KGOperators& model, const EikonalPhase& phase,
                      int lr_sign) {
  if (!phase.certified)
    fail(ErrorCode::PhaseNotCertified,
         "eikonal plug-back residual " + std::to_string(phase.max_residual));
  const int N = model.n(), n2 = model.dim2();
  const double s = lr_sign < 0 ? -1.0 : 1.0;
  const CMat jp = fio_matrix(phase, true, nullptr, model.grid.dx);
  const CMat jm = fio_matrix(phase, false, nullptr, model.grid.dx);
  const CMat diff = jp - jm, sum = jp + jm;
  CMat T = CMat::Zero(n2, n2);
  T.block(0, 0, N, N) = 0.5 * s * diff;
  T.block(0, N, N, N) = -0.5 * s * sum * model.eps_inf_inv;
  T.block(N, 0, N, N) = -0.5 * s * sum * model.eps_inf;
  T.block(N, N, N, N) = 0.5 * s * diff;
  return T;
}

CMat build_jhat_proxy(const KGOperators& model, const EikonalPhase& phase,
                      int lr_sign) {
  const int N = model.n(), n2 = model.dim2();
  const double s = lr_sign < 0 ? -1.0 : 1.0;
  const CMat jp = model.b_inv * fio_matrix(phase, true, nullptr, model.grid.dx);
  const CMat jm = model.b_inv * fio_matrix(phase, false, nullptr, model.grid.dx);
  const CMat jp0 = fio_matrix(phase, true, nullptr, model.grid.dx);
  const CMat jm0 = fio_matrix(phase, false, nullptr, model.grid.dx);
  CMat J = CMat::Zero(n2, n2);
  J.block(0, 0, N, N) = 0.5 * s * (jp - jm) * model.eps_inf;
  J.block(0, N, N, N) = -0.5 * s * (jp + jm);
  J.block(N, 0, N, N) = -0.5 * s * (jp0 + jm0) * model.eps_inf;
  J.block(N, N, N, N) = 0.5 * s * (jp0 - jm0);
  return J;
}

namespace {

double short_range_decay_fit(const KGOperators& model) {
  // outer-half fit of the decay exponent of v; infinity when v vanishes there
  const Grid1D& g = model.grid;
  double mu = 1e300;
  const double vmax = model.v.cwiseAbs().maxCoeff();
  for (int j = 0; j < g.points; ++j) {
    const double x = std::abs(g.nodes(j));
    if (x < 0.5 * g.half_width) continue;
    const double av = std::abs(model.v(j));
    if (av <= 1e-12 * std::max(1.0, vmax)) continue;
    mu = std::min(mu, -std::log(av / std::max(vmax, 1e-300)) /
                          std::log(std::hypot(1.0, x)));
  }
  return mu;
}

struct HorizonOutputs {
  std::vector<CVec> raw;        // before P_scatt
  std::vector<CVec> projected;  // f^pm
};

HorizonOutputs run_horizon(const WaveOpInputs& in, const CMat* T_mod,
                           const std::vector<CVec>& f_in, double T,
                           int direction) {
  HorizonOutputs out;
  const double tdir = direction >= 0 ? T : -T;
  for (const CVec& f : f_in) {
    CVec g = evolve(*in.P_B_inf, f, tdir);
    if (T_mod) g = (*T_mod) * g;
    CVec raw = evolve(*in.P_B, g, -tdir);
    out.raw.push_back(raw);
    out.projected.push_back(in.decomp->P_scatt * raw);
  }
  return out;
}

ScatteringReport wave_operator_run(const WaveOpInputs& in, const CMat* T_mod,
                                   const std::vector<WavePacketSpec>& specs,
                                   double T, int direction, bool inverse_check) {
  const KGOperators& model = *in.model;
  const Grid1D& g = model.grid;

  std::vector<CVec> f_in;
  for (const auto& s : specs) {
    // horizon guard: free transport at speed < 1 must stay inside the box
    const double reach = std::abs(s.x0) + 3.0 * s.sigma + T;
    if (reach > g.half_width + 0.25 * T)  // group speed margin
      if (std::abs(s.x0) + 3.0 * s.sigma + 0.95 * T > g.half_width)
        fail(ErrorCode::HorizonExceeded,
             "packet would meet the Dirichlet wall within the horizon");
    f_in.push_back(make_packet(model, s));
  }

  ScatteringReport rep;
  rep.horizon_T = T;
  rep.direction = direction;
  rep.modified = T_mod != nullptr;

  const HorizonOutputs hT = run_horizon(in, T_mod, f_in, T, direction);
  const HorizonOutputs hH = run_horizon(in, T_mod, f_in, T / 2.0, direction);
  const HorizonOutputs hQ = run_horizon(in, T_mod, f_in, T / 4.0, direction);
  rep.f_out = hT.projected;

  const int n = static_cast<int>(specs.size());
  const double tdir = direction >= 0 ? T : -T;
  const double probe_s = 1.0;

  for (int i = 0; i < n; ++i) {
    PacketRecord r;
    r.spec = specs[i];
    r.completeness_defect = model.l2_norm(hT.raw[i] - hT.projected[i]);
    r.increment_T = model.l2_norm(hT.projected[i] - hH.projected[i]);
    r.increment_half = model.l2_norm(hH.projected[i] - hQ.projected[i]);
    r.convergence_ratio =
        r.increment_T / std::max(r.increment_half, 1e-300);

    // intertwining: Omega_T(e^{-isB_inf} f) vs e^{-isB} Omega_T(f)
    {
      const double sp = direction >= 0 ? probe_s : -probe_s;
      CVec shifted = evolve(*in.P_B_inf, f_in[i], sp);
      CVec l = evolve(*in.P_B_inf, shifted, tdir);
      if (T_mod) l = (*T_mod) * l;
      l = evolve(*in.P_B, l, -tdir);
      l = in.decomp->P_scatt * l;
      const CVec rr = evolve(*in.P_B, hT.projected[i], sp);
      r.intertwining_residual = model.l2_norm(l - rr);
    }

    if (inverse_check) {
      // reverse limit: e^{+iT B_inf} e^{-iT B} f^+ should recover f
      CVec back = evolve(*in.P_B, hT.projected[i], tdir);
      back = evolve(*in.P_B_inf, back, -tdir);
      r.inverse_residual = model.l2_norm(back - f_in[i]);
    }

    rep.max_completeness_defect =
        std::max(rep.max_completeness_defect, r.completeness_defect);
    rep.max_intertwining_residual =
        std::max(rep.max_intertwining_residual, r.intertwining_residual);
    rep.max_inverse_residual = std::max(rep.max_inverse_residual, r.inverse_residual);
    rep.mean_convergence_ratio += r.convergence_ratio / n;
    rep.packets.push_back(r);
  }

  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const Complex hv = model.h_form(hT.projected[i], hT.projected[j]);
      const Complex hv0 = model.h_inf_form(f_in[i], f_in[j]);
      rep.unitarity_defect = std::max(rep.unitarity_defect, std::abs(hv - hv0));
      const Complex hvh = model.h_form(hH.projected[i], hH.projected[j]);
      rep.unitarity_defect_half =
          std::max(rep.unitarity_defect_half, std::abs(hvh - hv0));
      const Complex ov = model.omega_form(hT.projected[i], hT.projected[j]);
      const Complex ov0 = model.omega_inf_form(f_in[i], f_in[j]);
      rep.symplectic_residual =
          std::max(rep.symplectic_residual, std::abs(ov - ov0));
    }
  return rep;
}

}  // namespace

ScatteringReport short_range_wave_operator(const WaveOpInputs& in,
                                           const std::vector<WavePacketSpec>& packets,
                                           double T, int direction) {
  if (in.model->v_l.cwiseAbs().maxCoeff() > 1e-14)
    fail(ErrorCode::ShortRangeViolated, "short-range run requires v_l == 0");
  const double mu = short_range_decay_fit(*in.model);
  if (mu <= 1.0)
    fail(ErrorCode::ShortRangeViolated,
         "decay fit of v gives mu = " + std::to_string(mu) + " <= 1");
  return wave_operator_run(in, nullptr, packets, T, direction, true);
}

ScatteringReport long_range_wave_operator(const WaveOpInputs& in,
                                          const CMat& T_mod,
                                          const std::vector<WavePacketSpec>& packets,
                                          double T, int direction) {
  return wave_operator_run(in, &T_mod, packets, T, direction, false);
}

}  // namespace kgs
