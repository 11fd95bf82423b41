#include "kgs/kg_model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>

#include "kgs/smooth.hpp"

namespace kgs {

Grid1D make_grid(double X, int N) {
  if (N < 16) fail(ErrorCode::ConfigInvalid, "grid needs N >= 16");
  if (!(X > 0)) fail(ErrorCode::ConfigInvalid, "grid needs X > 0");
  Grid1D g;
  g.half_width = X;
  g.points = N;
  g.dx = 2.0 * X / N;
  g.nodes.resize(N);
  for (int j = 0; j < N; ++j) g.nodes(j) = -X + (j + 0.5) * g.dx;
  return g;
}

CoefficientSet flat_coefficients(double m_inf) {
  CoefficientSet c;
  c.a = [](double) { return 1.0; };
  c.b = [](double) { return 0.0; };
  c.c = [](double) { return 1.0; };
  c.m_x = [m_inf](double) { return m_inf; };
  c.m_inf = m_inf;
  c.mu0 = 1.0;
  return c;
}

PotentialSplit zero_potential() {
  PotentialSplit p;
  p.v_s = [](double) { return 0.0; };
  p.v_l = [](double) { return 0.0; };
  p.lr_sign = 0;
  return p;
}

CMat build_epsilon2(const Grid1D& g, const CoefficientSet& coef) {
  const int N = g.points;
  const double dx = g.dx;

  // staggered edge factor W: (N+1) x N, symmetric Peierls link phases
  CMat W = CMat::Zero(N + 1, N);
  RVec a_edge(N + 1);
  for (int e = 0; e <= N; ++e) {
    const double xe = -g.half_width + e * dx;
    a_edge(e) = coef.a(xe);
    const double theta = coef.b(xe) * dx;  // midpoint link integral of b
    const Complex ph = std::polar(1.0, 0.5 * theta);
    const Complex mi(0.0, -1.0);
    if (e < N) W(e, e) = mi * std::conj(ph) / dx;       // + e^{-i theta/2} u_e
    if (e >= 1) W(e, e - 1) = -mi * ph / dx;            // - e^{+i theta/2} u_{e-1}
  }
  CMat kin = W.adjoint() * a_edge.asDiagonal() * W;
  kin = 0.5 * (kin + kin.adjoint());

  RVec cinv(N), m2(N);
  for (int j = 0; j < N; ++j) {
    const double x = g.nodes(j);
    const double cv = coef.c(x);
    if (!(cv > 0)) fail(ErrorCode::NotPositive, "c(x) must be positive");
    const double mv = coef.m_x(x);
    if (!(mv > 0)) fail(ErrorCode::NotPositive, "m(x) must be positive");
    cinv(j) = 1.0 / cv;
    m2(j) = mv * mv;
  }
  CMat eps2 = cinv.asDiagonal() * kin * cinv.asDiagonal();
  eps2 += CMat(m2.asDiagonal());
  eps2 = 0.5 * (eps2 + eps2.adjoint());

  Eigen::SelfAdjointEigenSolver<CMat> es(eps2, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0)
    fail(ErrorCode::NotPositive, "eps^2 has a nonpositive eigenvalue");
  return eps2;
}

namespace {

CMat psd_sqrt(const Eigen::SelfAdjointEigenSolver<CMat>& es, bool inverse) {
  RVec d = es.eigenvalues();
  for (int i = 0; i < d.size(); ++i)
    d(i) = inverse ? 1.0 / std::sqrt(d(i)) : std::sqrt(d(i));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

KGOperators build_generator(const Grid1D& g, const CoefficientSet& coef,
                            const PotentialSplit& pot) {
  KGOperators m;
  m.grid = g;
  m.m_inf = coef.m_inf;
  const int N = g.points;
  const CMat I = CMat::Identity(N, N);

  m.eps2 = build_epsilon2(g, coef);
  m.eps2_inf = build_epsilon2(g, flat_coefficients(coef.m_inf));

  Eigen::SelfAdjointEigenSolver<CMat> es_inf(m.eps2_inf);
  m.eps_inf_evals = es_inf.eigenvalues();
  m.eps_inf_evecs = es_inf.eigenvectors();
  m.eps_inf = psd_sqrt(es_inf, false);
  m.eps_inf_inv = psd_sqrt(es_inf, true);
  m.m_grid = std::sqrt(m.eps_inf_evals.minCoeff());

  m.v.resize(N);
  m.v_s.resize(N);
  m.v_l.resize(N);
  double m0 = 1e300;
  for (int j = 0; j < N; ++j) {
    const double x = g.nodes(j);
    m.v_s(j) = pot.v_s(x);
    m.v_l(j) = pot.v_l(x);
    m.v(j) = m.v_s(j) + m.v_l(j);
    m0 = std::min(m0, coef.m_x(x));
  }
  m.m0_sq = m0 * m0;

  // long-range support adjustment: replace v_l by F(|x|>=c) v_l for the
  // smallest grid radius c with eps^2 - v_l^2 >= m0^2/4
  auto vl_min_eig = [&](const RVec& vl) {
    CMat E = m.eps2 - CMat(RVec(vl.array().square()).asDiagonal());
    Eigen::SelfAdjointEigenSolver<CMat> es(E, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  };
  m.adjustment_radius = 0.0;
  if (vl_min_eig(m.v_l) < 0.25 * m.m0_sq) {
    const double ramp = std::max(2.0 * g.dx, 0.02 * g.half_width);
    bool done = false;
    for (int k = 1; k <= 16 && !done; ++k) {
      const double c = k * g.half_width / 32.0;  // scan up to X/2
      SmoothFunction F = smooth_outer(c, ramp);
      RVec vl_adj(N);
      for (int j = 0; j < N; ++j) vl_adj(j) = F(g.nodes(j)) * m.v_l(j);
      if (vl_min_eig(vl_adj) >= 0.25 * m.m0_sq) {
        for (int j = 0; j < N; ++j) {
          const double removed = m.v_l(j) - vl_adj(j);
          m.v_l(j) = vl_adj(j);
          m.v_s(j) += removed;
        }
        m.adjustment_radius = c;
        done = true;
      }
    }
    if (!done)
      fail(ErrorCode::LongRangeDominates,
           "eps^2 - v_l^2 < m0^2/4 for every adjustment radius up to X/2");
  }

  // energy operator and (E3)
  CMat E = m.eps2 - CMat(RVec(m.v.array().square()).asDiagonal());
  E = 0.5 * (E + E.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es_E(E);
  m.energy_evals = es_E.eigenvalues();
  m.energy_evecs = es_E.eigenvectors();
  m.kappa = 0;
  double min_abs = 1e300;
  for (int i = 0; i < N; ++i) {
    if (m.energy_evals(i) < 0) ++m.kappa;
    min_abs = std::min(min_abs, std::abs(m.energy_evals(i)));
  }
  if (min_abs <= 1e-8 * std::max(1.0, E.norm()))
    fail(ErrorCode::ZeroEnergyResonance,
         "eigenvalue of eps^2 - v^2 within tolerance of 0");

  // b = (eps^2 - v_l^2)^{1/2}
  CMat B2 = m.eps2 - CMat(RVec(m.v_l.array().square()).asDiagonal());
  B2 = 0.5 * (B2 + B2.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es_b(B2);
  m.b_op = psd_sqrt(es_b, false);
  m.b_inv = psd_sqrt(es_b, true);

  // B = -[[0, 1],[eps^2 - v^2, 2v]], M_h = diag(eps^2 - v^2, 1)
  const int n2 = 2 * N;
  m.B = CMat::Zero(n2, n2);
  m.B.block(0, N, N, N) = -I;
  m.B.block(N, 0, N, N) = -E;
  m.B.block(N, N, N, N) = CMat((-2.0 * m.v).asDiagonal());
  m.M_h = CMat::Zero(n2, n2);
  m.M_h.block(0, 0, N, N) = E;
  m.M_h.block(N, N, N, N) = I;

  m.B_inf = CMat::Zero(n2, n2);
  m.B_inf.block(0, N, N, N) = -I;
  m.B_inf.block(N, 0, N, N) = -m.eps2_inf;
  m.M_h_inf = CMat::Zero(n2, n2);
  m.M_h_inf.block(0, 0, N, N) = m.eps2_inf;
  m.M_h_inf.block(N, N, N, N) = I;

  const double s2 = 1.0 / std::sqrt(2.0);
  auto make_U = [&](const CMat& b) {
    CMat U(n2, n2);
    U.block(0, 0, N, N) = s2 * b;
    U.block(0, N, N, N) = -s2 * I;
    U.block(N, 0, N, N) = s2 * b;
    U.block(N, N, N, N) = s2 * I;
    return U;
  };
  auto make_Uinv = [&](const CMat& binv) {
    CMat Ui(n2, n2);
    Ui.block(0, 0, N, N) = s2 * binv;
    Ui.block(0, N, N, N) = s2 * binv;
    Ui.block(N, 0, N, N) = -s2 * I;
    Ui.block(N, N, N, N) = s2 * I;
    return Ui;
  };
  m.U = make_U(m.b_op);
  m.U_inv = make_Uinv(m.b_inv);
  m.U_inf = make_U(m.eps_inf);
  m.U_inf_inv = make_Uinv(m.eps_inf_inv);

  // reduced operators
  m.L0 = CMat::Zero(n2, n2);
  m.L0.block(0, 0, N, N) = m.b_op;
  m.L0.block(N, N, N, N) = -m.b_op;

  m.Vl_block = CMat::Zero(n2, n2);
  {
    CMat vl = CMat(m.v_l.asDiagonal());
    m.Vl_block.block(0, 0, N, N) = -vl;
    m.Vl_block.block(0, N, N, N) = vl;
    m.Vl_block.block(N, 0, N, N) = vl;
    m.Vl_block.block(N, N, N, N) = -vl;
  }

  // r = v^2 - v_l^2;  V_s from the exact block algebra of U B U^{-1}
  RVec r = RVec(m.v.array().square()) - RVec(m.v_l.array().square());
  const CMat rb = CMat(r.asDiagonal()) * m.b_inv;
  const CMat vs2 = CMat((2.0 * m.v_s).asDiagonal());
  m.Vs_block = CMat::Zero(n2, n2);
  m.Vs_block.block(0, 0, N, N) = -0.5 * (rb + vs2);
  m.Vs_block.block(0, N, N, N) = -0.5 * (rb - vs2);
  m.Vs_block.block(N, 0, N, N) = 0.5 * (rb + vs2);
  m.Vs_block.block(N, N, N, N) = 0.5 * (rb - vs2);

  m.L = m.L0 + m.Vl_block + m.Vs_block;
  {
    const CMat Lref = m.U * m.B * m.U_inv;
    m.diag_residual = (m.L - Lref).norm() / std::max(1.0, m.L.norm());
  }

  const CMat kb = -0.5 * m.b_inv * CMat(r.asDiagonal()) * m.b_inv;
  m.K = CMat::Zero(n2, n2);
  m.K.block(0, 0, N, N) = kb;
  m.K.block(0, N, N, N) = kb;
  m.K.block(N, 0, N, N) = kb;
  m.K.block(N, N, N, N) = kb;

  m.L_inf = CMat::Zero(n2, n2);
  m.L_inf.block(0, 0, N, N) = m.eps_inf;
  m.L_inf.block(N, N, N, N) = -m.eps_inf;

  return m;
}

Complex KGOperators::h_form(const CVec& f, const CVec& g) const {
  return grid.dx * f.dot(M_h * g);
}

Complex KGOperators::h_inf_form(const CVec& f, const CVec& g) const {
  return grid.dx * f.dot(M_h_inf * g);
}

Complex KGOperators::omega_form(const CVec& f, const CVec& g) const {
  return symplectic_form(f, g, v, grid.dx);
}

Complex KGOperators::omega_inf_form(const CVec& f, const CVec& g) const {
  return symplectic_form(f, g, RVec::Zero(n()), grid.dx);
}

Complex KGOperators::charge_form(const CVec& f, const CVec& g) const {
  return Complex(0.0, 1.0) * omega_form(f, g);
}

Complex KGOperators::k_form(const CVec& u, const CVec& w) const {
  return grid.dx * (u.dot(w) + u.dot(K * w));
}

double KGOperators::l2_norm(const CVec& f) const {
  return std::sqrt(grid.dx) * f.norm();
}

Complex symplectic_form(const CVec& f, const CVec& g, const RVec& v,
                        double dx) {
  const int N = static_cast<int>(v.size());
  if (f.size() != 2 * N || g.size() != 2 * N)
    fail(ErrorCode::DimensionMismatch, "symplectic_form: state size != 2N");
  const CVec f0 = f.head(N), f1 = f.tail(N);
  const CVec g0 = g.head(N), g1 = g.tail(N);
  const Complex s =
      f0.dot(g1) + f1.dot(g0) - 2.0 * f0.dot(CVec(v.asDiagonal() * g0));
  return Complex(0.0, -1.0) * dx * s;
}

double symplectic_energy_bridge_residual(const KGOperators& model,
                                         const CVec& f, const CVec& g) {
  const CVec Binv_g = model.B.partialPivLu().solve(g);
  const Complex lhs = model.omega_form(f, g);
  const Complex rhs = Complex(0.0, 1.0) * model.h_form(f, Binv_g);
  return std::abs(lhs - rhs);
}

bool HypothesisReport::all_pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

const HypothesisEntry* HypothesisReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

namespace {

// sup over the outer half of the grid of <x>^mu |f(x)|
double weighted_tail_sup(const Grid1D& g, const RVec& samples, double mu) {
  double s = 0.0;
  for (int j = 0; j < g.points; ++j) {
    const double x = g.nodes(j);
    if (std::abs(x) < 0.5 * g.half_width) continue;
    s = std::max(s, std::pow(std::hypot(1.0, x), mu) * std::abs(samples(j)));
  }
  return s;
}

RVec centered_diff(const Grid1D& g, const RVec& f) {
  const int N = g.points;
  RVec d(N);
  for (int j = 0; j < N; ++j) {
    const double fm = j > 0 ? f(j - 1) : 0.0;
    const double fp = j < N - 1 ? f(j + 1) : 0.0;
    d(j) = (fp - fm) / (2.0 * g.dx);
  }
  return d;
}

}  // namespace

HypothesisReport check_hypotheses(const KGOperators& model,
                                  const CoefficientSet& coef,
                                  const PotentialSplit& pot) {
  HypothesisReport rep;
  const Grid1D& g = model.grid;
  const int N = g.points;
  rep.neg_index_energy = model.kappa;

  auto add = [&](std::string name, bool pass, double margin, std::string detail,
                 bool proxy = false) {
    rep.entries.push_back({std::move(name), pass, margin, std::move(detail), proxy});
  };

  // (E1) eps^2 >= m0^2
  {
    Eigen::SelfAdjointEigenSolver<CMat> es(model.eps2, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    add("E1", lmin >= model.m0_sq - 1e-10 * std::max(1.0, model.m0_sq),
        lmin - model.m0_sq,
        "min eig(eps^2) = " + std::to_string(lmin) +
            ", m0^2 = " + std::to_string(model.m0_sq));
  }

  // (E2) relative bound theta < 1, fitted over the eps eigenbasis (proxy)
  {
    Eigen::SelfAdjointEigenSolver<CMat> es(model.eps2);
    double theta = 0.0;
    const int lo = N / 2;
    for (int k = lo; k < N; ++k) {
      const CVec u = es.eigenvectors().col(k);
      const double vu = (model.v.asDiagonal() * u).norm();
      const double eu = std::sqrt(std::max(es.eigenvalues()(k), 0.0));
      if (eu > 0) theta = std::max(theta, vu / eu);
    }
    double C = 0.0;
    for (int k = 0; k < lo; ++k) {
      const CVec u = es.eigenvectors().col(k);
      const double vu = (model.v.asDiagonal() * u).norm();
      const double eu = std::sqrt(std::max(es.eigenvalues()(k), 0.0));
      C = std::max(C, vu - theta * eu);
    }
    add("E2", theta < 1.0, 1.0 - theta,
        "theta_hat = " + std::to_string(theta) + ", C_hat = " + std::to_string(C),
        true);
  }

  // (E3) 0 not in sigma(eps^2 - v^2)
  {
    const double min_abs = model.energy_evals.cwiseAbs().minCoeff();
    add("E3", min_abs > 1e-8, min_abs,
        "min |eig(eps^2 - v^2)| = " + std::to_string(min_abs));
  }

  // (E4)/(A2) proxy: kappa finite
  add("E4", true, double(model.kappa),
      "kappa = " + std::to_string(model.kappa) + " negative eigenvalues of eps^2 - v^2",
      true);
  add("A2", true, double(model.kappa), "compactness proxy: finite kappa on the grid",
      true);

  // (A1) coefficient bounds and decay
  {
    double c0 = 1e300, c1 = 0.0;
    RVec da(N), db(N), dc(N), dm(N);
    for (int j = 0; j < N; ++j) {
      const double x = g.nodes(j);
      const double av = coef.a(x), cv = coef.c(x), mv = coef.m_x(x);
      c0 = std::min({c0, av, cv, mv});
      c1 = std::max({c1, av, cv, mv});
      da(j) = av - 1.0;
      db(j) = coef.b(x);
      dc(j) = cv - 1.0;
      dm(j) = mv - coef.m_inf;
    }
    const double Ma = weighted_tail_sup(g, da, coef.mu0);
    const double Mb = weighted_tail_sup(g, db, coef.mu0);
    const double Mc = weighted_tail_sup(g, dc, coef.mu0);
    const double Mm = weighted_tail_sup(g, dm, coef.mu0);
    add("A1", c0 > 0, c0,
        "c0 = " + std::to_string(c0) + ", c1 = " + std::to_string(c1) +
            "; <x>^mu0 tail sups: a-1 " + std::to_string(Ma) + ", b " +
            std::to_string(Mb) + ", c-1 " + std::to_string(Mc) + ", m-m_inf " +
            std::to_string(Mm));
  }

  // (A3) = (E3)
  {
    const double min_abs = model.energy_evals.cwiseAbs().minCoeff();
    add("A3", min_abs > 1e-8, min_abs, "same check as (E3)");
  }

  // (A4) split decay fits
  {
    const double Ms = weighted_tail_sup(g, model.v_s, pot.mu_s);
    RVec d1 = centered_diff(g, model.v_l);
    RVec d2 = centered_diff(g, d1);
    const double M0 = weighted_tail_sup(g, model.v_l, pot.mu_l);
    const double M1 = weighted_tail_sup(g, d1, pot.mu_l + 1.0);
    const double M2 = weighted_tail_sup(g, d2, pot.mu_l + 2.0);
    add("A4", pot.mu_s > 1.0 && pot.mu_l > 0.0, pot.mu_s - 1.0,
        "<x>^mu_s |v_s| <= " + std::to_string(Ms) + "; <x>^(mu_l+k)|d^k v_l| <= " +
            std::to_string(M0) + ", " + std::to_string(M1) + ", " +
            std::to_string(M2),
        true);
  }

  // (B1) proxy: smooth decay of v derivatives
  {
    RVec d1 = centered_diff(g, model.v);
    RVec d2 = centered_diff(g, d1);
    const double M1 = weighted_tail_sup(g, d1, 1.0);
    const double M2 = weighted_tail_sup(g, d2, 2.0);
    add("B1", true, 0.0,
        "derivative tail sups: " + std::to_string(M1) + ", " + std::to_string(M2),
        true);
  }

  // (B2) sufficient conditions
  {
    const double vmax = model.v.cwiseAbs().maxCoeff();
    const double lim1 = std::sqrt(2.0) * coef.m_inf;
    const double lim2 = 2.0 * coef.m_inf;
    const double vmin = model.v.minCoeff();
    const double vmax_signed = model.v.maxCoeff();
    const bool const_sign = vmin >= -1e-12 || vmax_signed <= 1e-12;
    bool pass = false;
    double margin = 0.0;
    std::string which;
    if (vmax < lim1) {
      pass = true;
      margin = lim1 - vmax;
      which = "||v||_inf < sqrt(2) m";
    } else if (const_sign && vmax < lim2) {
      pass = true;
      margin = lim2 - vmax;
      which = "constant sign and ||v||_inf < 2m";
    } else {
      margin = lim1 - vmax;
      which = "neither sufficient condition";
    }
    add("B2-sufficient", pass, margin, which);
  }

  // (C) constant sign of v_l near infinity
  {
    const double vmax = model.v_l.cwiseAbs().maxCoeff();
    double radius = 0.0;
    int sign = 0;
    bool consistent = true;
    for (int j = 0; j < N; ++j) {
      const double x = g.nodes(j);
      const double val = model.v_l(j);
      if (std::abs(val) <= 1e-14 * std::max(1.0, vmax)) continue;
      const int s = val > 0 ? 1 : -1;
      if (sign == 0) sign = s;
      if (s != sign) radius = std::max(radius, std::abs(x));
    }
    // recompute sign outside the last flip radius
    sign = 0;
    for (int j = 0; j < N; ++j) {
      const double x = g.nodes(j);
      if (std::abs(x) <= radius) continue;
      const double val = model.v_l(j);
      if (std::abs(val) <= 1e-14 * std::max(1.0, vmax)) continue;
      const int s = val > 0 ? 1 : -1;
      if (sign == 0) sign = s;
      if (s != sign) consistent = false;
    }
    const bool relevant = vmax > 0;
    bool pass;
    std::string detail;
    if (!relevant) {
      pass = pot.lr_sign == 0;
      detail = "v_l identically 0";
    } else {
      pass = consistent && sign != 0 && pot.lr_sign == sign;
      detail = "sign " + std::to_string(sign) + " beyond radius " +
               std::to_string(radius) + ", declared lr_sign " +
               std::to_string(pot.lr_sign);
    }
    add("C", pass, g.half_width - radius, detail);
  }

  return rep;
}

}  // namespace kgs
