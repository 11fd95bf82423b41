#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "kgs/scattering.hpp"
#include "kgs/smooth.hpp"

using namespace kgs;

namespace {

PotentialSplit well_potential(double amplitude, double radius, double ramp) {
  PotentialSplit p;
  SmoothFunction bump = smooth_indicator(-radius - ramp, radius + ramp, ramp);
  p.v_s = [amplitude, bump](double x) { return -amplitude * bump(x); };
  p.v_l = [](double) { return 0.0; };
  p.mu_s = 4.0;
  p.lr_sign = 0;
  return p;
}

PotentialSplit longrange_potential(double gamma, double mu) {
  PotentialSplit p;
  p.v_s = [](double) { return 0.0; };
  p.v_l = [gamma, mu](double x) {
    return gamma * std::pow(std::hypot(1.0, x), -mu);
  };
  p.mu_s = 4.0;
  p.mu_l = mu;
  p.lr_sign = gamma > 0 ? 1 : -1;
  return p;
}

struct ModelBundle {
  KGOperators model;
  Propagator P_B, P_B_inf;
  SpectrumClassification S;
  Decomposition dec;
};

ModelBundle make_bundle(const Grid1D& g, const PotentialSplit& pot) {
  ModelBundle b;
  b.model = build_generator(g, flat_coefficients(1.0), pot);
  b.P_B = make_propagator_B(b.model);
  b.P_B_inf = make_propagator_B_inf(b.model);
  auto gram = std::make_shared<GramStructure>(build_gram(b.model.M_h));
  const KreinOperator B = make_krein_operator(gram, b.model.B);
  b.S = classify_spectrum(B);
  b.dec = bound_scatt_decomposition(b.model, b.P_B, b.S);
  return b;
}

}  // namespace

TEST_CASE("packets are unit h_inf states with validated support and band") {
  const Grid1D g = make_grid(30.0, 128);
  const KGOperators m = build_generator(g, flat_coefficients(1.0), zero_potential());
  WavePacketSpec spec;
  spec.x0 = -5.0;
  spec.xi0 = 1.2;
  spec.sigma = 3.0;
  const CVec f = make_packet(m, spec);
  CHECK(std::abs(m.h_inf_form(f, f).real() - 1.0) < 1e-10);

  WavePacketSpec wide = spec;
  wide.x0 = 25.0;
  CHECK_THROWS_AS(make_packet(m, wide), Error);
  WavePacketSpec slow = spec;
  slow.xi0 = 0.3;
  CHECK_THROWS_WITH_AS(make_packet(m, slow), doctest::Contains("BandwidthExceeded"),
                       Error);
}

TEST_CASE("decomposition: free model has no bound states") {
  const Grid1D g = make_grid(30.0, 96);
  const ModelBundle b = make_bundle(g, zero_potential());
  CHECK(b.dec.pp_rank == 0);
  CHECK(b.dec.P_pp.norm() < 1e-10);
  CHECK((b.dec.P_scatt - CMat::Identity(b.model.dim2(), b.model.dim2())).norm() <
        1e-10);
}

TEST_CASE("decomposition: discrete gap states for a weak well") {
  const Grid1D g = make_grid(30.0, 96);
  const ModelBundle b = make_bundle(g, well_potential(0.15, 4.0, 2.0));
  REQUIRE(b.model.kappa == 0);
  // independent oracle: count gap eigenvalues of B directly
  int gap_count = 0;
  {
    Eigen::ComplexEigenSolver<CMat> es(b.model.B, false);
    for (int i = 0; i < b.model.dim2(); ++i) {
      const Complex z = es.eigenvalues()(i);
      if (std::abs(z.imag()) < 1e-8 && std::abs(z.real()) < b.model.m_grid - 1e-6)
        ++gap_count;
    }
  }
  CHECK(gap_count == 2);  // a sign-definite well binds one branch only
  CHECK(b.dec.pp_rank == gap_count);
  CHECK(b.dec.selfadjoint_residual < 1e-8);
  CHECK(b.dec.idempotent_residual < 1e-8);
  CHECK(b.dec.h_orthogonality < 1e-8);
  CHECK(b.dec.omega_orthogonality < 1e-8);
  CHECK(b.dec.cross_norm < 1e-8);
  // P_pp + P_scatt = 1 exactly by construction
  CHECK((b.dec.P_pp + b.dec.P_scatt -
         CMat::Identity(b.model.dim2(), b.model.dim2()))
            .norm() == 0.0);
}

TEST_CASE("decomposition: supercritical well carries its complex pairs in P_pp") {
  const Grid1D g = make_grid(30.0, 96);
  PotentialSplit p = well_potential(2.5, 7.0, 3.0);
  const ModelBundle b = make_bundle(g, p);
  REQUIRE(b.model.kappa >= 1);
  REQUIRE(b.S.complex_pairs.size() >= 1);
  int pair_dim = 0;
  for (const auto& cp : b.S.complex_pairs) pair_dim += 2 * cp.riesz_rank;
  CHECK(b.dec.pp_rank >= pair_dim);
  CHECK(b.dec.omega_orthogonality < 1e-8);
  CHECK(b.dec.selfadjoint_residual < 1e-7);
}

TEST_CASE("eikonal: free phase is exactly x xi") {
  const Grid1D g = make_grid(30.0, 64);
  const EikonalPhase ph = eikonal_phase_1d(zero_potential(), 1.0, g, 8.0, 0.4);
  CHECK(ph.certified);
  CHECK(ph.max_residual < 1e-12);
  for (int j = 0; j < 64; j += 7)
    for (int k = 0; k < 64; k += 7) {
      CHECK(ph.phi_plus(j, k) ==
            doctest::Approx(g.nodes(j) * ph.xi_nodes(k)).epsilon(1e-12));
      CHECK(ph.phi_minus(j, k) ==
            doctest::Approx(g.nodes(j) * ph.xi_nodes(k)).epsilon(1e-12));
    }
}

TEST_CASE("eikonal: long-range plug-back residual and sublinear correction") {
  const Grid1D g = make_grid(60.0, 192);
  const PotentialSplit p = longrange_potential(0.2, 0.5);
  const EikonalPhase ph = eikonal_phase_1d(p, 1.0, g, 10.0, 0.4);
  CHECK(ph.certified);
  CHECK(ph.max_residual <= 1e-8);

  // |phi - x xi| grows sublinearly, consistent with exponent 1 - mu = 1/2
  const int kxi = 160;  // some xi above alpha
  REQUIRE(std::abs(ph.xi_nodes(kxi)) > 0.4);
  std::vector<double> lx, lc;
  for (int j = 0; j < g.points; ++j) {
    const double x = g.nodes(j);
    if (x < 5.0) continue;
    const double corr = std::abs(ph.phi_plus(j, kxi) - x * ph.xi_nodes(kxi));
    if (corr > 1e-12) {
      lx.push_back(std::log(x));
      lc.push_back(std::log(corr));
    }
  }
  REQUIRE(lx.size() > 10);
  const int n = static_cast<int>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += lx[i];
    sy += lc[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * lc[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(0.5).epsilon(0.3));  // fit tolerance 0.15 abs

  CHECK_THROWS_WITH_AS(
      eikonal_phase_1d(longrange_potential(-0.9, 0.3), 1.0, g, 3.0, 0.2),
      doctest::Contains("BranchCollapse"), Error);
}

TEST_CASE("fio: free phase gives exact Fourier inversion, i xi gives d/dx") {
  const Grid1D g = make_grid(20.0, 64);
  const EikonalPhase ph = eikonal_phase_1d(zero_potential(), 1.0, g, 5.0, 0.4);
  // band-limited input away from the boundary
  CVec u(g.points);
  for (int j = 0; j < g.points; ++j) {
    const double x = g.nodes(j);
    u(j) = std::exp(-0.25 * x * x) * std::polar(1.0, 1.1 * x);
  }
  const CMat J = fio_matrix(ph, true, nullptr, g.dx);
  CHECK((J * u - u).norm() < 1e-8 * u.norm());

  auto amp = [](double, double xi) { return xi; };
  CVec du = fio_apply(ph, true, amp, u, g.dx);
  // oracle: spectral derivative -i d/dx via the same DFT grid
  CVec uhat(g.points);
  for (int k = 0; k < g.points; ++k) {
    Complex s = 0;
    for (int j = 0; j < g.points; ++j)
      s += g.dx * std::polar(1.0, -g.nodes(j) * ph.xi_nodes(k)) * u(j);
    uhat(k) = s * ph.xi_nodes(k);
  }
  CVec expect(g.points);
  const double dxi = ph.xi_nodes(1) - ph.xi_nodes(0);
  for (int j = 0; j < g.points; ++j) {
    Complex s = 0;
    for (int k = 0; k < g.points; ++k)
      s += std::polar(1.0, g.nodes(j) * ph.xi_nodes(k)) * uhat(k);
    expect(j) = s * dxi / (2.0 * M_PI);
  }
  CHECK((du - expect).norm() < 1e-10 * expect.norm());
}

TEST_CASE("fio: near-unitary on the outgoing band for a long-range phase") {
  const Grid1D g = make_grid(60.0, 192);
  const EikonalPhase ph = eikonal_phase_1d(longrange_potential(0.2, 0.5), 1.0, g,
                                           10.0, 0.4);
  CVec u(g.points);
  for (int j = 0; j < g.points; ++j) {
    const double x = g.nodes(j);
    u(j) = std::exp(-0.5 * std::pow((x - 10.0) / 4.0, 2)) *
           std::polar(1.0, 1.2 * x);
  }
  const CVec ju = fio_apply(ph, true, nullptr, u, g.dx);
  const double ratio = ju.norm() / u.norm();
  CHECK(ratio > 0.9);
  CHECK(ratio < 1.1);
}

TEST_CASE("modifier at v_l = 0: block involution and the Lemma-nerd identity") {
  const Grid1D g = make_grid(30.0, 96);
  const KGOperators m = build_generator(g, flat_coefficients(1.0), zero_potential());
  const EikonalPhase ph = eikonal_phase_1d(zero_potential(), 1.0, g, 8.0, 0.4);
  const CMat T = build_modifier_T(m, ph, +1);
  const int n2 = m.dim2();
  CHECK((T * T - CMat::Identity(n2, n2)).norm() < 1e-8 * std::sqrt(double(n2)));

  // Jhat = U^{-1} (+diag(1,-1)) U_inf equals T on the free model
  CMat D = CMat::Zero(n2, n2);
  D.block(0, 0, m.n(), m.n()) = CMat::Identity(m.n(), m.n());
  D.block(m.n(), m.n(), m.n(), m.n()) = -CMat::Identity(m.n(), m.n());
  const CMat Jhat = m.U_inv * D * m.U_inf;
  WavePacketSpec spec;
  spec.x0 = -5.0;
  spec.xi0 = 1.2;
  spec.sigma = 3.0;
  const CVec f = make_packet(m, spec);
  CHECK(((T - Jhat) * f).norm() < 1e-8);
  spec.shell = WavePacketSpec::Shell::Lower;
  const CVec fl = make_packet(m, spec);
  CHECK(((T - Jhat) * fl).norm() < 1e-8);
}

TEST_CASE("modifier vs b^{-1}-conjugated proxy decays along the free flow") {
  const Grid1D g = make_grid(80.0, 256);
  const PotentialSplit p = longrange_potential(0.2, 0.5);
  const KGOperators m = build_generator(g, flat_coefficients(1.0), p);
  const Propagator P_inf = make_propagator_B_inf(m);
  const EikonalPhase ph = eikonal_phase_1d(p, 1.0, g, 10.0, 0.4);
  const CMat T = build_modifier_T(m, ph, +1);
  const CMat Jhat = build_jhat_proxy(m, ph, +1);

  WavePacketSpec spec;
  spec.x0 = -8.0;
  spec.xi0 = 1.2;
  spec.sigma = 3.5;
  const CVec f = make_packet(m, spec);
  double prev = 1e300;
  for (double t : {10.0, 20.0, 40.0}) {
    const CVec ft = evolve(P_inf, f, t);
    const double d = m.l2_norm(CVec((T - Jhat) * ft));
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("short-range wave operator: free model is the identity") {
  const Grid1D g = make_grid(60.0, 128);
  const ModelBundle b = make_bundle(g, zero_potential());
  WaveOpInputs in{&b.model, &b.P_B, &b.P_B_inf, &b.dec};
  WavePacketSpec spec;
  spec.x0 = -10.0;
  spec.xi0 = 1.0;
  spec.sigma = 4.0;
  const ScatteringReport rep = short_range_wave_operator(in, {spec}, 30.0, +1);
  CHECK(rep.unitarity_defect <= 1e-10);
  CHECK(rep.max_completeness_defect <= 1e-10);
  CHECK(rep.max_intertwining_residual <= 1e-9);
  const CVec f = make_packet(b.model, spec);
  CHECK((rep.f_out[0] - f).norm() * std::sqrt(g.dx) < 1e-9);
}

TEST_CASE("short-range wave operator on the compact well") {
  const Grid1D g = make_grid(70.0, 256);
  const ModelBundle b = make_bundle(g, well_potential(0.3, 4.0, 2.0));
  REQUIRE(b.model.kappa == 0);
  WaveOpInputs in{&b.model, &b.P_B, &b.P_B_inf, &b.dec};
  std::vector<WavePacketSpec> packets(2);
  packets[0].x0 = -6.0;
  packets[0].xi0 = -1.4;
  packets[0].sigma = 4.0;
  packets[1].x0 = 6.0;
  packets[1].xi0 = 1.4;
  packets[1].sigma = 4.0;
  const ScatteringReport rep = short_range_wave_operator(in, packets, 40.0, +1);
  CHECK(rep.unitarity_defect <= 5e-2);
  CHECK(rep.mean_convergence_ratio <= 0.6);
  CHECK(rep.max_completeness_defect <= 5e-2);
  CHECK(rep.max_intertwining_residual <= 2.0 * std::max(rep.unitarity_defect, 1e-4));
  CHECK(rep.max_inverse_residual <= 2.0 * std::max(rep.unitarity_defect, 1e-4));
  CHECK(rep.symplectic_residual <= 2.0 * std::max(rep.unitarity_defect, 1e-4));

  // backward asymptotes exist too
  const ScatteringReport repm = short_range_wave_operator(in, packets, 40.0, -1);
  CHECK(repm.unitarity_defect <= 5e-2);

  // guard: a long-range tail is rejected
  const Grid1D g2 = make_grid(60.0, 96);
  PotentialSplit bad;
  bad.v_s = [](double x) { return -0.2 * std::pow(std::hypot(1.0, x), -0.8); };
  bad.v_l = [](double) { return 0.0; };
  bad.mu_s = 0.8;
  bad.lr_sign = 0;
  const ModelBundle b2 = make_bundle(g2, bad);
  WaveOpInputs in2{&b2.model, &b2.P_B, &b2.P_B_inf, &b2.dec};
  CHECK_THROWS_WITH_AS(short_range_wave_operator(in2, {packets[0]}, 20.0, +1),
                       doctest::Contains("ShortRangeViolated"), Error);
}

TEST_CASE("long-range operator degenerates to short-range at v_l = 0") {
  const Grid1D g = make_grid(60.0, 128);
  const ModelBundle b = make_bundle(g, well_potential(0.3, 4.0, 2.0));
  WaveOpInputs in{&b.model, &b.P_B, &b.P_B_inf, &b.dec};
  WavePacketSpec spec;  // upper shell matches lr_sign = +1
  spec.x0 = -6.0;
  spec.xi0 = -1.2;
  spec.sigma = 3.0;
  const EikonalPhase ph = eikonal_phase_1d(zero_potential(), 1.0, g, 8.0, 0.4);
  const CMat T = build_modifier_T(b.model, ph, +1);
  const ScatteringReport s_rep = short_range_wave_operator(in, {spec}, 30.0, +1);
  const ScatteringReport l_rep = long_range_wave_operator(in, T, {spec}, 30.0, +1);
  CHECK(b.model.l2_norm(CVec(s_rep.f_out[0] - l_rep.f_out[0])) < 1e-8);
}

TEST_CASE("long-range modifier is decisive for v_l = 0.2 <x>^{-1/2}") {
  const Grid1D g = make_grid(80.0, 256);
  const PotentialSplit p = longrange_potential(0.2, 0.5);
  const ModelBundle b = make_bundle(g, p);
  WaveOpInputs in{&b.model, &b.P_B, &b.P_B_inf, &b.dec};
  const EikonalPhase ph = eikonal_phase_1d(p, 1.0, g, 45.0, 0.25);
  CHECK(ph.max_residual <= 1e-8);
  const CMat T = build_modifier_T(b.model, ph, +1);

  std::vector<WavePacketSpec> packets(2);
  packets[0].x0 = -8.0;
  packets[0].xi0 = -1.2;
  packets[0].sigma = 4.0;
  packets[1].x0 = 8.0;
  packets[1].xi0 = 1.2;
  packets[1].sigma = 4.0;

  const double T_h = 48.0;
  const ScatteringReport mod = long_range_wave_operator(in, T, packets, T_h, +1);
  const CMat I2 = CMat::Identity(b.model.dim2(), b.model.dim2());
  const ScatteringReport unmod = long_range_wave_operator(in, I2, packets, T_h, +1);

  // the phase drift of the unmodified comparison never converges
  CHECK(unmod.mean_convergence_ratio >= 0.9);
  // the modified route's increments sit two orders below the unmodified ones
  double mod_inc = 0.0, unmod_inc = 0.0;
  for (const auto& r : mod.packets) mod_inc = std::max(mod_inc, r.increment_T);
  for (const auto& r : unmod.packets) unmod_inc = std::max(unmod_inc, r.increment_T);
  CHECK(mod_inc * 20.0 < unmod_inc);
  CHECK(mod_inc < 2e-2);
  // note: a mod-ratio threshold of 0.7 would sit below the 2^{-mu_l} = 0.707
  // asymptote of the amplitude-one modifier; see the acceptance suite.
}
