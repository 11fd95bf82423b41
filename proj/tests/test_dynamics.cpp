#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "kgs/dynamics.hpp"
#include "kgs/expm.hpp"
#include "kgs/scattering.hpp"

using namespace kgs;

namespace {

PotentialSplit gaussian_well_potential(double amplitude, double width) {
  PotentialSplit p;
  p.v_s = [amplitude, width](double x) {
    return -amplitude * std::exp(-(x / width) * (x / width));
  };
  p.v_l = [](double) { return 0.0; };
  p.mu_s = 4.0;
  p.lr_sign = 0;
  return p;
}

}  // namespace

TEST_CASE("expm against closed forms") {
  {
    CMat A = CMat::Zero(2, 2);
    A(0, 1) = 1.0;  // nilpotent
    const CMat E = expm(A);
    CMat expect = CMat::Identity(2, 2);
    expect(0, 1) = 1.0;
    CHECK((E - expect).norm() < 1e-14);
  }
  {
    // rotation generator
    CMat A(2, 2);
    A << 0, -1, 1, 0;
    const double th = 2.3;
    const CMat E = expm(CMat(th * A));
    CMat expect(2, 2);
    expect << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    CHECK((E - expect).norm() < 1e-12);
  }
  {
    // large-norm scaling path vs eigendecomposition
    const CMat R = random_cmat(6, 6, 40);
    const CMat H = 8.0 * (R + R.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    CMat expect = es.eigenvectors() *
                  es.eigenvalues().array().exp().matrix().asDiagonal() *
                  es.eigenvectors().adjoint();
    CHECK((expm(H) - expect).norm() < 1e-10 * expect.norm());
  }
}

TEST_CASE("propagator: identity at t=0, group law, inversion") {
  const Grid1D g = make_grid(20.0, 32);
  const KGOperators m =
      build_generator(g, flat_coefficients(1.0), gaussian_well_potential(0.6, 3.0));
  const Propagator P = make_propagator_B(m);
  CHECK(P.method == PropagatorMethod::HermitianSimilarity);
  CHECK(P.reconstruction_residual < 1e-10);
  const CVec f = random_cvec(m.dim2(), 10);
  CHECK((evolve(P, f, 0.0) - f).norm() < 1e-12 * f.norm());
  const CVec a = evolve(P, evolve(P, f, 1.7), 2.4);
  const CVec b = evolve(P, f, 4.1);
  CHECK((a - b).norm() < 1e-9 * f.norm());
  CHECK((evolve(P, evolve(P, f, 3.0), -3.0) - f).norm() < 1e-9 * f.norm());
}

TEST_CASE("free evolution is diagonal in the L representation") {
  const Grid1D g = make_grid(20.0, 32);
  const KGOperators m = build_generator(g, flat_coefficients(1.0), zero_potential());
  const Propagator P_L = make_propagator_L(m);
  // an eps-eigenvector on the upper shell multiplies by e^{-it e}
  Eigen::SelfAdjointEigenSolver<CMat> es(m.eps2);
  const int k = 5;
  const double e = std::sqrt(es.eigenvalues()(k));
  CVec u = CVec::Zero(m.dim2());
  u.head(m.n()) = es.eigenvectors().col(k);
  const double t = 3.7;
  const CVec ut = evolve(P_L, u, t);
  const CVec expect = std::polar(1.0, -e * t) * u;
  CHECK((ut - expect).norm() < 1e-9);
  CHECK(std::abs(m.l2_norm(ut) - m.l2_norm(u)) < 1e-10);
  // lower shell rotates the other way
  CVec w = CVec::Zero(m.dim2());
  w.tail(m.n()) = es.eigenvectors().col(k);
  const CVec wt = evolve(P_L, w, t);
  CHECK((wt - std::polar(1.0, e * t) * w).norm() < 1e-9);
}

TEST_CASE("complex pair: Riesz-subspace data grows at the predicted rate") {
  // synthetic Krein-selfadjoint generator with eigenvalues +-i
  CMat A(2, 2);
  A << 0, 1, -1, 0;
  const Propagator P = make_propagator(A);
  // Riesz subspace of z = i: eigenvector (1, i)/sqrt(2)
  CVec f(2);
  f << 1.0, Complex(0, 1);
  f.normalize();
  const double n1 = P.apply(f, 1.0).norm();
  const double n3 = P.apply(f, 3.0).norm();
  // e^{-itA} f = e^{t} f on this subspace: growth rate Im z = 1
  const double rate = 0.5 * std::log(n3 / n1);
  CHECK(rate == doctest::Approx(1.0).epsilon(0.05));
  CHECK_THROWS_WITH_AS(evolve(P, f, 1e5),
                       doctest::Contains("OverflowAtExponentialGrowth"), Error);
}

TEST_CASE("conservation: h and q drift at roundoff for kappa = 0 and kappa = 1") {
  const Grid1D g = make_grid(30.0, 64);
  std::vector<double> times;
  for (int i = 0; i <= 10; ++i) times.push_back(5.0 * i);
  for (double amp : {0.6, 1.45}) {
    const KGOperators m =
        build_generator(g, flat_coefficients(1.0), gaussian_well_potential(amp, 3.0));
    const Propagator P = make_propagator_B(m);
    for (int s = 0; s < 5; ++s) {
      const CVec f = random_cvec(m.dim2(), 100 + s);
      const TrajectoryReport rep = conservation_report(m, P, f, times);
      CHECK(rep.h_drift <= 1e-8);
      CHECK(rep.q_drift <= 1e-8);
      CHECK(rep.growth_class == GrowthClass::Bounded);
    }
  }
}

TEST_CASE("growth classification against synthetic oracles") {
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(2.0 * i);

  // Jordan block [[l,1],[0,l]]: ||e^{-itG} f|| grows linearly
  {
    CMat G(2, 2);
    G << 2.0, 1.0, 0.0, 2.0;
    const Propagator P = make_propagator(G);
    CHECK(P.method == PropagatorMethod::SchurPade);
    CVec f(2);
    f << 0.0, 1.0;
    std::vector<double> norms;
    for (double t : times) norms.push_back(P.apply(f, t).norm());
    int ord = 0;
    double rate = 0, res = 0;
    CHECK(classify_growth(times, norms, &ord, &rate, &res) ==
          GrowthClass::Polynomial);
    CHECK(ord == 1);
  }
  // exponential curve
  {
    std::vector<double> norms;
    for (double t : times) norms.push_back(std::exp(0.12 * t));
    int ord = 0;
    double rate = 0, res = 0;
    CHECK(classify_growth(times, norms, &ord, &rate, &res) ==
          GrowthClass::Exponential);
    CHECK(rate == doctest::Approx(0.12).epsilon(0.05));
  }
  // bounded oscillation
  {
    std::vector<double> norms;
    for (double t : times) norms.push_back(1.0 + 0.3 * std::sin(t));
    CHECK(classify_growth(times, norms, nullptr, nullptr, nullptr) ==
          GrowthClass::Bounded);
  }
}

TEST_CASE("velocity diagnostics on the free model") {
  const Grid1D g = make_grid(60.0, 256);
  const KGOperators m = build_generator(g, flat_coefficients(1.0), zero_potential());
  const Propagator P_L = make_propagator_L_inf(m);

  WavePacketSpec spec;
  spec.x0 = 0.0;
  spec.xi0 = 1.2;
  spec.sigma = 3.0;
  const CVec f = make_packet(m, spec);
  const CVec u = m.U_inf * f;

  const SmoothFunction chi = smooth_indicator(1.2, 2.2, 0.15);
  std::vector<double> times = {12.0, 24.0, 36.0, 48.0};
  const VelocityDiagnostic d =
      velocity_diagnostics(m, P_L, u, chi, {1.2, 1.5}, 0.05, times);

  // group speed < 1: mass beyond 1.2 t stays negligible
  CHECK(d.tail_mass[0].back() <= 0.05);
  CHECK(d.tail_mass[1].back() <= 0.05);
  // the packet leaves every slowly-growing core region
  CHECK(d.inner_mass.back() <= 0.1);
  CHECK(d.inner_trend_pass);

  // precondition: chi meeting [-m, m] is refused
  const SmoothFunction bad = smooth_indicator(0.5, 1.5, 0.1);
  CHECK_THROWS_WITH_AS(
      velocity_diagnostics(m, P_L, u, bad, {1.2}, 0.05, times),
      doctest::Contains("WindowTouchesThreshold"), Error);

  // horizon guard
  CHECK_THROWS_WITH_AS(
      velocity_diagnostics(m, P_L, u, chi, {1.2}, 0.05, {80.0}),
      doctest::Contains("HorizonExceeded"), Error);
}

TEST_CASE("conjugate operator: hermitian, drift slope, commutator symbol") {
  const Grid1D g = make_grid(30.0, 256);
  const double m_inf = 1.0;
  const CMat a = build_conjugate_operator(g, m_inf);
  CHECK(herm_residual(a) < 1e-12);

  const KGOperators m = build_generator(g, flat_coefficients(m_inf), zero_potential());

  // plane-wave-like packet: <a> grows linearly with slope ~ x-drift speed
  WavePacketSpec spec;
  spec.x0 = -6.0;
  spec.xi0 = 1.0;
  spec.sigma = 3.0;
  const CVec f = make_packet(m, spec);
  CVec u0 = (m.U_inf * f).head(m.n());  // upper-shell scalar component
  u0 /= u0.norm();
  Eigen::SelfAdjointEigenSolver<CMat> es(m.eps2_inf);
  auto evolve_scalar = [&](const CVec& w, double t) {
    CVec c = es.eigenvectors().adjoint() * w;
    for (int i = 0; i < c.size(); ++i)
      c(i) *= std::polar(1.0, -std::sqrt(es.eigenvalues()(i)) * t);
    return CVec(es.eigenvectors() * c);
  };
  auto expect_a = [&](double t) {
    const CVec ut = evolve_scalar(u0, t);
    return ut.dot(a * ut).real();
  };
  const double slope = (expect_a(8.0) - expect_a(0.0)) / 8.0;
  // d<a>/dt = <[eps, ia]> ~ xi^2/(xi^2+m^2)^{3/2} = 0.354 at xi = 1
  CHECK(slope == doctest::Approx(0.354).epsilon(0.10));
  // sign(xi0 . x-drift) is + for either direction: left movers drift left
  WavePacketSpec back = spec;
  back.x0 = 6.0;
  back.xi0 = -1.0;
  const CVec fb = make_packet(m, back);
  CVec ub = (m.U_inf * fb).head(m.n());
  ub /= ub.norm();
  const CVec ubt = evolve_scalar(ub, 8.0);
  const double slope_b =
      (ubt.dot(a * ubt).real() - ub.dot(a * ub).real()) / 8.0;
  CHECK(slope_b == doctest::Approx(0.354).epsilon(0.10));

  // [eps_inf, i a] acts like eps^{-3}(eps^2 - m^2) on the packet band
  const CMat comm =
      Complex(0, 1) * (m.eps_inf * a - a * m.eps_inf);
  const double got = u0.dot(comm * u0).real();
  const double e0 = std::sqrt(1.0 + m_inf * m_inf);  // band center energy
  const double sym = (e0 * e0 - m_inf * m_inf) / (e0 * e0 * e0);
  CHECK(got == doctest::Approx(sym).epsilon(0.05));
}

TEST_CASE("mourre probe: free-model window positivity and sign symmetry") {
  const Grid1D g = make_grid(30.0, 384);
  const KGOperators m = build_generator(g, flat_coefficients(1.0), zero_potential());
  const Propagator P_L = make_propagator_L_inf(m);
  const CMat a = build_conjugate_operator(g, 1.0);

  const MourreReport r1 = mourre_probe(m, P_L, a, 1.5, 0.1);
  CHECK(r1.c0_plane == doctest::Approx(0.3138).epsilon(0.01));
  CHECK(r1.c0_hat >= 0.3);
  CHECK(r1.defect <= 0.1 * r1.c0_hat);

  const MourreReport r2 = mourre_probe(m, P_L, a, -1.5, 0.1);
  CHECK(r2.c0_hat >= 0.3);

  CHECK_THROWS_WITH_AS(mourre_probe(m, P_L, a, 1.01, 0.1),
                       doctest::Contains("WindowTouchesThreshold"), Error);
}
