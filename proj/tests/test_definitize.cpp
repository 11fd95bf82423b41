#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "kgs/definitize.hpp"

using namespace kgs;

namespace {

CMat mat2(Complex a, Complex b, Complex c, Complex d) {
  CMat m(2, 2);
  m << a, b, c, d;
  return m;
}

KreinOperator krein_op(const CMat& M, const CMat& A) {
  return make_krein_operator(std::make_shared<GramStructure>(build_gram(M)), A);
}

// Independent brute-force oracle for the canonical definitizing polynomial:
// enumerate factors over every spectral point with exponents 0..3 and both
// signs, even total degree, smallest degree first; PSD test by hermitian
// eigenvalues of herm(M p(A)).
struct BruteCandidate {
  RVec coeffs;
  int degree;
};

bool brute_psd(const CMat& M, const RVec& coeffs, const CMat& A) {
  const int n = static_cast<int>(A.rows());
  CMat P = CMat::Zero(n, n);
  for (int i = static_cast<int>(coeffs.size()) - 1; i >= 0; --i) {
    P = P * A;
    P.diagonal().array() += coeffs(i);
  }
  CMat H = M * P;
  H = 0.5 * (H + H.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  return es.eigenvalues().minCoeff() >= -1e-8 * std::max(1.0, H.norm());
}

RVec conv(const RVec& a, const RVec& b) {
  RVec c = RVec::Zero(a.size() + b.size() - 1);
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) c(i + j) += a(i) * b(j);
  return c;
}

BruteCandidate brute_force_definitizing(const CMat& M, const CMat& A) {
  Eigen::ComplexEigenSolver<CMat> es(A, false);
  std::vector<double> reals;
  std::vector<Complex> uppers;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const Complex z = es.eigenvalues()(i);
    if (std::abs(z.imag()) < 1e-9) {
      bool dup = false;
      for (double r : reals)
        if (std::abs(r - z.real()) < 1e-8) dup = true;
      if (!dup) reals.push_back(z.real());
    } else if (z.imag() > 0) {
      bool dup = false;
      for (Complex u : uppers)
        if (std::abs(u - z) < 1e-8) dup = true;
      if (!dup) uppers.push_back(z);
    }
  }
  std::vector<RVec> factors;
  for (double r : reals) {
    RVec f(2);
    f << -r, 1.0;
    factors.push_back(f);
  }
  for (Complex u : uppers) {
    RVec f(3);
    f << std::norm(u), -2.0 * u.real(), 1.0;
    factors.push_back(f);
  }
  const int nf = static_cast<int>(factors.size());
  std::vector<std::vector<int>> combos;
  std::vector<int> cur(nf, 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == nf) {
      combos.push_back(cur);
      return;
    }
    for (int e = 0; e <= 3; ++e) {
      cur[i] = e;
      rec(i + 1);
    }
  };
  rec(0);
  auto deg = [&](const std::vector<int>& c) {
    int d = 0;
    for (int i = 0; i < nf; ++i) d += c[i] * (int(factors[i].size()) - 1);
    return d;
  };
  std::stable_sort(combos.begin(), combos.end(),
                   [&](const auto& a, const auto& b) { return deg(a) < deg(b); });
  for (const auto& c : combos) {
    if (deg(c) % 2 != 0) continue;
    RVec p(1);
    p << 1.0;
    for (int i = 0; i < nf; ++i)
      for (int e = 0; e < c[i]; ++e) p = conv(p, factors[i]);
    for (double s : {1.0, -1.0}) {
      if (brute_psd(M, s * p, A)) return {s * p, deg(c)};
    }
  }
  return {RVec(), -1};
}

}  // namespace

TEST_CASE("classify_spectrum: diagonal Krein-selfadjoint with sign characters") {
  auto op = krein_op(mat2(1, 0, 0, -1), mat2(2, 0, 0, 3));
  auto S = classify_spectrum(op);
  REQUIRE(S.complex_pairs.empty());
  REQUIRE(S.real_points.size() == 2);
  CHECK(S.real_points[0].lambda == doctest::Approx(2.0));
  CHECK(S.real_points[0].sign_char == SignChar::Positive);
  CHECK_FALSE(S.real_points[0].is_critical);
  CHECK(S.real_points[1].lambda == doctest::Approx(3.0));
  CHECK(S.real_points[1].sign_char == SignChar::Negative);
  CHECK(S.real_points[1].is_critical);
  CHECK(S.real_points[0].jordan_index == 1);
}

TEST_CASE("classify_spectrum: conjugate pair with unit Riesz ranks") {
  auto op = krein_op(mat2(1, 0, 0, -1), mat2(0, 1, -1, 0));
  auto S = classify_spectrum(op);
  REQUIRE(S.complex_pairs.size() == 1);
  CHECK(S.real_points.empty());
  CHECK(S.complex_pairs[0].z.real() == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(S.complex_pairs[0].z.imag() == doctest::Approx(1.0));
  CHECK(S.complex_pairs[0].riesz_rank == 1);
  CHECK(S.pairing_residual < 1e-8);
}

TEST_CASE("classify_spectrum: Hilbert case is plain and positive") {
  const int n = 10;
  const CMat R = random_cmat(n, n, 5);
  const CMat A = R + R.adjoint();
  auto op = krein_op(CMat::Identity(n, n), A);
  auto S = classify_spectrum(op);
  CHECK(S.complex_pairs.empty());
  int total = 0;
  for (const auto& r : S.real_points) {
    CHECK(r.sign_char == SignChar::Positive);
    CHECK(r.jordan_index == 1);
    CHECK_FALSE(r.is_critical);
    total += r.alg_mult;
  }
  CHECK(total == n);
}

TEST_CASE("classify_spectrum rejects non-selfadjoint input") {
  auto op = krein_op(mat2(1, 0, 0, -1), mat2(0, 1, 1, 0));
  CHECK_THROWS_WITH_AS(classify_spectrum(op),
                       doctest::Contains("NotKreinSelfadjoint"), Error);
}

TEST_CASE("riesz_projection: isolated point, full spectrum, Jordan block") {
  {
    const CMat A = mat2(0, 0, 0, 5);
    const CMat E = riesz_projection(A, 0.0, 1.0);
    CHECK((E - mat2(1, 0, 0, 0)).norm() < 1e-10);
  }
  {
    const CMat A = mat2(0, 0, 0, 5);
    const CMat E = riesz_projection(A, 2.5, 4.0);
    CHECK((E - CMat::Identity(2, 2)).norm() < 1e-10);
  }
  {
    const CMat A = mat2(1, 1, 0, 1);
    const CMat E = riesz_projection(A, 1.0, 0.5);
    CHECK((E - CMat::Identity(2, 2)).norm() < 1e-9);
    const CMat N = E * (A - CMat::Identity(2, 2)) * E;
    CHECK(N.norm() > 0.5);           // nontrivial nilpotent part
    CHECK((N * N).norm() < 1e-9);    // nilpotent of rank 1
  }
  CHECK_THROWS_WITH_AS(riesz_projection(mat2(0, 0, 0, 5), 0.0, 5.0),
                       doctest::Contains("EigenvalueOnContour"), Error);
}

TEST_CASE("riesz_projection dagger-conjugation identity") {
  // E(z, A)^dagger = E(conj z, A^dagger); here A^dagger = A so
  // dagger(E(i)) should equal E(-i).
  auto g = build_gram(mat2(1, 0, 0, -1));
  const CMat A = mat2(0, 1, -1, 0);
  const CMat Ei = riesz_projection(A, Complex(0, 1), 0.5);
  const CMat Emi = riesz_projection(A, Complex(0, -1), 0.5);
  CHECK((dagger(g, Ei) - Emi).norm() < 1e-9);
  CHECK((Ei * Ei - Ei).norm() < 1e-10);
  CHECK((Ei * Emi).norm() < 1e-10);
}

TEST_CASE("definitizing_polynomial: Hilbert case is degree 0") {
  const int n = 6;
  const CMat R = random_cmat(n, n, 11);
  const CMat A = R + R.adjoint();
  auto op = krein_op(CMat::Identity(n, n), A);
  auto S = classify_spectrum(op);
  auto p = definitizing_polynomial(op, S);
  CHECK(p.degree() == 0);
  CHECK(p.coeffs(0) == doctest::Approx(1.0));
  CHECK(p.certificate_residual >= -1e-8);
  CHECK(p.critical_points.empty());
}

TEST_CASE("definitizing_polynomial: (z-3)^2 for diag(2,3) against brute force") {
  const CMat M = mat2(1, 0, 0, -1), A = mat2(2, 0, 0, 3);
  auto op = krein_op(M, A);
  auto S = classify_spectrum(op);
  auto p = definitizing_polynomial(op, S);
  CHECK(p.degree() == 2);
  // (z-3)^2 = 9 - 6z + z^2
  CHECK(p.coeffs(0) == doctest::Approx(9.0));
  CHECK(p.coeffs(1) == doctest::Approx(-6.0));
  CHECK(p.coeffs(2) == doctest::Approx(1.0));
  REQUIRE(p.critical_points.size() == 1);
  CHECK(p.critical_points[0] == doctest::Approx(3.0));

  auto brute = brute_force_definitizing(M, A);
  REQUIRE(brute.degree == 2);
  CHECK((brute.coeffs - p.coeffs).norm() < 1e-9);
}

TEST_CASE("definitizing_polynomial: z^2+1 for the +-i pair against brute force") {
  const CMat M = mat2(1, 0, 0, -1), A = mat2(0, 1, -1, 0);
  auto op = krein_op(M, A);
  auto S = classify_spectrum(op);
  auto p = definitizing_polynomial(op, S);
  CHECK(p.degree() == 2);
  CHECK(p.coeffs(0) == doctest::Approx(1.0));
  CHECK(std::abs(p.coeffs(1)) < 1e-9);
  CHECK(p.coeffs(2) == doctest::Approx(1.0));
  CHECK(p.eval(A).norm() < 1e-9);  // p(A) = 0 certifies trivially
  CHECK(p.critical_points.empty());

  auto brute = brute_force_definitizing(M, A);
  REQUIRE(brute.degree == 2);
  CHECK((brute.coeffs - p.coeffs).norm() < 1e-9);
}

TEST_CASE("spectral_projection_interval basics and critical boundary") {
  auto op = krein_op(mat2(1, 0, 0, -1), mat2(2, 0, 0, 3));
  auto S = classify_spectrum(op);
  {
    const CMat P = spectral_projection_interval(op, S, 1.5, 2.5);
    CHECK((P - mat2(1, 0, 0, 0)).norm() < 1e-9);
  }
  {
    const CMat P = spectral_projection_interval(op, S, -10.0, 0.0);
    CHECK(P.norm() < 1e-10);
  }
  {
    const CMat P = spectral_projection_interval(op, S, 0.0, 10.0);
    CHECK((P - CMat::Identity(2, 2)).norm() < 1e-9);
  }
  CHECK_THROWS_WITH_AS(spectral_projection_interval(op, S, 1.0, 3.0),
                       doctest::Contains("CriticalBoundary"), Error);
}

TEST_CASE("interval projection range is uniformly positive off critical points") {
  // Pontryagin gram, positive spectral region away from the critical point
  auto g = std::make_shared<GramStructure>(build_gram(mat2(1, 0, 0, -1)));
  auto op = make_krein_operator(g, mat2(2, 0, 0, 3));
  auto S = classify_spectrum(op);
  const CMat P = spectral_projection_interval(op, S, 1.5, 2.5);
  // basis of the range
  Eigen::JacobiSVD<CMat> svd(P, Eigen::ComputeThinU);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-8) ++rank;
  REQUIRE(rank == 1);
  auto sc = classify_subspace(*g, svd.matrixU().leftCols(rank));
  CHECK(sc.kind == SubspaceKind::UniformlyPositive);
}

TEST_CASE("completeness_identity at small scale") {
  {
    const int n = 8;
    const CMat R = random_cmat(n, n, 31);
    const CMat A = R + R.adjoint();
    auto op = krein_op(CMat::Identity(n, n), A);
    auto S = classify_spectrum(op);
    CHECK(completeness_identity(op, S) < 1e-9);
  }
  {
    auto op = krein_op(mat2(1, 0, 0, -1), mat2(0, 1, -1, 0));
    auto S = classify_spectrum(op);
    CHECK(completeness_identity(op, S) < 1e-9);
  }
}

TEST_CASE("almost-analytic extension matches f on the axis and decays like y^N") {
  SmoothFunction f = smooth_indicator_poly(-1.0, 1.0, 0.4);
  auto ext = make_almost_analytic(f, 6, 0.5);
  for (double x : {-0.9, -0.3, 0.0, 0.4, 0.77}) {
    CHECK(std::abs(ext.f_tilde(x, 0.0) - f(x)) < 1e-12);
  }
  CHECK(ext.empirical_C > 0.0);
  CHECK(std::isfinite(ext.empirical_C));
  // pointwise bound with the reported constant holds on a fresh grid
  for (double x : {-0.8, -0.2, 0.3, 0.9}) {
    for (double y : {0.01, 0.05, 0.2, 0.4}) {
      const double bound = 1.0001 * ext.empirical_C *
                           std::pow(std::hypot(1.0, x), -7.0) * std::pow(y, 6.0);
      CHECK(std::abs(ext.dbar_f_tilde(x, y)) <= bound + 1e-18);
    }
  }
}

TEST_CASE("hs_functional_calculus: scalar Cauchy-Green identity") {
  SmoothFunction f = smooth_indicator_poly(1.0, 3.0, 0.5);
  auto ext = make_almost_analytic(f, 6, 0.5);
  CMat A(1, 1);
  A << Complex(2.0, 0.0);
  const CMat F = hs_functional_calculus(A, f, ext);
  CHECK(std::abs(F(0, 0) - f(2.0)) < 1e-6);
  A(0, 0) = Complex(1.6, 0.0);
  const CMat F2 = hs_functional_calculus(A, f, ext);
  CHECK(std::abs(F2(0, 0) - f(1.6)) < 1e-6);
}

TEST_CASE("hs_functional_calculus: hermitian bump selects the spectral projector") {
  CMat A = CMat::Zero(3, 3);
  A.diagonal() << 1.0, 2.0, 4.0;
  SmoothFunction f = smooth_indicator_poly(1.5, 2.5, 0.3);
  auto ext = make_almost_analytic(f, 6, 0.4);
  const CMat F = hs_functional_calculus(A, f, ext);
  CMat P = CMat::Zero(3, 3);
  P(1, 1) = 1.0;
  CHECK((F - P).norm() < 1e-6);
}

TEST_CASE("hs_functional_calculus: Pontryagin example diag(2,3)") {
  const CMat A = mat2(2, 0, 0, 3);
  SmoothFunction f = smooth_indicator_poly(1.2, 2.5, 0.3);
  auto ext = make_almost_analytic(f, 6, 0.25);
  HsOptions opt;
  opt.critical_points = {3.0};
  const CMat F = hs_functional_calculus(A, f, ext, opt);
  CHECK((F - mat2(1, 0, 0, 0)).norm() < 1e-6);

  SmoothFunction touching = smooth_indicator_poly(2.5, 3.5, 0.3);
  auto ext2 = make_almost_analytic(touching, 6, 0.25);
  CHECK_THROWS_WITH_AS(hs_functional_calculus(A, touching, ext2, opt),
                       doctest::Contains("SupportTouchesCriticalPoint"), Error);
}

TEST_CASE("hs_functional_calculus: homomorphism and dagger compatibility") {
  const int n = 5;
  const CMat R = random_cmat(n, n, 77);
  CMat A = R + R.adjoint();
  A *= 1.0 / A.norm();  // spectrum inside (-1, 1)
  SmoothFunction f = smooth_indicator_poly(-0.9, 0.2, 0.2);
  SmoothFunction g = smooth_indicator_poly(-0.5, 0.9, 0.2);
  SmoothFunction fg;
  fg.support_lo = -0.9;
  fg.support_hi = 0.9;
  fg.knots = f.knots;
  fg.knots.insert(fg.knots.end(), g.knots.begin(), g.knots.end());
  const SmoothFunction f_copy = f, g_copy = g;
  fg.fn = [f_copy, g_copy](const Jet& x) { return f_copy.fn(x) * g_copy.fn(x); };
  auto extf = make_almost_analytic(f, 6, 0.3);
  auto extg = make_almost_analytic(g, 6, 0.3);
  auto extfg = make_almost_analytic(fg, 6, 0.3);
  const CMat Ff = hs_functional_calculus(A, f, extf);
  const CMat Fg = hs_functional_calculus(A, g, extg);
  const CMat Ffg = hs_functional_calculus(A, fg, extfg);
  CHECK((Ffg - Ff * Fg).norm() < 1e-6);

  // dagger: for real f and Krein-selfadjoint A, f(A)^dagger = f(A)
  auto gram = build_gram(mat2(1, 0, 0, -1));
  const CMat Ak = mat2(2, 0, 0, 3);
  SmoothFunction fb = smooth_indicator_poly(1.2, 2.5, 0.3);
  auto extb = make_almost_analytic(fb, 6, 0.25);
  const CMat Fb = hs_functional_calculus(Ak, fb, extb);
  CHECK((dagger(gram, Fb) - Fb).norm() < 1e-6);
}

TEST_CASE("resolvent_bound_probe") {
  {
    // Hilbert case: ||(A-z)^{-1}|| |Im z| <= 1 exactly
    const int n = 6;
    const CMat R = random_cmat(n, n, 51);
    const CMat A = R + R.adjoint();
    auto op = krein_op(CMat::Identity(n, n), A);
    DefinitizingPolynomial p;
    p.coeffs = RVec::Ones(1);
    std::vector<Complex> samples;
    for (double y : {0.1, 0.5, 2.0})
      for (double x : {-1.0, 0.3, 2.0}) samples.push_back(Complex(x, y));
    auto rep = resolvent_bound_probe(op, p, samples);
    CHECK(rep.C_q <= 1.0 + 1e-8);
  }
  {
    auto op = krein_op(mat2(1, 0, 0, -1), mat2(2, 0, 0, 3));
    auto S = classify_spectrum(op);
    auto p = definitizing_polynomial(op, S);
    std::vector<Complex> samples;
    for (double y : {1e-3, 1e-2, 0.1}) samples.push_back(Complex(3.0, y));
    auto rep = resolvent_bound_probe(op, p, samples);
    CHECK(rep.max_real_zero_order == 2);
    CHECK(std::isfinite(rep.C_q));
    CHECK(rep.C_q < 50.0);  // finite along Im z -> 0 near the critical point
    CHECK_THROWS_WITH_AS(
        resolvent_bound_probe(op, p, {Complex(3.0, 1e-9)}),
        doctest::Contains("SampleTooCloseToSpectrum"), Error);
  }
}

TEST_CASE("projection algebra across distinct clusters") {
  // random Krein-selfadjoint matrix built as M^{-1} H with hermitian H
  const int n = 6;
  const CMat R = random_cmat(n, n, 61);
  const CMat H = R + R.adjoint();
  CMat M = CMat::Identity(n, n);
  M(0, 0) = -1;
  const CMat A = M.inverse() * H;  // M A = H hermitian => Krein-selfadjoint
  auto op = krein_op(M, A);
  auto S = classify_spectrum(op);
  std::vector<CMat> projs;
  for (const auto& r : S.real_points) {
    double gap = 1e300;
    for (const auto& r2 : S.real_points)
      if (&r2 != &r) gap = std::min(gap, std::abs(r.lambda - r2.lambda));
    for (const auto& p : S.complex_pairs)
      gap = std::min(gap, std::abs(Complex(r.lambda, 0) - p.z));
    projs.push_back(riesz_projection(A, r.lambda, gap / 3.0));
  }
  for (size_t i = 0; i < projs.size(); ++i) {
    CHECK((projs[i] * projs[i] - projs[i]).norm() < 1e-8);
    for (size_t j = i + 1; j < projs.size(); ++j)
      CHECK((projs[i] * projs[j]).norm() < 1e-8);
  }
}
