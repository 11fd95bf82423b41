#include "kgs/definitize.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>

namespace kgs {

namespace {

double op_norm_2(const CMat& A, int iters = 60) {
  // power iteration on A*A, deterministic start; converges from below
  CVec v = CVec::Ones(A.cols());
  for (int i = 0; i < (int)A.cols(); ++i) v(i) += Complex(0.0, 0.3 * ((i % 7) - 3));
  v.normalize();
  double s = 0.0;
  for (int it = 0; it < iters; ++it) {
    CVec w = A.adjoint() * (A * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    s = nw;
  }
  return std::sqrt(s);
}

struct Cluster {
  Complex center;
  std::vector<int> members;
};

std::vector<Cluster> cluster_points(const std::vector<Complex>& w, double eta) {
  std::vector<Cluster> cl;
  for (int i = 0; i < (int)w.size(); ++i) {
    int best = -1;
    double bestd = eta;
    for (int c = 0; c < (int)cl.size(); ++c) {
      const double d = std::abs(w[i] - cl[c].center);
      if (d <= bestd) {
        best = c;
        bestd = d;
      }
    }
    if (best < 0) {
      cl.push_back({w[i], {i}});
    } else {
      auto& c = cl[best];
      c.members.push_back(i);
      Complex s = 0.0;
      for (int m : c.members) s += w[m];
      c.center = s / double(c.members.size());
    }
  }
  return cl;
}

int numeric_rank(const CMat& B, double thresh) {
  Eigen::JacobiSVD<CMat> svd(B);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > thresh) ++r;
  return r;
}

CMat kernel_basis(const CMat& B, double thresh) {
  Eigen::JacobiSVD<CMat> svd(B, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int k = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) <= thresh) ++k;
  CMat K(B.cols(), k);
  int j = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) <= thresh) K.col(j++) = svd.matrixV().col(i);
  return K;
}

int jordan_index_of(const CMat& A, Complex lambda, int alg_mult, double thresh) {
  if (alg_mult == 1) return 1;
  const int n = static_cast<int>(A.rows());
  const CMat B = A - lambda * CMat::Identity(n, n);
  CMat P = B;
  int prev_rank = numeric_rank(P, thresh);
  if (n - prev_rank == alg_mult) return 1;  // semisimple
  for (int k = 2; k <= alg_mult + 1; ++k) {
    P = P * B;
    const int r = numeric_rank(P, thresh * std::pow(B.norm() + 1.0, k - 1));
    if (r == prev_rank) return k - 1;
    prev_rank = r;
  }
  return alg_mult;
}

SignChar sign_char_of(const GramStructure& g, const CMat& eigbasis, double tol) {
  CMat G = eigbasis.adjoint() * g.gram * eigbasis;
  G = 0.5 * (G + G.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(G);
  const RVec ev = es.eigenvalues();
  const double t = tol * std::max(1.0, G.norm());
  bool pos = false, neg = false, zero = false;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) > t) pos = true;
    else if (ev(i) < -t) neg = true;
    else zero = true;
  }
  if (zero) return SignChar::Degenerate;
  if (pos && neg) return SignChar::Indefinite;
  return pos ? SignChar::Positive : SignChar::Negative;
}

}  // namespace

const char* sign_char_name(SignChar s) {
  switch (s) {
    case SignChar::Positive: return "positive";
    case SignChar::Negative: return "negative";
    case SignChar::Indefinite: return "indefinite";
    case SignChar::Degenerate: return "degenerate";
  }
  return "?";
}

std::vector<double> SpectrumClassification::predicted_critical_points() const {
  std::vector<double> c;
  for (const auto& r : real_points)
    if (r.is_critical) c.push_back(r.lambda);
  return c;
}

SpectrumClassification classify_spectrum(const KreinOperator& A, double eta_rel) {
  const CMat& M = A.gram->gram;
  const CMat& Am = A.matrix;
  const int n = A.dim();
  const double sa_scale = std::max(1.0, (M * Am).norm());
  if (A.selfadjoint_residual > 1e-8 * sa_scale)
    fail(ErrorCode::NotKreinSelfadjoint,
         "||MA - A*M|| = " + std::to_string(A.selfadjoint_residual));

  Eigen::ComplexEigenSolver<CMat> es(Am, /*computeEigenvectors=*/true);
  std::vector<Complex> w(es.eigenvalues().data(), es.eigenvalues().data() + n);

  SpectrumClassification S;
  S.spectral_radius = 0.0;
  for (const auto& z : w) S.spectral_radius = std::max(S.spectral_radius, std::abs(z));
  const double eta = std::max(eta_rel * std::max(S.spectral_radius, 1.0), 1e-13);
  S.cluster_radius = eta;

  auto clusters = cluster_points(w, eta);
  // near-coincident clusters are merged: band-top doublets of discretized
  // models split at every scale, so no fixed eta separates them all
  for (bool merged = true; merged;) {
    merged = false;
    for (size_t i = 0; i < clusters.size() && !merged; ++i)
      for (size_t j = i + 1; j < clusters.size() && !merged; ++j)
        if (std::abs(clusters[i].center - clusters[j].center) < 2.0 * eta) {
          for (int mcur : clusters[j].members) clusters[i].members.push_back(mcur);
          Complex c = 0.0;
          for (int mcur : clusters[i].members) c += w[mcur];
          clusters[i].center = c / double(clusters[i].members.size());
          clusters.erase(clusters.begin() + j);
          merged = true;
        }
  }

  const double rank_thresh = 1e-8 * std::max(1.0, Am.norm());
  std::vector<bool> used(clusters.size(), false);
  for (size_t i = 0; i < clusters.size(); ++i) {
    if (used[i]) continue;
    const Complex z = clusters[i].center;
    if (std::abs(z.imag()) <= eta) {
      used[i] = true;
      RealPointEntry r;
      r.lambda = z.real();
      r.alg_mult = static_cast<int>(clusters[i].members.size());
      if (r.alg_mult == 1) {
        // generic case: the eigensolver column spans the eigenspace
        r.geo_mult = 1;
        r.jordan_index = 1;
        const CMat K = es.eigenvectors().col(clusters[i].members.front());
        r.sign_char = sign_char_of(*A.gram, K, 1e-8);
      } else {
        // semisimple clusters (merged near-degenerate doublets) are covered
        // by the eigensolver columns; a rank drop there flags Jordan structure
        CMat Vc(n, r.alg_mult);
        for (int kk = 0; kk < r.alg_mult; ++kk)
          Vc.col(kk) = es.eigenvectors().col(clusters[i].members[kk]);
        Eigen::JacobiSVD<CMat> csvd(Vc);
        const bool semisimple =
            csvd.singularValues()(r.alg_mult - 1) >
            1e-3 * csvd.singularValues()(0);
        if (semisimple) {
          r.geo_mult = r.alg_mult;
          r.jordan_index = 1;
          r.sign_char = sign_char_of(*A.gram, Vc, 1e-8);
        } else {
          const CMat B = Am - Complex(r.lambda, 0.0) * CMat::Identity(n, n);
          const CMat K = kernel_basis(B, rank_thresh);
          r.geo_mult = static_cast<int>(K.cols());
          r.jordan_index = jordan_index_of(Am, r.lambda, r.alg_mult, rank_thresh);
          r.sign_char = r.geo_mult > 0 ? sign_char_of(*A.gram, K, 1e-8)
                                       : SignChar::Degenerate;
        }
      }
      r.is_critical = (r.sign_char != SignChar::Positive) || (r.jordan_index > 1);
      S.real_points.push_back(r);
      continue;
    }
    // nonreal: find conjugate partner
    int partner = -1;
    for (size_t j = 0; j < clusters.size(); ++j) {
      if (j == i || used[j]) continue;
      if (std::abs(clusters[j].center - std::conj(z)) <= 2.0 * eta) {
        partner = static_cast<int>(j);
        break;
      }
    }
    if (partner < 0)
      fail(ErrorCode::ClusterAmbiguity,
           "nonreal eigenvalue without a conjugate partner within 2*eta");
    if (clusters[partner].members.size() != clusters[i].members.size())
      fail(ErrorCode::ClusterAmbiguity,
           "conjugate clusters with different multiplicities");
    used[i] = used[partner] = true;
    ComplexPairEntry p;
    p.z = z.imag() > 0 ? z : clusters[partner].center;
    p.riesz_rank = static_cast<int>(clusters[i].members.size());
    p.riesz_index =
        p.riesz_rank == 1 ? 1 : jordan_index_of(Am, p.z, p.riesz_rank, rank_thresh);
    S.pairing_residual = std::max(
        S.pairing_residual,
        std::abs(clusters[i].center - std::conj(clusters[partner].center)));
    S.complex_pairs.push_back(p);
  }
  std::sort(S.real_points.begin(), S.real_points.end(),
            [](const RealPointEntry& a, const RealPointEntry& b) {
              return a.lambda < b.lambda;
            });
  std::sort(S.complex_pairs.begin(), S.complex_pairs.end(),
            [](const ComplexPairEntry& a, const ComplexPairEntry& b) {
              return a.z.real() != b.z.real() ? a.z.real() < b.z.real()
                                              : a.z.imag() < b.z.imag();
            });
  return S;
}

CMat riesz_projection(const CMat& A, Complex center, double radius,
                      int quad_points, double margin) {
  const int n = static_cast<int>(A.rows());
  Eigen::ComplexEigenSolver<CMat> es(A, false);
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(std::abs(es.eigenvalues()(i) - center) - radius);
    if (d < margin * radius)
      fail(ErrorCode::EigenvalueOnContour,
           "eigenvalue within margin*radius of the contour");
  }

  const double cap = 1e14;
  auto quad = [&](int nn) {
    CMat E = CMat::Zero(n, n);
    for (int k = 0; k < nn; ++k) {
      const double th = 2.0 * M_PI * (k + 0.5) / nn;
      const Complex e = std::polar(1.0, th);
      const Complex z = center + radius * e;
      Eigen::PartialPivLU<CMat> lu(z * CMat::Identity(n, n) - A);
      const CMat R = lu.inverse();
      if (R.norm() > cap)
        fail(ErrorCode::QuadratureDiverged, "resolvent norm above cap on contour");
      E += (radius * e) * R;
    }
    return CMat(E / double(nn));
  };

  CMat E = quad(quad_points);
  for (int doublings = 0; doublings < 5; ++doublings) {
    const CMat E2 = quad(quad_points * 2);
    const double change = (E2 - E).norm();
    E = E2;
    quad_points *= 2;
    if (change < 1e-10 * std::max(1.0, E.norm())) return E;
  }
  fail(ErrorCode::QuadratureDiverged,
       "projector did not stabilize under node doubling");
}

double DefinitizingPolynomial::eval(double x) const {
  double v = 0.0;
  for (int i = degree(); i >= 0; --i) v = v * x + coeffs(i);
  return v;
}

Complex DefinitizingPolynomial::eval(Complex z) const {
  Complex v = 0.0;
  for (int i = degree(); i >= 0; --i) v = v * z + coeffs(i);
  return v;
}

CMat DefinitizingPolynomial::eval(const CMat& A) const {
  const int n = static_cast<int>(A.rows());
  CMat V = CMat::Zero(n, n);
  for (int i = degree(); i >= 0; --i) {
    V = V * A;
    V.diagonal().array() += coeffs(i);
  }
  return V;
}

namespace {

RVec poly_mul(const RVec& a, const RVec& b) {
  RVec c = RVec::Zero(a.size() + b.size() - 1);
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) c(i + j) += a(i) * b(j);
  return c;
}

RVec poly_pow(const RVec& a, int e) {
  RVec r(1);
  r(0) = 1.0;
  for (int i = 0; i < e; ++i) r = poly_mul(r, a);
  return r;
}

double certificate_min_eig(const CMat& M, const CMat& pA, double* norm_out) {
  CMat C = M * pA;
  CMat H = 0.5 * (C + C.adjoint());
  *norm_out = std::max(1.0, H.norm());
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  return es.eigenvalues().minCoeff();
}

}  // namespace

DefinitizingPolynomial definitizing_polynomial(const KreinOperator& A,
                                               const SpectrumClassification& S,
                                               double tol) {
  struct Factor {
    RVec poly;      // factor polynomial
    int min_exp;
    int max_exp;
    bool real_root;
    double root;    // only for real factors
  };
  std::vector<Factor> factors;
  for (const auto& p : S.complex_pairs) {
    RVec q(3);
    q(0) = std::norm(p.z);
    q(1) = -2.0 * p.z.real();
    q(2) = 1.0;
    factors.push_back({q, p.riesz_index, std::max(p.riesz_index, p.riesz_rank),
                       false, 0.0});
  }
  for (const auto& r : S.real_points) {
    if (!r.is_critical) continue;
    RVec q(2);
    q(0) = -r.lambda;
    q(1) = 1.0;
    factors.push_back({q, 1, std::max(r.jordan_index + 2, 2), true, r.lambda});
  }

  const CMat& M = A.gram->gram;
  const int nf = static_cast<int>(factors.size());

  // enumerate exponent assignments ordered by total degree
  std::vector<std::vector<int>> combos;
  std::vector<int> cur(nf);
  std::function<void(int)> rec = [&](int i) {
    if (i == nf) {
      combos.push_back(cur);
      return;
    }
    for (int e = factors[i].min_exp; e <= factors[i].max_exp; ++e) {
      cur[i] = e;
      rec(i + 1);
    }
  };
  rec(0);
  auto total_degree = [&](const std::vector<int>& c) {
    int d = 0;
    for (int i = 0; i < nf; ++i)
      d += c[i] * (static_cast<int>(factors[i].poly.size()) - 1);
    return d;
  };
  std::stable_sort(combos.begin(), combos.end(),
                   [&](const auto& a, const auto& b) {
                     return total_degree(a) < total_degree(b);
                   });

  for (const auto& c : combos) {
    if (total_degree(c) % 2 != 0) continue;  // even degree only
    RVec p(1);
    p(0) = 1.0;
    for (int i = 0; i < nf; ++i) p = poly_mul(p, poly_pow(factors[i].poly, c[i]));
    DefinitizingPolynomial cand;
    for (double s : {1.0, -1.0}) {
      cand.coeffs = s * p;
      const CMat pA = cand.eval(A.matrix);
      double nrm = 0.0;
      const double mineig = certificate_min_eig(M, pA, &nrm);
      if (mineig >= -tol * nrm) {
        cand.certificate_residual = mineig / nrm;
        for (int i = 0; i < nf; ++i)
          if (factors[i].real_root && c[i] > 0)
            cand.critical_points.push_back(factors[i].root);
        std::sort(cand.critical_points.begin(), cand.critical_points.end());
        return cand;
      }
    }
  }
  fail(ErrorCode::NoCertifiedPolynomial,
       "factor-exponent search exhausted without a PSD certificate");
}

namespace {

// Riesz projections per cluster: contour quadrature at small dimension,
// eigendecomposition route beyond (the desk-scale diagnostic path).
struct ClusterProjections {
  std::vector<CMat> real_projs;   // aligned with S.real_points
  std::vector<CMat> pair_projs;   // E(z) + E(zbar), aligned with S.complex_pairs
};

double cluster_gap(const SpectrumClassification& S, Complex z) {
  double gap = 1e300;
  for (const auto& r : S.real_points) {
    const double d = std::abs(z - Complex(r.lambda, 0.0));
    if (d > 1e-14) gap = std::min(gap, d);
  }
  for (const auto& p : S.complex_pairs) {
    for (const Complex zz : {p.z, std::conj(p.z)}) {
      const double d = std::abs(z - zz);
      if (d > 1e-14) gap = std::min(gap, d);
    }
  }
  if (gap > 1e299) gap = std::max(1.0, std::abs(z));
  return gap;
}

ClusterProjections cluster_projections(const CMat& A,
                                       const SpectrumClassification& S,
                                       int contour_dim_cap) {
  const int n = static_cast<int>(A.rows());
  ClusterProjections out;
  if (n <= contour_dim_cap) {
    for (const auto& r : S.real_points) {
      const Complex z(r.lambda, 0.0);
      out.real_projs.push_back(riesz_projection(A, z, cluster_gap(S, z) / 3.0));
    }
    for (const auto& p : S.complex_pairs) {
      const double rad = cluster_gap(S, p.z) / 3.0;
      CMat E = riesz_projection(A, p.z, rad) +
               riesz_projection(A, std::conj(p.z), rad);
      out.pair_projs.push_back(E);
    }
    return out;
  }
  // spectral route
  Eigen::ComplexEigenSolver<CMat> es(A, true);
  const CVec w = es.eigenvalues();
  const CMat& V = es.eigenvectors();
  Eigen::PartialPivLU<CMat> vlu(V);
  const CMat Vinv = vlu.inverse();
  auto selector_proj = [&](auto pred) {
    CVec sel = CVec::Zero(n);
    for (int i = 0; i < n; ++i)
      if (pred(w(i))) sel(i) = 1.0;
    return CMat(V * sel.asDiagonal() * Vinv);
  };
  const double eta = std::max(2.0 * S.cluster_radius, 1e-12);
  for (const auto& r : S.real_points) {
    out.real_projs.push_back(selector_proj(
        [&](Complex z) { return std::abs(z - Complex(r.lambda, 0)) <= eta; }));
  }
  for (const auto& p : S.complex_pairs) {
    out.pair_projs.push_back(selector_proj([&](Complex z) {
      return std::abs(z - p.z) <= eta || std::abs(z - std::conj(p.z)) <= eta;
    }));
  }
  return out;
}

}  // namespace

CMat spectral_projection_interval(const KreinOperator& A,
                                  const SpectrumClassification& S, double lo,
                                  double hi) {
  const double tol = 1e-8 * std::max(1.0, S.spectral_radius);
  for (double c : S.predicted_critical_points())
    if (std::abs(c - lo) < tol || std::abs(c - hi) < tol)
      fail(ErrorCode::CriticalBoundary,
           "interval endpoint meets a critical point");
  const int n = A.dim();
  CMat P = CMat::Zero(n, n);
  auto proj = cluster_projections(A.matrix, S, 64);
  for (size_t i = 0; i < S.real_points.size(); ++i) {
    const double l = S.real_points[i].lambda;
    if (l >= lo && l <= hi) P += proj.real_projs[i];
  }
  return P;
}

double completeness_identity(const KreinOperator& A,
                             const SpectrumClassification& S,
                             int contour_dim_cap) {
  const int n = A.dim();
  auto proj = cluster_projections(A.matrix, S, contour_dim_cap);
  CMat sum = CMat::Zero(n, n);
  for (const auto& E : proj.real_projs) sum += E;
  for (const auto& E : proj.pair_projs) sum += E;
  return (sum - CMat::Identity(n, n)).norm();
}

Complex AlmostAnalyticExtension::f_tilde(double x, double y) const {
  if (x < support_lo || x > support_hi) return 0.0;
  const Jet jf = f.jet(x);
  const double ax = std::hypot(1.0, x);
  const double u = y / (delta * ax);
  const double chi = chi_cutoff_poly(Jet::variable(u)).value();
  if (chi == 0.0) return 0.0;
  Complex s = 0.0, iy_pow = 1.0;
  double rf = 1.0;
  for (int r = 0; r <= taylor_order; ++r) {
    if (r > 0) {
      iy_pow *= Complex(0.0, y);
      rf *= r;
    }
    s += jf.deriv(r) * iy_pow / rf;
  }
  return s * chi;
}

Complex AlmostAnalyticExtension::dbar_f_tilde(double x, double y) const {
  if (x < support_lo || x > support_hi) return 0.0;
  const Jet jf = f.jet(x);
  const double ax = std::hypot(1.0, x);
  const double u = y / (delta * ax);
  const Jet jchi = chi_cutoff_poly(Jet::variable(u));
  const double chi = jchi.value();
  const double dchi = jchi.deriv(1);
  if (chi == 0.0 && dchi == 0.0) return 0.0;

  Complex taylor = 0.0, iy_pow = 1.0;
  double rf = 1.0;
  for (int r = 0; r <= taylor_order; ++r) {
    if (r > 0) {
      iy_pow *= Complex(0.0, y);
      rf *= r;
    }
    taylor += jf.deriv(r) * iy_pow / rf;
  }
  // dbar of the truncated Taylor sum
  double nf = 1.0;
  for (int r = 2; r <= taylor_order; ++r) nf *= r;
  Complex iyN = 1.0;
  for (int r = 0; r < taylor_order; ++r) iyN *= Complex(0.0, y);
  const Complex dbar_taylor = 0.5 * jf.deriv(taylor_order + 1) * iyN / nf;

  // dbar of chi(y / (delta <x>))
  const double du_dx = -y * x / (delta * ax * ax * ax);
  const double du_dy = 1.0 / (delta * ax);
  const Complex dbar_chi = 0.5 * dchi * Complex(du_dx, du_dy);

  return dbar_taylor * chi + taylor * dbar_chi;
}

AlmostAnalyticExtension make_almost_analytic(const SmoothFunction& f,
                                             int taylor_order, double delta) {
  if (taylor_order < 1 || taylor_order + 2 > Jet::kLen)
    fail(ErrorCode::Internal, "taylor_order out of jet range");
  AlmostAnalyticExtension ext;
  ext.taylor_order = taylor_order;
  ext.f = f;
  ext.support_lo = f.support_lo;
  ext.support_hi = f.support_hi;

  // The truncated Taylor sum is only trustworthy up to the height where the
  // (N+1)-st term stays comparable to f itself; clamp delta to that height.
  double fmax = 0.0, dmax = 0.0;
  for (int i = 0; i <= 96; ++i) {
    const double x = f.support_lo + (f.support_hi - f.support_lo) * i / 96.0;
    fmax = std::max(fmax, std::abs(f(x)));
    dmax = std::max(dmax, std::abs(f.deriv(x, taylor_order + 1)));
  }
  double fact = 1.0;
  for (int r = 2; r <= taylor_order + 1; ++r) fact *= r;
  if (dmax > 0.0) {
    const double y_trust =
        std::pow(0.05 * fact * std::max(fmax, 1e-30) / dmax,
                 1.0 / (taylor_order + 1));
    delta = std::min(delta, y_trust);
  }
  ext.delta = delta;
  const double axmax =
      std::max(std::hypot(1.0, f.support_lo), std::hypot(1.0, f.support_hi));
  ext.box_y = delta * axmax;

  const int nx = 25, ny = 14;
  for (int i = 0; i < nx; ++i) {
    const double x = ext.support_lo +
                     (ext.support_hi - ext.support_lo) * (i + 0.5) / nx;
    for (int j = 0; j < ny; ++j) {
      const double y = ext.box_y * (j + 0.5) / ny;
      for (double sy : {y, -y}) {
        const Complex db = ext.dbar_f_tilde(x, sy);
        ext.sample_grid.push_back({x, sy, db});
        const double ax = std::hypot(1.0, x);
        const double weight =
            std::pow(ax, -(taylor_order + 1)) * std::pow(std::abs(sy), taylor_order);
        if (weight > 0)
          ext.empirical_C = std::max(ext.empirical_C, std::abs(db) / weight);
      }
    }
  }
  return ext;
}

namespace {

void gauss_legendre(int n, std::vector<double>* nodes, std::vector<double>* weights) {
  nodes->resize(n);
  weights->resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));  // Chebyshev guess
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        (*weights)[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        break;
      }
    }
    (*nodes)[i] = x;
  }
}

// quadrature points in x: Gauss-Legendre panels split at the knots of f
// and at spectral abscissas inside the support (log-type features)
std::vector<std::pair<double, double>> x_rule(const AlmostAnalyticExtension& ext,
                                              int panels_per_piece,
                                              const std::vector<double>& extra_cuts) {
  // structural knots of f are always kept; spectral cuts are thinned to a
  // minimum spacing for panel-count control
  std::vector<double> cuts{ext.support_lo, ext.support_hi};
  for (double k : ext.f.knots)
    if (k > ext.support_lo + 1e-14 && k < ext.support_hi - 1e-14)
      cuts.push_back(k);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             cuts.end());
  {
    const double min_gap = (ext.support_hi - ext.support_lo) / 32.0;
    for (double k : extra_cuts) {
      if (k <= ext.support_lo + 1e-14 || k >= ext.support_hi - 1e-14) continue;
      bool far = true;
      for (double c : cuts)
        if (std::abs(c - k) < min_gap) far = false;
      if (far) cuts.push_back(k);
    }
    std::sort(cuts.begin(), cuts.end());
  }

  std::vector<double> gn, gw;
  gauss_legendre(12, &gn, &gw);

  std::vector<std::pair<double, double>> out;
  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double lo = cuts[c], hi = cuts[c + 1];
    for (int p = 0; p < panels_per_piece; ++p) {
      const double a = lo + (hi - lo) * p / panels_per_piece;
      const double b = lo + (hi - lo) * (p + 1) / panels_per_piece;
      for (size_t i = 0; i < gn.size(); ++i)
        out.emplace_back(0.5 * (a + b) + 0.5 * (b - a) * gn[i],
                         0.5 * (b - a) * gw[i]);
    }
  }
  return out;
}

CMat hs_quadrature(const CMat& A, const AlmostAnalyticExtension& ext,
                   const HsOptions& opt, int x_panels, int ny,
                   const std::vector<double>& spectral_cuts) {
  const int n = static_cast<int>(A.rows());
  CMat F = CMat::Zero(n, n);
  const CMat I = CMat::Identity(n, n);

  const auto xq = x_rule(ext, x_panels, spectral_cuts);

  std::vector<double> gn_shell, gw_shell, gn_dy, gw_dy;
  gauss_legendre(ny, &gn_shell, &gw_shell);
  gauss_legendre(std::max(5, ny / 2), &gn_dy, &gw_dy);

  for (const auto& [x, wx] : xq) {
    // per-x bands split exactly at the chi shell [s/2, s], s = delta <x>,
    // then dyadic refinement toward the axis; the integrand is O(y^N), so
    // octaves below s/32 contribute ~32^{-N} relative and are dropped
    const double s = ext.delta * std::hypot(1.0, x);
    const double cut = std::max(opt.y_cut, s / 32.0);
    std::vector<std::pair<double, double>> bands;
    bands.emplace_back(0.75 * s, s);
    bands.emplace_back(0.5 * s, 0.75 * s);
    double top = 0.5 * s;
    while (top > cut) {
      const double bot = std::max(top / 2.0, cut);
      bands.emplace_back(bot, top);
      top = bot;
    }
    int band_idx = 0;
    for (const auto& [bot, topb] : bands) {
      const bool shell = band_idx++ < 2;
      const auto& gn = shell ? gn_shell : gn_dy;
      const auto& gw = shell ? gw_shell : gw_dy;
      for (int j = 0; j < static_cast<int>(gn.size()); ++j) {
        const double y = 0.5 * (bot + topb) + 0.5 * (topb - bot) * gn[j];
        const double wy = 0.5 * (topb - bot) * gw[j];
        for (double sy : {y, -y}) {
          const Complex db = ext.dbar_f_tilde(x, sy);
          if (std::abs(db) <= 1e-12) continue;
          const Complex z(x, sy);
          Eigen::PartialPivLU<CMat> lu(z * I - A);
          const CMat R = lu.inverse();
          if (R.norm() > opt.resolvent_cap)
            fail(ErrorCode::QuadratureDiverged,
                 "resolvent above cap inside the support box");
          F += (db * wx * wy) * R;
        }
      }
    }
  }
  // Cauchy-Pompeiu: f(t) = -(1/pi) int dbar f-tilde (z-t)^{-1} dx dy;
  // (e6)'s dz wedge dzbar is read with that orientation.
  return CMat(-F / M_PI);
}

}  // namespace

CMat hs_functional_calculus(const CMat& A, const SmoothFunction& f,
                            const AlmostAnalyticExtension& ext,
                            const HsOptions& opt) {
  for (double c : opt.critical_points)
    if (c >= f.support_lo - opt.critical_margin &&
        c <= f.support_hi + opt.critical_margin)
      fail(ErrorCode::SupportTouchesCriticalPoint,
           "supp f meets a critical point within margin");

  double fmax = 0.0;
  for (int i = 0; i <= 64; ++i) {
    const double x =
        f.support_lo + (f.support_hi - f.support_lo) * i / 64.0;
    fmax = std::max(fmax, std::abs(f(x)));
  }
  const double tol = opt.richardson_tol * std::max(fmax, 1e-30);

  std::vector<double> spectral_cuts;
  {
    Eigen::ComplexEigenSolver<CMat> es(A, false);
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      spectral_cuts.push_back(es.eigenvalues()(i).real());
    std::sort(spectral_cuts.begin(), spectral_cuts.end());
  }
  int panels = std::max(1, opt.nx / 16);
  int ny = opt.ny_per_level;
  CMat prev = hs_quadrature(A, ext, opt, panels, ny, spectral_cuts);
  for (int r = 0;; ++r) {
    const CMat cur = hs_quadrature(A, ext, opt, panels + 1 + r, ny + 6 * (r + 1),
                                   spectral_cuts);
    const double err = (cur - prev).norm();
    if (err <= tol) return cur;
    if (r >= opt.max_refine)
      fail(ErrorCode::QuadratureNotConverged,
           "quadrature error estimate " + std::to_string(err) +
               " above tolerance");
    prev = cur;
  }
}

ResolventBoundReport resolvent_bound_probe(const KreinOperator& A,
                                           const DefinitizingPolynomial& p,
                                           const std::vector<Complex>& z_samples) {
  const CMat& Am = A.matrix;
  const int n = A.dim();
  Eigen::ComplexEigenSolver<CMat> es(Am, false);
  const CVec w = es.eigenvalues();
  double specrad = 0.0;
  for (int i = 0; i < n; ++i) specrad = std::max(specrad, std::abs(w(i)));

  for (const Complex& z : z_samples) {
    double d = 1e300;
    for (int i = 0; i < n; ++i) d = std::min(d, std::abs(z - w(i)));
    if (d < 1e-6 * std::max(1.0, specrad))
      fail(ErrorCode::SampleTooCloseToSpectrum,
           "probe point within 1e-6*scale of the spectrum");
  }

  ResolventBoundReport rep;
  // m = max order of real zeros of p
  for (double c : p.critical_points) {
    int k = 0;
    RVec d = p.coeffs;
    auto deriv = [](const RVec& a) {
      RVec b(std::max<int>(1, a.size() - 1));
      b.setZero();
      for (int i = 1; i < a.size(); ++i) b(i - 1) = i * a(i);
      return b;
    };
    double scale = p.coeffs.cwiseAbs().maxCoeff();
    while (k < p.degree()) {
      double v = 0.0;
      for (int i = static_cast<int>(d.size()) - 1; i >= 0; --i) v = v * c + d(i);
      if (std::abs(v) > 1e-8 * std::max(1.0, scale)) break;
      d = deriv(d);
      ++k;
    }
    rep.max_real_zero_order = std::max(rep.max_real_zero_order, k);
  }

  // q(z) = p(z) (z-z0)^{-k} (z-conj z0)^{-k}, z0 off-axis in the resolvent set
  Complex z0(0.0, 2.0 * std::max(1.0, specrad));
  const int k = (p.degree() + 1) / 2;
  const CMat I = CMat::Identity(n, n);
  CMat qA = p.eval(Am);
  Eigen::PartialPivLU<CMat> lu0(Am - z0 * I);
  Eigen::PartialPivLU<CMat> lu0c(Am - std::conj(z0) * I);
  for (int j = 0; j < k; ++j) qA = lu0c.solve(lu0.solve(qA));

  for (const Complex& z : z_samples) {
    Eigen::PartialPivLU<CMat> lu(Am - z * I);
    const CMat R = lu.inverse();
    ResolventProbeSample s;
    s.z = z;
    s.weighted_q_resolvent = op_norm_2(qA * R) * std::abs(z.imag());
    s.weighted_resolvent =
        op_norm_2(R) * std::pow(std::abs(z.imag()), rep.max_real_zero_order + 1);
    rep.C_q = std::max(rep.C_q, s.weighted_q_resolvent);
    rep.C_strip = std::max(rep.C_strip, s.weighted_resolvent);
    rep.samples.push_back(s);
  }
  return rep;
}

}  // namespace kgs
