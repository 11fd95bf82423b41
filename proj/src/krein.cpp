#include "kgs/krein.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace kgs {

GramStructure build_gram(const CMat& M, double herm_tol_rel,
                         double sv_floor_rel) {
  if (M.rows() != M.cols())
    fail(ErrorCode::DimensionMismatch, "Gram matrix must be square");
  const double scale = std::max(1.0, M.norm());
  if (herm_residual(M) > herm_tol_rel * scale)
    fail(ErrorCode::NonHermitian,
         "||M - M*|| = " + std::to_string(herm_residual(M)));

  const CMat H = 0.5 * (M + M.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  const RVec d = es.eigenvalues();
  const CMat& Q = es.eigenvectors();

  const double dmax = d.cwiseAbs().maxCoeff();
  const double floor = sv_floor_rel * std::max(1.0, dmax);
  GramStructure g;
  g.dim = static_cast<int>(M.rows());
  g.inversion_condition = d.cwiseAbs().minCoeff();
  if (g.inversion_condition <= floor)
    fail(ErrorCode::Degenerate,
         "smallest singular value " + std::to_string(g.inversion_condition) +
             " below floor " + std::to_string(floor));

  RVec sign(d.size()), absd(d.size()), invd(d.size());
  int kappa = 0;
  for (int i = 0; i < d.size(); ++i) {
    sign(i) = d(i) < 0 ? -1.0 : 1.0;
    absd(i) = std::abs(d(i));
    invd(i) = 1.0 / d(i);
    if (d(i) < 0) ++kappa;
  }
  g.gram = H;
  g.fundamental_symmetry = Q * sign.asDiagonal() * Q.adjoint();
  g.modulus = Q * absd.asDiagonal() * Q.adjoint();
  g.gram_inverse = Q * invd.asDiagonal() * Q.adjoint();
  g.neg_index = kappa;
  g.pontryagin = true;
  return g;
}

Complex krein_inner(const GramStructure& g, const CVec& u, const CVec& v) {
  if (u.size() != g.dim || v.size() != g.dim)
    fail(ErrorCode::DimensionMismatch, "krein_inner: vector size != dim");
  return u.dot(g.gram * v);  // Eigen dot conjugates the first argument
}

CMat dagger(const GramStructure& g, const CMat& A) {
  if (A.rows() != g.dim || A.cols() != g.dim)
    fail(ErrorCode::DimensionMismatch, "dagger: operator size != dim");
  return g.gram_inverse * A.adjoint() * g.gram;
}

bool KreinOperator::is_selfadjoint(double rel_tol) const {
  const double scale = std::max(1.0, (gram->gram * matrix).norm());
  return selfadjoint_residual <= rel_tol * scale;
}

KreinOperator make_krein_operator(std::shared_ptr<const GramStructure> g,
                                  const CMat& A) {
  if (!g) fail(ErrorCode::Internal, "make_krein_operator: null gram");
  if (A.rows() != g->dim || A.cols() != g->dim)
    fail(ErrorCode::DimensionMismatch, "operator size != gram dim");
  KreinOperator op;
  op.matrix = A;
  op.gram = std::move(g);
  const CMat MA = op.gram->gram * A;
  op.selfadjoint_residual = (MA - A.adjoint() * op.gram->gram).norm();
  op.unitary_residual =
      (dagger(*op.gram, A) * A - CMat::Identity(A.rows(), A.cols())).norm();
  return op;
}

const char* subspace_kind_name(SubspaceKind k) {
  switch (k) {
    case SubspaceKind::Positive: return "positive";
    case SubspaceKind::UniformlyPositive: return "uniformly-positive";
    case SubspaceKind::Negative: return "negative";
    case SubspaceKind::UniformlyNegative: return "uniformly-negative";
    case SubspaceKind::Neutral: return "neutral";
    case SubspaceKind::Indefinite: return "indefinite";
  }
  return "?";
}

SubspaceClass classify_subspace(const GramStructure& g, const CMat& basis,
                                double tol_rel) {
  if (basis.rows() != g.dim)
    fail(ErrorCode::DimensionMismatch, "basis rows != dim");
  const int k = static_cast<int>(basis.cols());
  if (k == 0) fail(ErrorCode::RankDeficientBasis, "empty basis");

  Eigen::JacobiSVD<CMat> svd(basis);
  const double smax = svd.singularValues()(0);
  if (svd.singularValues()(k - 1) <= 1e-10 * std::max(1.0, smax))
    fail(ErrorCode::RankDeficientBasis,
         "basis numerically rank-deficient (sigma_min/sigma_max = " +
             std::to_string(svd.singularValues()(k - 1) / smax) + ")");

  SubspaceClass sc;
  sc.gram_restriction = basis.adjoint() * g.gram * basis;
  sc.gram_restriction = 0.5 * (sc.gram_restriction + sc.gram_restriction.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(sc.gram_restriction);
  sc.restricted_eigenvalues = es.eigenvalues();

  const double gscale = std::max(1.0, sc.gram_restriction.norm());
  const double tol = tol_rel * gscale;
  int pos = 0, neg = 0, zero = 0;
  for (int i = 0; i < k; ++i) {
    const double ev = sc.restricted_eigenvalues(i);
    if (ev > tol) ++pos;
    else if (ev < -tol) ++neg;
    else ++zero;
  }
  sc.krein_subspace = (zero == 0);
  if (sc.krein_subspace)
    sc.uniform_margin = sc.restricted_eigenvalues.cwiseAbs().minCoeff() / gscale;

  if (pos > 0 && neg == 0)
    sc.kind = zero == 0 ? SubspaceKind::UniformlyPositive : SubspaceKind::Positive;
  else if (neg > 0 && pos == 0)
    sc.kind = zero == 0 ? SubspaceKind::UniformlyNegative : SubspaceKind::Negative;
  else if (pos == 0 && neg == 0)
    sc.kind = SubspaceKind::Neutral;
  else
    sc.kind = SubspaceKind::Indefinite;

  // Witness: a vector exhibiting the classification.
  switch (sc.kind) {
    case SubspaceKind::UniformlyPositive:
    case SubspaceKind::Positive:
      sc.witness = basis * es.eigenvectors().col(0);  // worst margin direction
      break;
    case SubspaceKind::UniformlyNegative:
    case SubspaceKind::Negative:
      sc.witness = basis * es.eigenvectors().col(k - 1);
      break;
    case SubspaceKind::Neutral:
      sc.witness = basis.col(0);
      break;
    case SubspaceKind::Indefinite: {
      // neutral combination of the extreme directions
      const double lp = sc.restricted_eigenvalues(k - 1);
      const double ln = sc.restricted_eigenvalues(0);
      CVec w = basis * (es.eigenvectors().col(k - 1) / std::sqrt(lp) +
                        es.eigenvectors().col(0) / std::sqrt(-ln));
      sc.witness = w;
      break;
    }
  }
  return sc;
}

ProjectionReport orthogonal_projection_check(const GramStructure& g,
                                             const CMat& P, double tol_rel) {
  if (P.rows() != g.dim || P.cols() != g.dim)
    fail(ErrorCode::DimensionMismatch, "projection size != dim");
  ProjectionReport r;
  r.idempotent_residual = (P * P - P).norm();
  r.selfadjoint_residual = (dagger(g, P) - P).norm();
  CMat H = g.gram * P;
  H = 0.5 * (H + H.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  r.min_form_eigenvalue = es.eigenvalues().minCoeff();
  r.positive = r.min_form_eigenvalue >= -tol_rel * std::max(1.0, H.norm());
  return r;
}

}  // namespace kgs
