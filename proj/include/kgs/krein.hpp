#pragma once

#include <memory>
#include <optional>

#include "kgs/errors.hpp"
#include "kgs/types.hpp"

namespace kgs {

/// Hermitian invertible Gram matrix with its polar data M = J|M| and
/// negativity index kappa. All downstream Krein geometry goes through this.
struct GramStructure {
  int dim = 0;
  CMat gram;                  // M
  CMat fundamental_symmetry;  // J, J* = J, J^2 = 1
  CMat modulus;               // |M|, positive definite
  CMat gram_inverse;          // M^{-1}
  int neg_index = 0;          // kappa = rank 1_{R^-}(J)
  double inversion_condition = 0.0;  // smallest singular value of M
  bool pontryagin = true;     // finite dimension: always a Pontryagin space
};

/// Polar-decompose a hermitian invertible M into (J, |M|, kappa).
/// Throws NonHermitian / Degenerate.
GramStructure build_gram(const CMat& M, double herm_tol_rel = kHermTol,
                         double sv_floor_rel = kGramSignTol);

/// [u, v] = (u | M v), conjugate-linear in the first slot.
Complex krein_inner(const GramStructure& g, const CVec& u, const CVec& v);

/// A-dagger = M^{-1} A* M.
CMat dagger(const GramStructure& g, const CMat& A);

struct KreinOperator {
  CMat matrix;
  std::shared_ptr<const GramStructure> gram;
  double selfadjoint_residual = 0.0;  // ||M A - A* M||
  double unitary_residual = 0.0;      // ||A-dagger A - 1||

  int dim() const { return static_cast<int>(matrix.rows()); }
  bool is_selfadjoint(double rel_tol = 1e-10) const;
};

KreinOperator make_krein_operator(std::shared_ptr<const GramStructure> g,
                                  const CMat& A);

enum class SubspaceKind {
  Positive,
  UniformlyPositive,
  Negative,
  UniformlyNegative,
  Neutral,
  Indefinite,
};

const char* subspace_kind_name(SubspaceKind k);

struct SubspaceClass {
  SubspaceKind kind = SubspaceKind::Neutral;
  bool krein_subspace = false;  // restricted Gram invertible
  CMat gram_restriction;
  RVec restricted_eigenvalues;  // ascending
  double uniform_margin = 0.0;  // min |eig| / max(1, ||G||) when invertible
  std::optional<CVec> witness;
};

/// Classify span(basis columns) under [.,.]. Throws RankDeficientBasis.
SubspaceClass classify_subspace(const GramStructure& g, const CMat& basis,
                                double tol_rel = 1e-10);

struct ProjectionReport {
  double idempotent_residual = 0.0;   // ||P^2 - P||
  double selfadjoint_residual = 0.0;  // ||P-dagger - P||
  bool positive = false;              // herm(M P) >= 0
  double min_form_eigenvalue = 0.0;   // smallest eigenvalue of herm(M P)
};

ProjectionReport orthogonal_projection_check(const GramStructure& g,
                                             const CMat& P,
                                             double tol_rel = 1e-10);

}  // namespace kgs
