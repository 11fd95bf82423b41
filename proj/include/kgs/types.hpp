#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>

namespace kgs {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kHermTol = 1e-10;      // relative hermiticity tolerance
inline constexpr double kGramSignTol = 1e-12;  // eigenvalue sign threshold for J
inline constexpr double kDefaultTol = 1e-10;

inline double herm_residual(const CMat& a) {
  return (a - a.adjoint()).norm();
}

inline bool is_hermitian(const CMat& a, double rel_tol = kHermTol) {
  const double scale = std::max(1.0, a.norm());
  return herm_residual(a) <= rel_tol * scale;
}

/// Deterministic random complex matrix / vector (tests, probes).
inline CMat random_cmat(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMat a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = Complex(u(rng), u(rng));
  return a;
}

inline CVec random_cvec(int n, std::uint64_t seed) {
  return random_cmat(n, 1, seed).col(0);
}

}  // namespace kgs
