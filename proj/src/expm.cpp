#include "kgs/expm.hpp"

#include <Eigen/LU>
#include <cmath>

namespace kgs {

// Higham's 2005 scaling-and-squaring with the [13/13] Pade approximant.
CMat expm(const CMat& A) {
  const int n = static_cast<int>(A.rows());
  const CMat I = CMat::Identity(n, n);
  static const double b[] = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  const double theta13 = 5.371920351148152;

  const double nrm = A.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
  int s = 0;
  if (nrm > theta13) s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
  const CMat As = A / std::pow(2.0, s);

  const CMat A2 = As * As;
  const CMat A4 = A2 * A2;
  const CMat A6 = A2 * A4;
  const CMat U =
      As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 +
            b[5] * A4 + b[3] * A2 + b[1] * I);
  const CMat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 +
                 b[4] * A4 + b[2] * A2 + b[0] * I;

  CMat F = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < s; ++k) F = F * F;
  return F;
}

}  // namespace kgs
