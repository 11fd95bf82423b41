#pragma once

#include "kgs/types.hpp"

namespace kgs {

/// Dense matrix exponential, Pade-13 with scaling and squaring.
CMat expm(const CMat& A);

}  // namespace kgs
