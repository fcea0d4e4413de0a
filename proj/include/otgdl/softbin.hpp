#pragma once

#include <cmath>

#include "otgdl/tensor.hpp"

namespace otgdl {

// Triangular-kernel memberships of alpha over B uniform centers on [0,1].
// Piecewise linear in alpha, entries >= 0, and the two active entries are
// constructed so the vector sums to exactly 1.
inline Vec softbin(double alpha, int B = 16) {
    require(alpha >= 0.0 && alpha <= 1.0, "OutOfRange", "softbin needs alpha in [0,1]");
    require(B >= 2, "OutOfRange", "softbin needs at least 2 bins");
    Vec v = Vec::Zero(B);
    const double t = alpha * (B - 1);
    int k = static_cast<int>(std::floor(t));
    if (k >= B - 1) k = B - 2;
    const double frac = t - k;
    v(k) = 1.0 - frac;
    v(k + 1) = frac;
    return v;
}

} // namespace otgdl
