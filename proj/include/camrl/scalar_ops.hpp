#pragma once

#include <cmath>

namespace camrl::num {

inline double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// max(x,0) + log1p(exp(-|x|)), overflow-safe
inline double stable_softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

inline double silu_scalar(double x) { return x * stable_sigmoid(x); }

}  // namespace camrl::num
