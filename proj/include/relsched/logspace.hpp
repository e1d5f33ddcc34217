#pragma once

#include <cmath>
#include <limits>

namespace relsched {

// Probabilities close to one lose all precision when stored directly, so
// reliabilities are carried around as natural logarithms (always <= 0).
// The helpers below move between p and 1-p without leaving log space.

/// ln(1 - e^x) for x <= 0. Stable on both ends of the range.
inline double ln_one_minus_exp(double x) {
    if (x >= 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    // Split at -ln 2 to keep the intermediate away from 0 and 1.
    if (x > -0.6931471805599453) {
        return std::log(-std::expm1(x));
    }
    return std::log1p(-std::exp(x));
}

/// ln(1 - p) computed from ln(p).
inline double ln_complement(double ln_p) { return ln_one_minus_exp(ln_p); }

inline constexpr double neg_inf() {
    return -std::numeric_limits<double>::infinity();
}

} // namespace relsched
