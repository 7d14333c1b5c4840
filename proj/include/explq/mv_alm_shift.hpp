#pragma once

#include <cmath>

namespace explq {

/// Lagrange state shift x_t = X_t - gamma * rf^{-(T-t)}; the shifted
/// problem is the unconstrained quadratic one.
inline double shift_state(double wealth, double gamma, double rf_period, int periods_remaining) {
    return wealth - gamma * std::pow(rf_period, -static_cast<double>(periods_remaining));
}

}  // namespace explq
