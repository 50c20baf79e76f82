#pragma once

#include <functional>

namespace stem {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

/// Globally adaptive Gauss-Kronrod (7/15) integration on [a, b]. Intervals are
/// bisected until the summed error estimate is below both `abs_tol` and
/// `rel_tol * |value|`, or `max_intervals` is reached.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol = 1e-10, double rel_tol = 1e-10,
                                    int max_intervals = 500);

}  // namespace stem
