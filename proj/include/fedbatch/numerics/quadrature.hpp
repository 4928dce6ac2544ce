#pragma once

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fedbatch/error.hpp"

namespace fedbatch::numerics {

/// Adaptive 61-point Gauss-Kronrod with an absolute error target.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-10) {
    using boost::math::quadrature::gauss_kronrod;
    if (a == b) return 0.0;
    double err = 0.0;
    double l1 = 0.0;
    const double coarse = gauss_kronrod<double, 61>::integrate(f, a, b, 0, 0.0, &err, &l1);
    const double rel = abs_tol / std::max(l1, abs_tol);
    if (err <= abs_tol) return coarse;
    const double value = gauss_kronrod<double, 61>::integrate(f, a, b, 25, rel, &err, &l1);
    if (!std::isfinite(value) || err > 100.0 * abs_tol) {
        throw NumericalError("quadrature did not reach the requested accuracy");
    }
    return value;
}

}  // namespace fedbatch::numerics
