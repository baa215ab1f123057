#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace qsm {

namespace detail {

template <class F>
double integrate_panel(const F& f, double a, double b, double abs_tol, unsigned depth) {
    double err = 0.0;
    const double est = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err);
    if (err <= abs_tol || depth == 0) return est;
    const double mid = 0.5 * (a + b);
    return integrate_panel(f, a, mid, 0.5 * abs_tol, depth - 1) + integrate_panel(f, mid, b, 0.5 * abs_tol, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (15/31) with an absolute error target. Bisects panels whose
/// Kronrod-Gauss difference exceeds their share of the tolerance.
template <class F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-12) {
    if (a == b) return 0.0;
    if (b < a) return -integrate(f, b, a, abs_tol);
    return detail::integrate_panel(f, a, b, abs_tol, 24);
}

}  // namespace qsm
