#pragma once
// Adaptive quadrature wrappers. Two rules cover every integral in the
// library: Gauss-Kronrod for smooth (possibly oscillatory) integrands on a
// finite interval, tanh-sinh for integrable endpoint singularities.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace ratchet {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
};

// Smooth integrand on [a, b]. The error estimate is the Kronrod one; a result
// whose estimate exceeds abs_tol by more than 100x signals a misuse loudly.
template <typename F>
QuadratureResult integrate_kronrod(F&& f, double a, double b, double abs_tol = 1e-12) {
    if (!(a < b)) {
        if (a == b) return {0.0, 0.0};
        throw std::invalid_argument("integrate_kronrod: reversed interval");
    }
    double err = 0.0;
    double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, 17, abs_tol, &err);
    if (!std::isfinite(val) || err > 100.0 * abs_tol + 1e-14 * std::abs(val))
        throw std::runtime_error("integrate_kronrod: failed to converge");
    return {val, err};
}

// Integrand with integrable endpoint singularities on [a, b].
template <typename F>
QuadratureResult integrate_tanh_sinh(F&& f, double a, double b, double abs_tol = 1e-12) {
    if (!(a < b)) {
        if (a == b) return {0.0, 0.0};
        throw std::invalid_argument("integrate_tanh_sinh: reversed interval");
    }
    boost::math::quadrature::tanh_sinh<double> rule;
    double err = 0.0, l1 = 0.0;
    double val = rule.integrate(f, a, b, abs_tol, &err, &l1);
    if (!std::isfinite(val))
        throw std::runtime_error("integrate_tanh_sinh: non-finite result");
    return {val, err * l1};
}

// Complex-valued integrand: two independent real quadratures.
template <typename F>
std::complex<double> integrate_kronrod_complex(F&& f, double a, double b,
                                               double abs_tol = 1e-12) {
    auto re = integrate_kronrod([&](double x) { return f(x).real(); }, a, b, abs_tol);
    auto im = integrate_kronrod([&](double x) { return f(x).imag(); }, a, b, abs_tol);
    return {re.value, im.value};
}

template <typename F>
std::complex<double> integrate_tanh_sinh_complex(F&& f, double a, double b,
                                                 double abs_tol = 1e-12) {
    auto re = integrate_tanh_sinh([&](double x) { return f(x).real(); }, a, b, abs_tol);
    auto im = integrate_tanh_sinh([&](double x) { return f(x).imag(); }, a, b, abs_tol);
    return {re.value, im.value};
}

}
