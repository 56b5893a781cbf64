#pragma once
// Normalized Hermite functions, Laguerre polynomials, and the shifted
// Hermite overlap kernel gamma_nm. All recurrences work on normalized
// quantities so no factorial ever appears explicitly.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace ratchet {

inline constexpr int hermite_hard_cap = 512;

// e_n(v) = 2^{-n/2} pi^{-1/4} (n!)^{-1/2} H_n(v) e^{-v^2/2}, orthonormal on R.
// Ascending recurrence e_{n+1} = (sqrt(2) v e_n - sqrt(n) e_{n-1}) / sqrt(n+1).
inline double hermite_e(int n, double v) {
    if (n < 0) throw std::invalid_argument("hermite_e: n must be nonnegative");
    if (n > hermite_hard_cap) throw std::invalid_argument("hermite_e: n beyond hard cap");
    const double e0 = std::pow(M_PI, -0.25) * std::exp(-0.5 * v * v);
    if (n == 0) return e0;
    double em1 = e0;
    double e = std::sqrt(2.0) * v * e0;
    for (int k = 1; k < n; ++k) {
        const double enext = (std::sqrt(2.0) * v * e - std::sqrt(double(k)) * em1)
                             / std::sqrt(double(k + 1));
        em1 = e;
        e = enext;
    }
    return e;
}

// Fills out[0..n] with e_0(v) .. e_n(v).
inline void hermite_e_all(int n, double v, std::vector<double>& out) {
    if (n < 0 || n > hermite_hard_cap) throw std::invalid_argument("hermite_e_all: bad n");
    out.resize(n + 1);
    out[0] = std::pow(M_PI, -0.25) * std::exp(-0.5 * v * v);
    if (n == 0) return;
    out[1] = std::sqrt(2.0) * v * out[0];
    for (int k = 1; k < n; ++k)
        out[k + 1] = (std::sqrt(2.0) * v * out[k] - std::sqrt(double(k)) * out[k - 1])
                     / std::sqrt(double(k + 1));
}

// d/dv e_n = sqrt(2n) e_{n-1} - v e_n.
inline double hermite_e_derivative(int n, double v) {
    if (n == 0) return -v * hermite_e(0, v);
    return std::sqrt(2.0 * n) * hermite_e(n - 1, v) - v * hermite_e(n, v);
}

// Generalized Laguerre polynomial L_m^s(x), three-term recurrence in m.
inline double laguerre(int m, int s, double x) {
    if (m < 0 || s < 0) throw std::invalid_argument("laguerre: need m >= 0 and s >= 0");
    double l0 = 1.0;
    if (m == 0) return l0;
    double l1 = 1.0 + s - x;
    for (int k = 1; k < m; ++k) {
        const double l2 = ((2.0 * k + s + 1.0 - x) * l1 - (k + double(s)) * l0) / (k + 1.0);
        l0 = l1;
        l1 = l2;
    }
    return l1;
}

inline double log_factorial(int n) { return std::lgamma(double(n) + 1.0); }

// Overlap of a shifted and an unshifted Hermite function,
//   gamma_nm(r) = int e_m(v) e_n(v - 2 pi i r / L) dv,
// via the Laguerre closed form. gamma_nm(n, m, 0) = delta_nm exactly.
// Satisfies gamma_nm(n, m, r) = conj(gamma_nm(m, n, r)).
inline std::complex<double> gamma_nm(int n, int m, double r, double L) {
    if (n < 0 || m < 0) throw std::invalid_argument("gamma_nm: negative order");
    if (L <= 0) throw std::invalid_argument("gamma_nm: L must be positive");
    if (r == 0.0) return (n == m) ? 1.0 : 0.0;
    const double z = M_PI * r / L;
    const double x = -2.0 * z * z;          // Laguerre argument, always <= 0
    const double pref = std::exp(z * z);
    const int lo = std::min(n, m), hi = std::max(n, m), d = hi - lo;
    const double c = std::exp(0.5 * (log_factorial(lo) - log_factorial(hi))
                              + 0.5 * d * std::log(2.0));
    // (-i z)^d for m <= n, (+i z)^d for m > n; the two cases are conjugate.
    const std::complex<double> unit = (m <= n) ? std::complex<double>(0.0, -1.0)
                                               : std::complex<double>(0.0, 1.0);
    std::complex<double> phase = 1.0;
    for (int k = 0; k < d; ++k) phase *= unit * z;
    return pref * c * phase * laguerre(lo, d, x);
}

}
