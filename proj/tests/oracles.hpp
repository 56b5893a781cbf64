#pragma once
// Independent closed-form references used only by tests.

#include <cmath>
#include <vector>

#include "ratchet/fourier.hpp"

namespace oracle {

// Stationary density for a time-independent zero-mean drift b(x):
// the periodic solution of w'/2 + b w = const has zero flux when the mean of b
// vanishes, so w(x) is proportional to exp(-2 B(x)) with B' = b.
// Returns samples on the uniform K-point grid x_k = k L / K, normalized to
// unit integral over [0, L] (trapezoid on the same grid, spectrally accurate).
inline std::vector<double> static_drift_density(const ratchet::SpaceField& b, int K) {
    const double L = b.L();
    std::vector<double> w(K);
    for (int k = 0; k < K; ++k) {
        const double x = L * k / K;
        // antiderivative in coefficient space: B(x) = sum_q b_q L/(2 pi i q)(e^{2 pi i q x/L} - 1)
        ratchet::cplx B(0.0, 0.0);
        for (int q = -b.qmax(); q <= b.qmax(); ++q) {
            if (q == 0) continue;
            const ratchet::cplx e = std::exp(ratchet::cplx(0.0, 2.0 * M_PI * q * x / L)) - 1.0;
            B += b.coeff(q) * L / ratchet::cplx(0.0, 2.0 * M_PI * q) * e;
        }
        w[k] = std::exp(-2.0 * B.real());
    }
    double Z = 0.0;
    for (int k = 0; k < K; ++k) Z += w[k];
    Z *= L / K;
    for (auto& v : w) v /= Z;
    return w;
}

}
