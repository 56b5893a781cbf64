#pragma once
// Periodic drift/force construction, zero-average validation, the gauge
// transformation that removes instantaneous space averages, and grid
// analysis of sampled drifts.

#include <cmath>
#include <string>
#include <vector>

#include "ratchet/fourier.hpp"

namespace ratchet {

// Real space-time drift b(t, x) with declared zero space-time mean.
struct SpaceTimeDrift {
    TorusField field;
    bool zero_average_declared = true;

    explicit SpaceTimeDrift(TorusField f, bool zero_average = true)
        : field(std::move(f)), zero_average_declared(zero_average) {
        if (!field.real_symmetric())
            throw std::invalid_argument("SpaceTimeDrift: field must be declared real");
        if (zero_average_declared && std::abs(field.coeff(0, 0)) > 1e-14)
            throw std::invalid_argument("SpaceTimeDrift: declared zero-average but coeff(0,0) != 0");
    }

    double T() const { return field.T(); }
    double L() const { return field.L(); }
};

struct SpaceDriftPair {
    SpaceField b1;
    SpaceField b2;
};

struct ZeroAverageReport {
    bool space_average_zero = true; // coeff(p, 0) = 0 for all p
    bool time_average_zero = true;  // coeff(0, q) = 0 for all q
    double worst_space = 0.0;
    double worst_time = 0.0;
};

inline ZeroAverageReport validate_zero_average(const SpaceTimeDrift& d, double tol = 1e-14) {
    ZeroAverageReport r;
    for (int p = -d.field.pmax(); p <= d.field.pmax(); ++p)
        r.worst_space = std::max(r.worst_space, std::abs(d.field.coeff(p, 0)));
    for (int q = -d.field.qmax(); q <= d.field.qmax(); ++q)
        r.worst_time = std::max(r.worst_time, std::abs(d.field.coeff(0, q)));
    r.space_average_zero = r.worst_space <= tol;
    r.time_average_zero = r.worst_time <= tol;
    return r;
}

struct GaugeResult {
    SpaceTimeDrift drift;
    double discarded_energy = 0.0;  // time-bandwidth energy lost to re-truncation
};

// b~(t,x) = b(t, x + a(t)) - (1/L) int_0^L b(t,y) dy with
// a(t) = -(1/L) int_0^t int_0^L b. Computed in coefficient space: the shift
// multiplies space mode q by exp(2 pi i q a(t)/L); each q-row is re-projected
// onto time modes by discrete quadrature over one period on oversampled nodes.
inline GaugeResult gauge_eliminate(const SpaceTimeDrift& d, int oversample = 4) {
    const TorusField& f = d.field;
    if (std::abs(f.coeff(0, 0)) > 1e-12)
        throw std::invalid_argument("gauge_eliminate: space-time mean must vanish");
    const int P = f.pmax(), Q = f.qmax();
    const double T = f.T(), L = f.L();

    // a(t) as an explicit antiderivative of the q = 0 row.
    auto a_of_t = [&](double t) {
        cplx s = 0.0;
        for (int p = -P; p <= P; ++p) {
            if (p == 0) continue;
            const cplx c = f.coeff(p, 0);
            if (c == cplx(0.0, 0.0)) continue;
            const cplx ip(0.0, 2.0 * M_PI * p / T);
            const double ph = 2.0 * M_PI * p * t / T;
            s += c / ip * (cplx(std::cos(ph), std::sin(ph)) - 1.0);
        }
        return -s.real();
    };

    const int M = std::max(oversample * (2 * P + 1), 8);
    TorusField out(T, L, P, Q, true);
    double discarded = 0.0;
    std::vector<cplx> row(M);
    for (int q = 1; q <= Q; ++q) {
        for (int i = 0; i < M; ++i) {
            const double t = T * i / M;
            cplx g = 0.0;
            for (int p = -P; p <= P; ++p) {
                const cplx c = f.coeff(p, q);
                if (c == cplx(0.0, 0.0)) continue;
                const double ph = 2.0 * M_PI * p * t / T;
                g += c * cplx(std::cos(ph), std::sin(ph));
            }
            const double sh = 2.0 * M_PI * q * a_of_t(t) / L;
            row[i] = g * cplx(std::cos(sh), std::sin(sh));
        }
        // DFT of the sampled row; modes beyond P are the discarded bandwidth.
        for (int k = 0; k < M; ++k) {
            cplx ck = 0.0;
            for (int i = 0; i < M; ++i) {
                const double ph = -2.0 * M_PI * double(k) * i / M;
                ck += row[i] * cplx(std::cos(ph), std::sin(ph));
            }
            ck /= double(M);
            int p = (k <= M / 2) ? k : k - M;  // signed frequency of DFT bin k
            if (std::abs(p) <= P)
                out.set(p, q, ck);
            else
                discarded += std::norm(ck);
        }
    }
    return GaugeResult{SpaceTimeDrift(std::move(out), true), 2.0 * discarded};
}

// Discrete Fourier analysis of uniform drift samples.
inline SpaceTimeDrift drift_from_samples(const std::vector<double>& samples, int nt, int nx,
                                         double T, double L, int P, int Q) {
    TorusField f = analyze_grid(samples, nt, nx, T, L, P, Q, true);
    const bool zero_mean = std::abs(f.coeff(0, 0)) <= 1e-12;
    return SpaceTimeDrift(std::move(f), zero_mean);
}

// Presets used by the CLI and the acceptance suite.

inline SpaceTimeDrift traveling_wave(double eps, double T, double L, int P, int Q) {
    TorusField f(T, L, P, Q, true);
    f.set(1, 1, eps / 2.0);   // eps * cos(2 pi (t/T + x/L))
    return SpaceTimeDrift(std::move(f), true);
}

inline SpaceTimeDrift standing_wave(double eps, double T, double L, int P, int Q) {
    TorusField f(T, L, P, Q, true);
    // eps * cos(2 pi t/T) cos(2 pi x/L)
    f.set(1, 1, eps / 4.0);
    f.set(1, -1, eps / 4.0);
    return SpaceTimeDrift(std::move(f), true);
}

// Two-state drift pair (b1, b2) = eps (cos(2 k0 x), cos(k0 x)) on period L,
// where k0 = 2 pi / L.
inline SpaceDriftPair cos2x_cosx(double eps, double L, int Q) {
    SpaceField b1(L, Q, true), b2(L, Q, true);
    b1.set(2, eps / 2.0);
    b2.set(1, eps / 2.0);
    return SpaceDriftPair{std::move(b1), std::move(b2)};
}

}
