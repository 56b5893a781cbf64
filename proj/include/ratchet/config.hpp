#pragma once
// Shared configuration records: spectral truncations, SDE simulation
// parameters, and the physical constants of the two-state models.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ratchet {

struct SolverConfig {
    int pmax = 8;              // time modes |p| <= pmax
    int qmax = 16;             // space modes |q| <= qmax
    int nmax = 24;             // Hermite orders n <= nmax (kinetic solvers)
    int oversample = 4;        // grid oversampling for positivity / re-projection
    double residual_tol = 1e-8;
    double positivity_tol = -1e-10;   // negative dips beyond this fail loudly
    double tail_tol = 1e-6;           // Hermite tail fraction bound

    void validate() const {
        if (pmax < 0 || qmax < 0 || nmax < 0) throw std::invalid_argument("SolverConfig: negative truncation");
        if (oversample < 1) throw std::invalid_argument("SolverConfig: oversample must be >= 1");
    }
};

enum class NoiseConvention {
    kramers,        // generator (1/2) d_v^2, SDE noise amplitude 1
    langevin_sqrt2d // SDE noise amplitude sqrt(2D)
};

struct SdeConfig {
    double dt = 1e-3;
    double horizon = 100.0;
    long n_paths = 10000;
    std::uint64_t seed = 1;
    double burn_in = 10.0;
    int threads = 1;
    NoiseConvention noise = NoiseConvention::kramers;

    void validate() const {
        if (dt <= 0) throw std::invalid_argument("SdeConfig: dt must be positive");
        if (horizon <= burn_in) throw std::invalid_argument("SdeConfig: horizon must exceed burn_in");
        if (n_paths < 1) throw std::invalid_argument("SdeConfig: need at least one path");
        if (burn_in < 0) throw std::invalid_argument("SdeConfig: negative burn_in");
        if (threads < 1) throw std::invalid_argument("SdeConfig: threads must be >= 1");
    }
};

// Default step: 1e-3 * min(T, 1/gamma).
inline double default_dt(double T, double gamma) {
    return 1e-3 * std::min(T, 1.0 / gamma);
}

struct TwoStateRates {
    double nu1 = 1.0;   // switching rate state 1 -> 2
    double nu2 = 1.0;   // switching rate state 2 -> 1
    double D = 1.0;     // diffusion coefficient of the overdamped two-state model
    double gamma = 1.0; // friction of the kinetic models

    void validate() const {
        if (nu1 <= 0 || nu2 <= 0) throw std::invalid_argument("TwoStateRates: rates must be positive");
        if (D <= 0) throw std::invalid_argument("TwoStateRates: D must be positive");
        if (gamma <= 0) throw std::invalid_argument("TwoStateRates: gamma must be positive");
    }

    double sigma(double L) const { return 4.0 * M_PI * M_PI * D / (L * L); }

    // Switching generator acting on (u1, u2): row s of M applied to u.
    // M = [[-nu1, nu2], [nu1, -nu2]].
    std::complex<double> apply_M(int s, std::complex<double> u1, std::complex<double> u2) const {
        return (s == 0) ? (-nu1 * u1 + nu2 * u2) : (nu1 * u1 - nu2 * u2);
    }
};

struct VelocityEstimate {
    double value = 0.0;
    double std_error = 0.0;     // statistical or truncation-based bound
    double n_effective = 0.0;
    std::string method;
    std::string note;           // convention / diagnostic annotations
};

}
