#pragma once
// Overdamped periodic model: stationary space-time density, velocity
// functional, spectral time evolution, and small-amplitude response formulas.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "ratchet/config.hpp"
#include "ratchet/drift.hpp"
#include "ratchet/fourier.hpp"

namespace ratchet {

struct StationaryDensity {
    TorusField field;        // real, positive, coeff(p,0) = delta_{p0}/L
    double residual;         // relative l2 residual on the extended mode band
    double condition;        // reciprocal condition estimate of the truncated system
    double min_grid_value;   // minimum over the oversampled validation grid
    double hermitian_defect; // raw solver output defect before symmetrization
};

namespace detail {

inline int mode_index(int p, int q, int P, int Q) {
    return (p + P) * (2 * Q + 1) + (q + Q);
}

// b-hat_q(t): time synthesis of one space mode row.
inline void drift_time_slice(const TorusField& b, double t, std::vector<cplx>& out) {
    const int P = b.pmax(), Q = b.qmax();
    out.assign(2 * Q + 1, cplx(0.0, 0.0));
    for (int p = -P; p <= P; ++p) {
        const cplx ph = std::exp(cplx(0.0, 2.0 * M_PI * p * t / b.T()));
        for (int q = -Q; q <= Q; ++q) out[q + Q] += b.coeff(p, q) * ph;
    }
}

}

inline StationaryDensity solve_stationary(const SpaceTimeDrift& b, const SolverConfig& cfg = {}) {
    cfg.validate();
    const double T = b.field.T(), L = b.field.L();
    const int P = cfg.pmax, Q = cfg.qmax;
    const int n = (2 * P + 1) * (2 * Q + 1);

    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    for (int p = -P; p <= P; ++p)
        for (int q = -Q; q <= Q; ++q) {
            const int r = detail::mode_index(p, q, P, Q);
            if (p == 0 && q == 0) {
                A(r, r) = 1.0;
                rhs(r) = 1.0 / L;
                continue;
            }
            A(r, r) += cplx(-2.0 * M_PI * M_PI * q * q / (L * L), -2.0 * M_PI * p / T);
            if (q != 0) {
                const cplx pref(0.0, 2.0 * M_PI * q / L);
                b.field.for_each([&](int pp, int qq, cplx c) {
                    const int p2 = p - pp, q2 = q - qq;
                    if (std::abs(p2) <= P && std::abs(q2) <= Q)
                        A(r, detail::mode_index(p2, q2, P, Q)) += pref * c;
                });
            }
        }

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    const double cond = lu.rcond();
    if (!(cond > 1e-14))
        throw std::runtime_error("solve_stationary: truncated system close to singular, rcond = "
                                 + std::to_string(cond));
    const Eigen::VectorXcd w = lu.solve(rhs);

    TorusField raw(T, L, P, Q, false);
    for (int p = -P; p <= P; ++p)
        for (int q = -Q; q <= Q; ++q)
            raw.set(p, q, w(detail::mode_index(p, q, P, Q)));
    const double defect = raw.max_hermitian_defect();

    TorusField sym(T, L, P, Q, true);
    for (int p = 0; p <= P; ++p)
        for (int q = -Q; q <= Q; ++q) {
            if (p == 0 && q < 0) continue;
            cplx c = 0.5 * (raw.coeff(p, q) + std::conj(raw.coeff(-p, -q)));
            if (p == 0 && q == 0) c = cplx(c.real(), 0.0);
            sym.set(p, q, c);
        }

    // residual of the untruncated operator rows over an extended band;
    // rows inside the solved band are machine-level, outside is spill
    const int Pe = P + b.field.pmax(), Qe = Q + b.field.qmax();
    const TorusField bw = torus_convolve(b.field, sym, Pe, Qe);
    double rnum = 0.0, rden = 0.0;
    for (int p = -Pe; p <= Pe; ++p)
        for (int q = -Qe; q <= Qe; ++q) {
            if (p == 0 && q == 0) continue;
            const cplx diag(-2.0 * M_PI * M_PI * q * q / (L * L), -2.0 * M_PI * p / T);
            const cplx res = diag * sym.coeff(p, q) + cplx(0.0, 2.0 * M_PI * q / L) * bw.coeff(p, q);
            rnum += std::norm(res);
        }
    sym.for_each([&](int, int, cplx c) { rden += std::norm(c); });
    const double residual = std::sqrt(rnum / rden);

    const double mn = min_on_grid(sym, cfg.oversample * (2 * P + 1), cfg.oversample * (2 * Q + 1));
    if (mn < cfg.positivity_tol)
        throw std::runtime_error("solve_stationary: density dips to " + std::to_string(mn)
                                 + " on the validation grid; increase truncation");

    return StationaryDensity{std::move(sym), residual, cond, mn, defect};
}

inline VelocityEstimate velocity(const SpaceTimeDrift& b, const StationaryDensity& w) {
    const double L = b.field.L();
    cplx s(0.0, 0.0);
    b.field.for_each([&](int p, int q, cplx c) { s += c * w.field.coeff(-p, -q); });
    const cplx value = -L * s;
    VelocityEstimate est;
    est.value = value.real();
    est.std_error = 0.0;
    est.n_effective = double((2 * w.field.pmax() + 1) * (2 * w.field.qmax() + 1));
    est.method = "spectral-stationary";
    est.note = std::abs(value.imag()) > 1e-12 ? "imaginary part " + std::to_string(value.imag()) : "";
    return est;
}

struct EvolutionState {
    SpaceField field;
    double t = 0.0;
    double mass = 1.0;
};

inline EvolutionState uniform_state(double L, int Q) {
    SpaceField u(L, Q, true);
    u.set(0, 1.0 / L);
    return EvolutionState{std::move(u), 0.0, 1.0};
}

struct EvolveResult {
    EvolutionState state;
    double running_velocity;  // time average of -integral(b u) over the run
    std::size_t steps;
};

// One-step exponential integrator pair phi1 = (e^z - 1)/z, phi2 = (e^z - 1 - z)/z^2.
namespace detail {
inline void phi_factors(double lam, double h, double& E, double& f1, double& f2) {
    const double z = lam * h;
    E = std::exp(z);
    if (std::abs(z) < 1e-8) {
        f1 = h * (1.0 + 0.5 * z);
        f2 = 0.5 * h * (1.0 + z / 3.0);
    } else {
        f1 = (E - 1.0) / lam;
        f2 = (E - 1.0 - z) / (lam * lam * h);
    }
}
}

inline EvolveResult evolve(const EvolutionState& u0, const SpaceTimeDrift& b,
                           double horizon, double dt = 0.0) {
    const double T = b.field.T(), L = b.field.L();
    if (dt <= 0.0) dt = T / 512.0;
    if (horizon <= 0.0) throw std::invalid_argument("evolve: horizon must be positive");
    if (u0.field.L() != L) throw std::invalid_argument("evolve: period mismatch");
    const int Q = u0.field.qmax();
    const std::size_t steps = std::size_t(std::ceil(horizon / dt - 1e-12));

    std::vector<cplx> u(2 * Q + 1), a(2 * Q + 1), Nu(2 * Q + 1), Na(2 * Q + 1), bt(2 * Q + 1);
    for (int q = -Q; q <= Q; ++q) u[q + Q] = u0.field.coeff(q);
    const double mass0 = L * u[Q].real();

    std::vector<double> E(2 * Q + 1), f1(2 * Q + 1), f2(2 * Q + 1);
    for (int q = -Q; q <= Q; ++q)
        detail::phi_factors(-2.0 * M_PI * M_PI * q * q / (L * L), dt, E[q + Q], f1[q + Q], f2[q + Q]);

    auto nonlin = [&](const std::vector<cplx>& v, double t, std::vector<cplx>& out) {
        detail::drift_time_slice(b.field, t, bt);
        for (int q = -Q; q <= Q; ++q) {
            cplx s(0.0, 0.0);
            for (int qq = std::max(-Q, q - Q); qq <= std::min(Q, q + Q); ++qq)
                s += bt[(q - qq) + Q] * v[qq + Q];
            out[q + Q] = cplx(0.0, 2.0 * M_PI * q / L) * s;
        }
    };
    auto instantaneous = [&](const std::vector<cplx>& v, double t) {
        detail::drift_time_slice(b.field, t, bt);
        cplx s(0.0, 0.0);
        for (int q = -Q; q <= Q; ++q) s += bt[q + Q] * v[(-q) + Q];
        return -(L * s).real();
    };

    double t = u0.t;
    double integral = 0.0;
    double v_prev = instantaneous(u, t);
    for (std::size_t k = 0; k < steps; ++k) {
        nonlin(u, t, Nu);
        for (int j = 0; j <= 2 * Q; ++j) a[j] = E[j] * u[j] + f1[j] * Nu[j];
        nonlin(a, t + dt, Na);
        for (int j = 0; j <= 2 * Q; ++j) u[j] = a[j] + f2[j] * (Na[j] - Nu[j]);
        t = u0.t + double(k + 1) * dt;
        const double v_now = instantaneous(u, t);
        integral += 0.5 * dt * (v_prev + v_now);
        v_prev = v_now;

        const double mass = L * u[Q].real();
        if (!(std::abs(mass - mass0) <= 1e-8) || !std::isfinite(v_now))
            throw std::runtime_error("evolve: instability detected at t = " + std::to_string(t));
    }

    SpaceField uf(L, Q, false);
    for (int q = -Q; q <= Q; ++q) uf.set(q, u[q + Q]);
    EvolutionState out{std::move(uf), t, L * u[Q].real()};
    return EvolveResult{std::move(out), integral / (t - u0.t), steps};
}

// First-order coefficient response to a small drift: the order-eps term of the
// stationary density for b = eps B.
inline TorusField first_order_response(const SpaceTimeDrift& B) {
    const double T = B.field.T(), L = B.field.L();
    const int P = B.field.pmax(), Q = B.field.qmax();
    TorusField w1(T, L, P, Q, true);
    // upper half p >= 0 suffices; set() writes the conjugate mirror
    for (int p = 0; p <= P; ++p)
        for (int q = -Q; q <= Q; ++q) {
            if (p == 0 && q <= 0) continue;
            if (q == 0) continue;
            const cplx num = cplx(0.0, M_PI * q / (L * L)) * B.field.coeff(p, q);
            const cplx den(M_PI * M_PI * q * q / (L * L), M_PI * p / T);
            w1.set(p, q, num / den);
        }
    return w1;
}

// Quadratic coefficient of the small-amplitude velocity expansion:
// I(eps B) = eps^2 * second_variation(B) + O(eps^3).
inline double second_variation(const SpaceTimeDrift& B) {
    const double T = B.field.T(), L = B.field.L();
    double s = 0.0;
    B.field.for_each([&](int p, int q, cplx c) {
        if (p == 0 || q == 0) return;
        const double den = double(p) * p * L * L * L * L + M_PI * M_PI * double(q) * q * q * q * T * T;
        s += -double(p) * q * L * L * L * T / den * std::norm(c);
    });
    return s;
}

struct MixedZero {
    double alpha;
    SpaceTimeDrift composite;
    double value;  // velocity at the returned alpha
};

namespace detail {
inline SpaceTimeDrift blend(const SpaceTimeDrift& b1, const SpaceTimeDrift& b2, double alpha) {
    const int P = std::max(b1.field.pmax(), b2.field.pmax());
    const int Q = std::max(b1.field.qmax(), b2.field.qmax());
    TorusField f(b1.field.T(), b1.field.L(), P, Q, true);
    for (int p = 0; p <= P; ++p)
        for (int q = -Q; q <= Q; ++q) {
            if (p == 0 && q < 0) continue;
            const cplx c = (1.0 - alpha) * b1.field.coeff(p, q) + alpha * b2.field.coeff(p, q);
            if (p == 0 && q == 0) continue;
            f.set(p, q, c);
        }
    return SpaceTimeDrift(std::move(f), true);
}
}

inline MixedZero find_mixed_zero(const SpaceTimeDrift& b1, const SpaceTimeDrift& b2,
                                 const SolverConfig& cfg = {}) {
    if (b1.field.T() != b2.field.T() || b1.field.L() != b2.field.L())
        throw std::invalid_argument("find_mixed_zero: period mismatch");
    auto phi = [&](double alpha) {
        const SpaceTimeDrift d = detail::blend(b1, b2, alpha);
        const StationaryDensity w = solve_stationary(d, cfg);
        return velocity(d, w).value;
    };
    double lo = 0.0, hi = 1.0;
    double flo = phi(lo), fhi = phi(hi);
    if (!(flo > 0.0) || !(fhi < 0.0))
        throw std::invalid_argument("find_mixed_zero: endpoints must straddle zero with I(b1) > 0 > I(b2), got "
                                    + std::to_string(flo) + " and " + std::to_string(fhi));
    double mid = 0.5, fmid = 0.0;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        fmid = phi(mid);
        if (std::abs(fmid) <= 1e-8) break;
        if (fmid > 0.0) lo = mid; else hi = mid;
    }
    return MixedZero{mid, detail::blend(b1, b2, mid), fmid};
}

}
