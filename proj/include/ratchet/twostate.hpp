#pragma once
// Two-state switching diffusion on the circle: stationary density pair,
// velocity functional, perturbation series, and the closed-form cubic response.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "ratchet/config.hpp"
#include "ratchet/drift.hpp"
#include "ratchet/fourier.hpp"

namespace ratchet {

struct TwoStateDensity {
    SpaceField w1, w2;       // real, positive, w1(0) + w2(0) = 1/L
    TwoStateRates rates;
    double residual;         // relative l2 residual over the extended mode band
    double condition;
    double min_grid_value;   // min over both states on the validation grid
    double hermitian_defect;
};

namespace detail {

inline cplx convolve_at(const SpaceField& b, const std::vector<cplx>& w, int n, int N) {
    cplx s(0.0, 0.0);
    for (int m = -b.qmax(); m <= b.qmax(); ++m) {
        const int j = n - m;
        if (std::abs(j) <= N) s += b.coeff(m) * w[std::size_t(j + N)];
    }
    return s;
}

}

inline TwoStateDensity solve_stationary_two_state(const SpaceField& b1, const SpaceField& b2,
                                                  const TwoStateRates& rates,
                                                  const SolverConfig& cfg = {}) {
    cfg.validate();
    rates.validate();
    if (b1.L() != b2.L()) throw std::invalid_argument("two-state solve: drift periods differ");
    const double L = b1.L(), D = rates.D;
    const int N = cfg.qmax;
    const int n1 = 2 * N + 1;
    auto row = [N, n1](int s, int n) { return s * n1 + (n + N); };

    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(2 * n1, 2 * n1);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(2 * n1);
    for (int s = 0; s < 2; ++s) {
        const SpaceField& bs = (s == 0) ? b1 : b2;
        for (int n = -N; n <= N; ++n) {
            const int r = row(s, n);
            if (s == 1 && n == 0) {
                A(r, row(0, 0)) = 1.0;
                A(r, row(1, 0)) = 1.0;
                rhs(r) = 1.0 / L;
                continue;
            }
            const double k = 2.0 * M_PI * n / L;
            A(r, r) += -D * k * k;
            // switching matrix [[-nu1, nu2], [nu1, -nu2]]
            A(r, row(0, n)) += (s == 0) ? -rates.nu1 : rates.nu1;
            A(r, row(1, n)) += (s == 0) ? rates.nu2 : -rates.nu2;
            if (n != 0) {
                const cplx pref(0.0, k);
                for (int m = -bs.qmax(); m <= bs.qmax(); ++m) {
                    const int j = n - m;
                    if (std::abs(j) <= N) A(r, row(s, j)) += pref * bs.coeff(m);
                }
            }
        }
    }

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    const double cond = lu.rcond();
    if (!(cond > 1e-14))
        throw std::runtime_error("two-state solve: system close to singular, rcond = "
                                 + std::to_string(cond));
    const Eigen::VectorXcd sol = lu.solve(rhs);

    double defect = 0.0;
    for (int s = 0; s < 2; ++s)
        for (int n = 0; n <= N; ++n)
            defect = std::max(defect, std::abs(sol(row(s, n)) - std::conj(sol(row(s, -n)))));

    SpaceField w1(L, N, true), w2(L, N, true);
    for (int n = 0; n <= N; ++n) {
        cplx c1 = 0.5 * (sol(row(0, n)) + std::conj(sol(row(0, -n))));
        cplx c2 = 0.5 * (sol(row(1, n)) + std::conj(sol(row(1, -n))));
        if (n == 0) { c1 = cplx(c1.real(), 0.0); c2 = cplx(c2.real(), 0.0); }
        w1.set(n, c1);
        w2.set(n, c2);
    }

    // residual of the untruncated rows over the extended band
    const int Ne = N + std::max(b1.qmax(), b2.qmax());
    std::vector<cplx> v1(2 * Ne + 1, cplx(0, 0)), v2(2 * Ne + 1, cplx(0, 0));
    for (int n = -N; n <= N; ++n) {
        v1[std::size_t(n + Ne)] = w1.coeff(n);
        v2[std::size_t(n + Ne)] = w2.coeff(n);
    }
    double rnum = 0.0, rden = 0.0;
    for (int n = -Ne; n <= Ne; ++n) {
        if (n == 0) continue;  // n = 0 rows: one replaced, the other redundant by mass exchange
        const double k = 2.0 * M_PI * n / L;
        const cplx c1 = v1[std::size_t(n + Ne)], c2 = v2[std::size_t(n + Ne)];
        const cplx r1 = -D * k * k * c1 + cplx(0.0, k) * detail::convolve_at(b1, v1, n, Ne)
                        - rates.nu1 * c1 + rates.nu2 * c2;
        const cplx r2 = -D * k * k * c2 + cplx(0.0, k) * detail::convolve_at(b2, v2, n, Ne)
                        + rates.nu1 * c1 - rates.nu2 * c2;
        rnum += std::norm(r1) + std::norm(r2);
    }
    for (int n = -N; n <= N; ++n) rden += std::norm(w1.coeff(n)) + std::norm(w2.coeff(n));
    const double residual = std::sqrt(rnum / rden);

    const int grid = cfg.oversample * (2 * N + 1);
    const double mn = std::min(min_on_grid(w1, grid), min_on_grid(w2, grid));
    if (mn < cfg.positivity_tol)
        throw std::runtime_error("two-state solve: density dips to " + std::to_string(mn)
                                 + " on the validation grid; increase truncation");

    return TwoStateDensity{std::move(w1), std::move(w2), rates, residual, cond, mn, defect};
}

// Physical mean velocity of the switching diffusion. The orientation (negative
// of the density-weighted drift integral) is fixed by cross-validation against
// the Monte Carlo estimator; see the note field.
inline VelocityEstimate velocity_two_state(const SpaceField& b1, const SpaceField& b2,
                                           const TwoStateDensity& w) {
    const double L = b1.L();
    cplx s(0.0, 0.0);
    for (int n = -b1.qmax(); n <= b1.qmax(); ++n) s += b1.coeff(n) * w.w1.coeff(-n);
    for (int n = -b2.qmax(); n <= b2.qmax(); ++n) s += b2.coeff(n) * w.w2.coeff(-n);
    const cplx value = -L * s;
    VelocityEstimate est;
    est.value = value.real();
    est.std_error = 0.0;
    est.n_effective = double(2 * (2 * w.w1.qmax() + 1));
    est.method = "spectral-stationary-two-state";
    est.note = "orientation: negative of the density-weighted drift integral, "
               "matched to the stochastic estimator; series coefficients below use the integral's own sign";
    return est;
}

// Order-k density pair of the expansion in a common drift amplitude.
// Order 0 is the switching equilibrium (nu2, nu1)/(L(nu1+nu2)); each further
// order solves the per-mode 2x2 block [[-Dk^2-nu1, nu2],[nu1, -Dk^2-nu2]]
// against the convolution of the drifts with the previous order. The n = 0
// component vanishes at every order >= 1 (mass stays at order 0).
inline std::pair<std::vector<cplx>, std::vector<cplx>>
perturbation_density(const SpaceField& b1, const SpaceField& b2,
                     const TwoStateRates& rates, int k, int N) {
    if (k < 0) throw std::invalid_argument("perturbation_density: order must be >= 0");
    if (N < 1) throw std::invalid_argument("perturbation_density: truncation must be >= 1");
    const double L = b1.L(), D = rates.D;
    std::vector<cplx> w1(2 * N + 1, cplx(0, 0)), w2(2 * N + 1, cplx(0, 0));
    w1[std::size_t(N)] = rates.nu2 / (L * (rates.nu1 + rates.nu2));
    w2[std::size_t(N)] = rates.nu1 / (L * (rates.nu1 + rates.nu2));
    for (int order = 1; order <= k; ++order) {
        std::vector<cplx> u1(2 * N + 1, cplx(0, 0)), u2(2 * N + 1, cplx(0, 0));
        for (int n = -N; n <= N; ++n) {
            if (n == 0) continue;
            const double kq = 2.0 * M_PI * n / L;
            const cplx r1 = cplx(0.0, -kq) * detail::convolve_at(b1, w1, n, N);
            const cplx r2 = cplx(0.0, -kq) * detail::convolve_at(b2, w2, n, N);
            // invert [[-Dk^2-nu1, nu2],[nu1, -Dk^2-nu2]]
            const double a11 = -D * kq * kq - rates.nu1, a22 = -D * kq * kq - rates.nu2;
            const double det = a11 * a22 - rates.nu1 * rates.nu2;
            u1[std::size_t(n + N)] = (a22 * r1 - rates.nu2 * r2) / det;
            u2[std::size_t(n + N)] = (a11 * r2 - rates.nu1 * r1) / det;
        }
        w1.swap(u1);
        w2.swap(u2);
    }
    return {std::move(w1), std::move(w2)};
}

// k-th Taylor coefficient of the density-weighted drift integral
// S(eps) = integral(b1 w1 + b2 w2) for drifts eps*(b1, b2). This is the sign
// convention of the closed-form reference values; the physical velocity is -S.
inline double perturbation_order(const SpaceField& b1, const SpaceField& b2,
                                 const TwoStateRates& rates, int k,
                                 const SolverConfig& cfg = {}) {
    if (k < 1) throw std::invalid_argument("perturbation_order: order must be >= 1");
    rates.validate();
    if (b1.L() != b2.L()) throw std::invalid_argument("perturbation_order: drift periods differ");
    const double L = b1.L();
    const int N = std::max(cfg.qmax, k * std::max(b1.qmax(), b2.qmax()));
    const auto [w1, w2] = perturbation_density(b1, b2, rates, k - 1, N);
    cplx s(0.0, 0.0);
    for (int n = -b1.qmax(); n <= b1.qmax(); ++n)
        if (std::abs(n) <= N) s += b1.coeff(n) * w1[std::size_t(-n + N)];
    for (int n = -b2.qmax(); n <= b2.qmax(); ++n)
        if (std::abs(n) <= N) s += b2.coeff(n) * w2[std::size_t(-n + N)];
    const cplx Ik = L * s;
    if (std::abs(Ik.imag()) > 1e-10 * std::max(1.0, std::abs(Ik.real())))
        throw std::runtime_error("perturbation_order: non-real coefficient, imag = "
                                 + std::to_string(Ik.imag()));
    return Ik.real();
}

// Cubic response coefficient for the pair (cos 2x, cos x) at L = 2 pi, D = 1,
// in the same sign convention as perturbation_order.
inline double third_variation_closed_form(double nu1, double nu2) {
    if (!(nu1 > 0.0) || !(nu2 > 0.0))
        throw std::invalid_argument("third_variation_closed_form: rates must be positive");
    const double s = nu1 + nu2;
    return -nu1 * nu2 * (nu2 - 2.0 * nu1 + 1.0) / (4.0 * s * (s + 1.0) * (s + 1.0) * (s + 4.0));
}

}
