#pragma once
// Two-state kinetic model: a Kramers particle whose static force flips
// between F1(x) and F2(x) at rates nu1 (state 1 -> 2) and nu2 (2 -> 1):
//   d_t f_s = -v d_x f_s + d_v((gamma v - F_s) f_s) + (1/2) d_v^2 f_s + (M f)_s.
// Everything is solved at unit friction; inputs with gamma != 1 pass through
// the rescaling dictionary first. Symmetrized unknowns psi_s = e^{v^2/2} f_s
// expand over standard Hermite functions e_m(v) and space modes e^{2 pi i q x/L}.
// Alongside the Galerkin solver live the small-force velocity series terms:
// the second-order double sum (identically zero) and the third-order
// quadruple sum built from resolvent blocks and shifted Hermite overlaps.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "config.hpp"
#include "drift.hpp"
#include "fourier.hpp"
#include "kinetic.hpp"
#include "special.hpp"

namespace ratchet {

struct KineticTwoStateDensity {
    // Coefficients psi^s_{m,q} in unit-friction variables.
    int nmax = 0;
    int qmax = 0;
    double L_unit = 1.0;     // period after rescaling
    double gamma = 1.0;      // original friction
    double nu1_unit = 1.0;   // rates after rescaling
    double nu2_unit = 1.0;
    std::vector<std::complex<double>> coeffs;
    double residual = 0.0;
    double hermite_tail = 0.0;
    double mass_defect = 0.0;
    double hermitian_defect = 0.0;

    std::size_t index(int s, int m, int q) const {
        if (s < 0 || s > 1 || m < 0 || m > nmax || std::abs(q) > qmax)
            throw std::out_of_range("KineticTwoStateDensity: index outside truncation");
        return (std::size_t(s) * (nmax + 1) + std::size_t(m)) * (2 * qmax + 1)
               + std::size_t(q + qmax);
    }
    std::complex<double> psi(int s, int m, int q) const { return coeffs[index(s, m, q)]; }
};

namespace detail {

inline void require_zero_average(const SpaceField& F, const char* who) {
    if (std::abs(F.coeff(0)) > 1e-14)
        throw std::invalid_argument(std::string(who) + ": force must have zero space average");
}

// The Hermite overlap sums weight mode q by e^{2 pi^2 q^2 / L^2}; past this
// bound the cancellations they feed erase double precision.
inline void require_overlap_precision(const SpaceField& F, const char* who) {
    for (int q = -F.qmax(); q <= F.qmax(); ++q) {
        if (std::norm(F.coeff(q)) == 0.0) continue;
        if (2.0 * M_PI * M_PI * double(q) * double(q) / (F.L() * F.L()) > 4.0)
            throw std::invalid_argument(std::string(who)
                + ": mode number too high for the overlap sums at this period");
    }
}

}

// ---------------------------------------------------------------------------
// Stationary Galerkin solver at unit friction. Row (s, m, q):
//   -2 m psi^s_{m,q} - (2 pi i q/L) sqrt(2) [sqrt(m+1) psi^s_{m+1,q} + sqrt(m) psi^s_{m-1,q}]
//   + 2 (M psi)^s_{m,q} + 2 sqrt(2 m) sum_{q'} Fhat_s(q - q') psi^s_{m-1,q'} = 0,
// with the (s = 2, m = 0, q = 0) row replaced by the mass normalization
//   pi^{1/4} L (psi^1_{0,0} + psi^2_{0,0}) = 1.

inline KineticTwoStateDensity solve_stationary_kramers_two_state(const SpaceField& F1,
                                                                 const SpaceField& F2,
                                                                 const TwoStateRates& rates,
                                                                 const SolverConfig& cfg) {
    cfg.validate();
    rates.validate();
    if (std::abs(F1.L() - F2.L()) > 1e-12 * F1.L())
        throw std::invalid_argument("solve_stationary_kramers_two_state: periods differ");
    detail::require_zero_average(F1, "solve_stationary_kramers_two_state");
    detail::require_zero_average(F2, "solve_stationary_kramers_two_state");

    const UnitFrictionRescaling map = unit_friction_map(rates.gamma);
    const double L = map.length(F1.L());
    const double nu1 = map.rate(rates.nu1), nu2 = map.rate(rates.nu2);
    const int N = cfg.nmax, Q = cfg.qmax;
    const int NQ = 2 * Q + 1;
    const std::size_t ntot = std::size_t(2) * (N + 1) * NQ;

    // Force modes in unit-friction variables: coefficients divide by sqrt(gamma).
    std::vector<std::vector<std::pair<int, std::complex<double>>>> modes(2);
    for (int s = 0; s < 2; ++s) {
        const SpaceField& F = (s == 0) ? F1 : F2;
        for (int q = -F.qmax(); q <= F.qmax(); ++q) {
            std::complex<double> c = F.coeff(q);
            if (std::norm(c) > 0.0) modes[s].emplace_back(q, c / std::sqrt(rates.gamma));
        }
    }

    auto ix = [&](int s, int m, int q) {
        return (std::size_t(s) * (N + 1) + std::size_t(m)) * NQ + std::size_t(q + Q);
    };

    std::vector<Eigen::Triplet<std::complex<double>>> trips;
    trips.reserve(ntot * 8);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(Eigen::Index(ntot));
    for (int s = 0; s < 2; ++s) {
        const double nu_own = (s == 0) ? nu1 : nu2;
        const double nu_oth = (s == 0) ? nu2 : nu1;
        for (int m = 0; m <= N; ++m) {
            for (int q = -Q; q <= Q; ++q) {
                const int r = int(ix(s, m, q));
                if (s == 1 && m == 0 && q == 0) {
                    const double w = std::pow(M_PI, 0.25) * L;
                    trips.emplace_back(r, int(ix(0, 0, 0)), std::complex<double>(w, 0.0));
                    trips.emplace_back(r, int(ix(1, 0, 0)), std::complex<double>(w, 0.0));
                    rhs(r) = 1.0;
                    continue;
                }
                trips.emplace_back(r, r, std::complex<double>(-2.0 * m - 2.0 * nu_own, 0.0));
                trips.emplace_back(r, int(ix(1 - s, m, q)), std::complex<double>(2.0 * nu_oth, 0.0));
                if (q != 0) {
                    const std::complex<double> cq(0.0, 2.0 * M_PI * q / L * std::sqrt(2.0));
                    if (m + 1 <= N)
                        trips.emplace_back(r, int(ix(s, m + 1, q)), -cq * std::sqrt(double(m + 1)));
                    if (m >= 1)
                        trips.emplace_back(r, int(ix(s, m - 1, q)), -cq * std::sqrt(double(m)));
                }
                if (m >= 1) {
                    const double cf = 2.0 * std::sqrt(2.0 * m);
                    for (const auto& [qq, c] : modes[s]) {
                        const int q2 = q - qq;
                        if (std::abs(q2) <= Q)
                            trips.emplace_back(r, int(ix(s, m - 1, q2)), cf * c);
                    }
                }
            }
        }
    }

    const Eigen::Index dim = Eigen::Index(ntot);
    Eigen::SparseMatrix<std::complex<double>> A(dim, dim);
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("solve_stationary_kramers_two_state: sparse factorization failed");
    Eigen::VectorXcd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("solve_stationary_kramers_two_state: sparse solve failed");

    KineticTwoStateDensity out;
    out.nmax = N; out.qmax = Q;
    out.L_unit = L; out.gamma = rates.gamma;
    out.nu1_unit = nu1; out.nu2_unit = nu2;
    out.coeffs.assign(ntot, {0.0, 0.0});

    double defect = 0.0;
    for (int s = 0; s < 2; ++s)
        for (int m = 0; m <= N; ++m)
            for (int q = -Q; q <= Q; ++q) {
                const std::complex<double> a1 = x(Eigen::Index(ix(s, m, q)));
                const std::complex<double> a2 = std::conj(x(Eigen::Index(ix(s, m, -q))));
                defect = std::max(defect, std::abs(a1 - a2));
                out.coeffs[ix(s, m, q)] = 0.5 * (a1 + a2);
            }
    out.hermitian_defect = defect;

    double num = 0.0, den = 0.0;
    for (int s = 0; s < 2; ++s)
        for (int m = 0; m <= N; ++m)
            for (int q = -Q; q <= Q; ++q) {
                const double e = std::norm(out.coeffs[ix(s, m, q)]);
                if (m == N) num += e;
                if (!(m == 0 && q == 0)) den += e;
            }
    out.hermite_tail = (den > 0.0) ? std::sqrt(num / den) : 0.0;
    if (out.hermite_tail > cfg.tail_tol)
        throw std::runtime_error("solve_stationary_kramers_two_state: Hermite tail above tolerance, raise nmax");

    out.mass_defect = std::abs(std::pow(M_PI, 0.25) * L
                               * (out.coeffs[ix(0, 0, 0)] + out.coeffs[ix(1, 0, 0)])
                               - 1.0);

    // Extended-band residual with the solved coefficients, zero outside.
    int qf = 0;
    for (int s = 0; s < 2; ++s)
        for (const auto& [qq, c] : modes[s]) qf = std::max(qf, std::abs(qq));
    const int Qe = Q + qf;
    auto psi_at = [&](int s, int m, int q) -> std::complex<double> {
        if (m < 0 || m > N || std::abs(q) > Q) return {0.0, 0.0};
        return out.coeffs[ix(s, m, q)];
    };
    double res = 0.0;
    for (int s = 0; s < 2; ++s) {
        const double nu_own = (s == 0) ? nu1 : nu2;
        const double nu_oth = (s == 0) ? nu2 : nu1;
        for (int m = 0; m <= N + 1; ++m) {
            for (int q = -Qe; q <= Qe; ++q) {
                if (s == 1 && m == 0 && q == 0) continue;
                std::complex<double> row = -(2.0 * m + 2.0 * nu_own) * psi_at(s, m, q)
                                           + 2.0 * nu_oth * psi_at(1 - s, m, q);
                if (q != 0) {
                    const std::complex<double> cq(0.0, 2.0 * M_PI * q / L * std::sqrt(2.0));
                    row -= cq * std::sqrt(double(m + 1)) * psi_at(s, m + 1, q);
                    if (m >= 1) row -= cq * std::sqrt(double(m)) * psi_at(s, m - 1, q);
                }
                if (m >= 1) {
                    const double cf = 2.0 * std::sqrt(2.0 * m);
                    for (const auto& [qq, c] : modes[s]) row += cf * c * psi_at(s, m - 1, q - qq);
                }
                res = std::max(res, std::abs(row));
            }
        }
    }
    out.residual = res;
    return out;
}

// Mean velocity, force-contraction route:
//   I' = L pi^{1/4} sum_q [Fhat_1(q) psi^1_{0,-q} + Fhat_2(q) psi^2_{0,-q}],
// carried back to the original units as I = I'/sqrt(gamma).
inline VelocityEstimate velocity_kramers_two_state(const SpaceField& F1, const SpaceField& F2,
                                                   const KineticTwoStateDensity& f) {
    const UnitFrictionRescaling map = unit_friction_map(f.gamma);
    if (std::abs(map.length(F1.L()) - f.L_unit) > 1e-12 * f.L_unit)
        throw std::invalid_argument("velocity_kramers_two_state: force and density periods differ");
    if (F1.qmax() > f.qmax || F2.qmax() > f.qmax)
        throw std::invalid_argument("velocity_kramers_two_state: density band does not cover the force modes");
    std::complex<double> acc{0.0, 0.0};
    for (int s = 0; s < 2; ++s) {
        const SpaceField& F = (s == 0) ? F1 : F2;
        for (int q = -F.qmax(); q <= F.qmax(); ++q) {
            const std::complex<double> c = F.coeff(q);
            if (std::norm(c) > 0.0) acc += c / std::sqrt(f.gamma) * f.psi(s, 0, -q);
        }
    }
    acc *= f.L_unit * std::pow(M_PI, 0.25);
    if (std::abs(acc.imag()) > 1e-10 * (1.0 + std::abs(acc.real())))
        throw std::runtime_error("velocity_kramers_two_state: contraction has a non-real part");
    VelocityEstimate v;
    v.value = map.velocity_back(acc.real());
    v.method = "kinetic-two-state-force-contraction";
    v.note = "unit-friction Galerkin solve; velocity mapped back through the rescaling";
    return v;
}

// Mean velocity, first-moment route: I' = L pi^{1/4} (psi^1_{1,0} + psi^2_{1,0})/sqrt(2).
inline VelocityEstimate velocity_kramers_two_state_moment(const KineticTwoStateDensity& f) {
    if (f.nmax < 1) throw std::invalid_argument("velocity_kramers_two_state_moment: need nmax >= 1");
    const std::complex<double> c = f.psi(0, 1, 0) + f.psi(1, 1, 0);
    VelocityEstimate v;
    v.value = unit_friction_map(f.gamma).velocity_back(
        f.L_unit * std::pow(M_PI, 0.25) * c.real() / std::sqrt(2.0));
    v.method = "kinetic-two-state-first-moment";
    v.note = "m = 1 Hermite coefficients of the q = 0 mode";
    return v;
}

// ---------------------------------------------------------------------------
// First order of the small-force expansion at unit friction. The zeroth order
// is psi^0_s = nu_other e^{-v^2/2} / (L (nu1 + nu2) sqrt(pi)); the first-order
// coefficients solve, independently for every force mode q != 0, the
// tridiagonal-plus-switching block system with the force acting on psi^0.

struct FirstOrderMode {
    int q = 0;
    Eigen::MatrixXcd coeffs;   // (nmax + 1) x 2, column s
};

inline std::vector<FirstOrderMode> first_order_coefficients(const SpaceField& G1,
                                                            const SpaceField& G2,
                                                            double nu1, double nu2,
                                                            const SolverConfig& cfg) {
    cfg.validate();
    if (!(nu1 > 0.0) || !(nu2 > 0.0))
        throw std::invalid_argument("first_order_coefficients: rates must be positive");
    detail::require_zero_average(G1, "first_order_coefficients");
    detail::require_zero_average(G2, "first_order_coefficients");
    const double L = G1.L();
    const int N = cfg.nmax;
    const int B = 2 * (N + 1);
    const double psi0[2] = {nu2 / ((nu1 + nu2) * L * std::pow(M_PI, 0.25)),
                            nu1 / ((nu1 + nu2) * L * std::pow(M_PI, 0.25))};
    std::vector<FirstOrderMode> out;
    const int qmax = std::max(G1.qmax(), G2.qmax());
    for (int q = -qmax; q <= qmax; ++q) {
        if (q == 0) continue;
        const std::complex<double> g[2] = {G1.coeff(q), G2.coeff(q)};
        if (std::norm(g[0]) == 0.0 && std::norm(g[1]) == 0.0) continue;
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(B, B);
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(B);
        const std::complex<double> cq(0.0, 2.0 * M_PI * q / L * std::sqrt(2.0));
        auto jx = [&](int s, int m) { return s * (N + 1) + m; };
        for (int s = 0; s < 2; ++s) {
            const double nu_own = (s == 0) ? nu1 : nu2;
            const double nu_oth = (s == 0) ? nu2 : nu1;
            for (int m = 0; m <= N; ++m) {
                const int r = jx(s, m);
                A(r, r) = std::complex<double>(-2.0 * m - 2.0 * nu_own, 0.0);
                A(r, jx(1 - s, m)) = 2.0 * nu_oth;
                if (m + 1 <= N) A(r, jx(s, m + 1)) -= cq * std::sqrt(double(m + 1));
                if (m >= 1) A(r, jx(s, m - 1)) -= cq * std::sqrt(double(m));
                if (m == 1) rhs(r) = -2.0 * std::sqrt(2.0) * g[s] * psi0[s];
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
        Eigen::VectorXcd sol = lu.solve(rhs);
        FirstOrderMode fm;
        fm.q = q;
        fm.coeffs = Eigen::MatrixXcd::Zero(N + 1, 2);
        for (int s = 0; s < 2; ++s)
            for (int m = 0; m <= N; ++m) fm.coeffs(m, s) = sol(jx(s, m));
        out.push_back(std::move(fm));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Second-order velocity series term. For real zero-average forces the double
// sum over (n, p) vanishes identically: every term is purely imaginary with
// an even weight R(n, p), so the two halves of the p-sum cancel. The weights
// are exposed so the evenness is testable mode by mode.

struct SecondOrderSeries {
    double value = 0.0;              // magnitude of the accumulated double sum
    std::vector<int> modes;          // p values carrying force content
    std::vector<std::vector<double>> R;   // R[i][n]: weight of modes[i] at Hermite level n
};

inline SecondOrderSeries velocity_series_I2(const SpaceField& G1, const SpaceField& G2,
                                            double nu1, double nu2, const SolverConfig& cfg) {
    cfg.validate();
    if (!(nu1 > 0.0) || !(nu2 > 0.0))
        throw std::invalid_argument("velocity_series_I2: rates must be positive");
    detail::require_zero_average(G1, "velocity_series_I2");
    detail::require_zero_average(G2, "velocity_series_I2");
    detail::require_overlap_precision(G1, "velocity_series_I2");
    detail::require_overlap_precision(G2, "velocity_series_I2");
    const double L = G1.L();
    const double Sn = nu1 + nu2;
    const int NH = std::max(cfg.nmax, 48);
    SecondOrderSeries out;
    std::complex<double> tot{0.0, 0.0};
    const int qmax = std::max(G1.qmax(), G2.qmax());
    for (int p = -qmax; p <= qmax; ++p) {
        if (p == 0) continue;
        const std::complex<double> g1 = G1.coeff(p), g2 = G2.coeff(p);
        if (std::norm(g1) == 0.0 && std::norm(g2) == 0.0) continue;
        out.modes.push_back(p);
        out.R.emplace_back();
        const double k2 = 2.0 * M_PI * M_PI * double(p) * double(p) / (L * L);
        const std::complex<double> zp(0.0, 2.0 * M_PI * double(p) / L);
        // (2 pi i p/L)^{2n-1}, accumulated.
        std::complex<double> zpow = 1.0 / zp;
        for (int n = 0; n <= NH; ++n) {
            const double s = double(n) + k2;
            const double R = std::norm(g1) * nu2 * (nu2 + s) + std::norm(g2) * nu1 * (nu1 + s)
                             + 2.0 * nu1 * nu2 * (std::conj(g1) * g2).real();
            out.R.back().push_back(R);
            tot += std::exp(k2 - double(n) * M_LN2 - log_factorial(n)) * zpow * R
                   / (double(n) + Sn + k2);
            zpow *= zp * zp;
        }
    }
    out.value = 2.0 / Sn * std::abs(tot);
    return out;
}

// ---------------------------------------------------------------------------
// Third-order velocity series term: quadruple sum over Hermite levels (n, m)
// and force modes (p, q), with 2x2 resolvent blocks, the ladder combination
// (2 pi i q/L) gamma_{n,m}(p-q) - sqrt(2) sqrt(n+1) gamma_{n+1,m}(p-q), and
// the bilinear form S(p, q) in the force coefficients. Requires band-limited
// forces; the reported tail is the magnitude reaching the outermost (n, m)
// shell, doubled.

struct ThirdOrderSeries {
    double value = 0.0;
    double tail_estimate = 0.0;
    double imag_defect = 0.0;   // residual imaginary part, must be roundoff-level
};

inline ThirdOrderSeries velocity_series_I3(const SpaceField& G1, const SpaceField& G2,
                                           double nu1, double nu2, const SolverConfig& cfg) {
    cfg.validate();
    if (!(nu1 > 0.0) || !(nu2 > 0.0))
        throw std::invalid_argument("velocity_series_I3: rates must be positive");
    detail::require_zero_average(G1, "velocity_series_I3");
    detail::require_zero_average(G2, "velocity_series_I3");
    detail::require_overlap_precision(G1, "velocity_series_I3");
    detail::require_overlap_precision(G2, "velocity_series_I3");
    const double L = G1.L();
    const double Sn = nu1 + nu2;
    const int NH = cfg.nmax;
    const int qmax = std::max(G1.qmax(), G2.qmax());

    std::complex<double> tot{0.0, 0.0};
    double shell = 0.0;
    for (int p = -qmax; p <= qmax; ++p) {
        if (p == 0) continue;
        const std::complex<double> gp1 = G1.coeff(p), gp2 = G2.coeff(p);
        if (std::norm(gp1) == 0.0 && std::norm(gp2) == 0.0) continue;
        const double kp2 = 2.0 * M_PI * M_PI * double(p) * double(p) / (L * L);
        const std::complex<double> zp(0.0, 2.0 * M_PI * double(p) / L);
        for (int q = -qmax; q <= qmax; ++q) {
            if (q == 0) continue;
            const std::complex<double> gq1 = G1.coeff(q), gq2 = G2.coeff(q);
            if (std::norm(gq1) == 0.0 && std::norm(gq2) == 0.0) continue;
            const std::complex<double> gd1 = G1.coeff(p - q), gd2 = G2.coeff(p - q);
            if (std::norm(gd1) == 0.0 && std::norm(gd2) == 0.0) continue;
            const double kq2 = 2.0 * M_PI * M_PI * double(q) * double(q) / (L * L);
            const std::complex<double> zq(0.0, 2.0 * M_PI * double(q) / L);
            const std::complex<double> Gb1 = std::conj(gp1), Gb2 = std::conj(gp2);
            const std::complex<double> Gq1 = nu2 * gq1, Gq2 = nu1 * gq2;

            std::complex<double> wp = std::exp(kp2 / 2.0);   // m = 0 weight
            for (int m = 0; m <= NH; ++m) {
                const double sm = double(m) + kp2;
                const std::complex<double> left1 = (nu2 + sm) * Gb1 + nu1 * Gb2;
                const std::complex<double> left2 = nu2 * Gb1 + (nu1 + sm) * Gb2;
                std::complex<double> wq = std::exp(kq2 / 2.0) / zq;   // n = 0 weight
                for (int n = 0; n <= NH; ++n) {
                    const double sg = double(n) + kq2;
                    const std::complex<double> right1 = gd1 * ((nu2 + sg) * Gq1 + nu2 * Gq2);
                    const std::complex<double> right2 = gd2 * (nu1 * Gq1 + (nu1 + sg) * Gq2);
                    const std::complex<double> S = left1 * right1 + left2 * right2;
                    if (std::norm(S) > 0.0) {
                        const std::complex<double> lad =
                            zq * gamma_nm(n, m, double(p - q), L)
                            - std::sqrt(2.0) * std::sqrt(double(n + 1))
                                  * gamma_nm(n + 1, m, double(p - q), L);
                        const std::complex<double> term =
                            lad * wq * wp * S / (sm * (sm + Sn) * (sg + Sn));
                        tot += term;
                        if (n == NH || m == NH) shell += std::abs(term);
                    }
                    wq *= zq * std::exp(-0.5 * (M_LN2 + std::log1p(double(n))));
                }
                wp *= zp * std::exp(-0.5 * (M_LN2 + std::log1p(double(m))));
            }
        }
    }
    ThirdOrderSeries out;
    out.value = -2.0 / Sn * tot.real();
    out.imag_defect = 2.0 / Sn * std::abs(tot.imag());
    out.tail_estimate = 2.0 / Sn * shell * 2.0;
    return out;
}

}
