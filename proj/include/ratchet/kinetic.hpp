#pragma once
// Kinetic (Kramers) model with friction gamma and periodic forcing F(t, x):
//   d_t f = -v d_x f + d_v((gamma v - F) f) + (1/2) d_v^2 f.
// Stationary torus problem solved in the symmetrized unknown
// psi = e^{gamma v^2/2} f, expanded over scaled Hermite functions
// gamma^{1/4} e_n(sqrt(gamma) v) and Fourier modes e^{2 pi i(p t/T + q x/L)}.
// Also hosts the per-mode response kernel Gamma_{p,q}, the oscillatory
// integral J(alpha, beta) behind it, the closed second-order velocity
// formula, and the unit-friction rescaling dictionary.

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
#include "quadrature.hpp"

namespace ratchet {

// ---------------------------------------------------------------------------
// Oscillatory kernel J(alpha, beta) = int_0^1 e^{alpha u} (1-u)^{alpha-1+i beta} u du.
// Computed after the substitution 1 - u = e^{-w}:
//   J = int_0^inf exp(alpha(1 - e^{-w} - w)) e^{-i beta w} (1 - e^{-w}) dw,
// whose integrand has magnitude <= 1 for every alpha > 0 (no overflow, no
// endpoint singularity). Laplace expansion at the critical point w = 0:
//   J ~ 1/alpha - i beta sqrt(pi/2) alpha^{-3/2} + O(alpha^{-2}).

struct JResult {
    std::complex<double> value{0.0, 0.0};
    double asymptotic_imag = 0.0;   // leading large-alpha term of Im J
};

inline JResult steepest_descent_J(double alpha, double beta) {
    if (!(alpha > 0.0)) throw std::invalid_argument("steepest_descent_J: alpha must be positive");
    // Beyond W the envelope is below e^{-60}.
    const double W = 1.0 + 60.0 / alpha;
    auto env = [alpha](double w) {
        double g = -std::expm1(-w);   // 1 - e^{-w}
        return std::exp(alpha * (g - w)) * g;
    };
    double re = integrate_kronrod([&](double w) { return env(w) * std::cos(beta * w); },
                                  0.0, W, 1e-13).value;
    double im = (beta == 0.0)
                    ? 0.0
                    : integrate_kronrod([&](double w) { return -env(w) * std::sin(beta * w); },
                                        0.0, W, 1e-13).value;
    double asym = -beta * std::sqrt(M_PI / 2.0) * std::pow(alpha, -1.5);
    return {{re, im}, asym};
}

// ---------------------------------------------------------------------------
// Per-mode response kernel Gamma_{p,q}. Its defining k-integral reduces under
// k = k* u, k* = 2 pi |q|/(gamma L), to the J kernel:
//   Gamma_{p,q} = -i (q/(gamma^2 L^2)) J(a, beta),
//   a = 2 pi^2 q^2/(gamma^3 L^2), beta = 2 pi p/(gamma T),
// one formula for both signs of q. conj(Gamma_{p,q}) = Gamma_{-p,-q} holds
// because J(a, -beta) = conj(J(a, beta)); Re Gamma_{0,q} = 0 exactly.

struct GammaValue {
    int p = 0;
    int q = 0;
    std::complex<double> value{0.0, 0.0};
};

inline GammaValue gamma_pq(int p, int q, double gamma, double T, double L) {
    if (q == 0) throw std::invalid_argument("gamma_pq: q must be nonzero");
    if (!(gamma > 0.0) || !(T > 0.0) || !(L > 0.0))
        throw std::invalid_argument("gamma_pq: gamma, T, L must be positive");
    const double a = 2.0 * M_PI * M_PI * double(q) * double(q) / (gamma * gamma * gamma * L * L);
    const double beta = 2.0 * M_PI * double(p) / (gamma * T);
    const JResult J = steepest_descent_J(a, beta);
    const std::complex<double> pref(0.0, -double(q) / (gamma * gamma * L * L));
    return {p, q, pref * J.value};
}

namespace detail {

// The same kernel straight from its k-integral; independent of the J route.
// For q > 0:
//   Gamma_{p,q} = -(i/(4 pi^2 q)) int_0^{k*} e^{pi q k/(gamma^2 L)}
//                 |1 - gamma k L/(2 pi q)|^{a-1} e^{i beta ln|1 - gamma k L/(2 pi q)|} k dk,
// prefactor mirrored to +i/(4 pi^2 |q|) for q < 0 (same integrand in |q|, same
// beta). tanh-sinh absorbs the endpoint singularity when a < 1.
inline std::complex<double> gamma_pq_direct(int p, int q, double gamma, double T, double L) {
    if (q == 0) throw std::invalid_argument("gamma_pq_direct: q must be nonzero");
    const double a = 2.0 * M_PI * M_PI * double(q) * double(q) / (gamma * gamma * gamma * L * L);
    const double beta = 2.0 * M_PI * double(p) / (gamma * T);
    const double qq = std::abs(double(q));
    const double ks = 2.0 * M_PI * qq / (gamma * L);
    auto integrand = [&](double k) -> std::complex<double> {
        double z = std::abs(1.0 - k / ks);
        if (z == 0.0) return {0.0, 0.0};
        double mag = std::pow(z, a - 1.0);
        double ph = beta * std::log(z);
        double common = std::exp(M_PI * qq * k / (gamma * gamma * L)) * mag * k;
        return {common * std::cos(ph), common * std::sin(ph)};
    };
    const std::complex<double> I = integrate_tanh_sinh_complex(integrand, 0.0, ks, 1e-12);
    const double s = (q > 0) ? -1.0 : 1.0;
    return std::complex<double>(0.0, s / (4.0 * M_PI * M_PI * qq)) * I;
}

}

// ---------------------------------------------------------------------------
// Closed second-order velocity coefficient: for F = eps G the mean velocity is
//   I = eps^2 (2 pi L / gamma) sum_{p,q} |Ghat_{p,q}|^2 Re Gamma_{p,q} + O(eps^3),
// the sum running over the full mode band of G with q != 0. Static modes
// (q = 0) contribute nothing at this order; p = 0 modes vanish through
// Re Gamma_{0,q} = 0.

inline double kramers_second_order(const SpaceTimeDrift& G, double gamma,
                                   std::string* warning = nullptr) {
    const TorusField& g = G.field;
    double total = 0.0;
    bool skipped_static = false;
    for (int p = -g.pmax(); p <= g.pmax(); ++p) {
        for (int q = -g.qmax(); q <= g.qmax(); ++q) {
            const std::complex<double> c = g.coeff(p, q);
            if (std::norm(c) == 0.0) continue;
            if (q == 0) {
                if (p != 0) skipped_static = true;
                continue;
            }
            total += std::norm(c) * gamma_pq(p, q, gamma, g.T(), g.L()).value.real();
        }
    }
    if (skipped_static && warning)
        *warning = "q = 0 force modes carry no second-order velocity and were skipped";
    return 2.0 * M_PI * g.L() / gamma * total;
}

// Linear-response prediction for the v-marginal of the stationary density:
// for F = eps G, the marginal mode (p, q != 0) of (f - f_eq)/eps converges to
// 2 pi Ghat_{p,q} Gamma_{p,q} as eps -> 0 (q = 0 marginal modes stay zero).
inline TorusField linear_response_marginal(const SpaceTimeDrift& G, double gamma) {
    const TorusField& g = G.field;
    TorusField out(g.T(), g.L(), g.pmax(), g.qmax(), true);
    for (int p = 0; p <= g.pmax(); ++p) {
        for (int q = -g.qmax(); q <= g.qmax(); ++q) {
            if (p == 0 && q <= 0) continue;
            if (q == 0) continue;
            const std::complex<double> c = g.coeff(p, q);
            if (std::norm(c) == 0.0) continue;
            out.set(p, q, 2.0 * M_PI * c * gamma_pq(p, q, gamma, g.T(), g.L()).value);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stationary Galerkin solver.

struct KineticDensity {
    // Coefficients psi_{n,p,q} of the symmetrized unknown psi = e^{gamma v^2/2} f.
    int nmax = 0;
    int pmax = 0;
    int qmax = 0;
    double gamma = 1.0;
    double T = 1.0;
    double L = 1.0;
    std::vector<std::complex<double>> coeffs;
    double residual = 0.0;         // max extended-band Galerkin row defect
    double hermite_tail = 0.0;     // top-level energy fraction of the non-equilibrium part
    double mass_defect = 0.0;      // max_t deviation of the per-slice mass from one
    double hermitian_defect = 0.0; // realness defect of the raw solve

    std::size_t index(int n, int p, int q) const {
        if (n < 0 || n > nmax || std::abs(p) > pmax || std::abs(q) > qmax)
            throw std::out_of_range("KineticDensity: index outside truncation");
        return (std::size_t(n) * (2 * pmax + 1) + std::size_t(p + pmax)) * (2 * qmax + 1)
               + std::size_t(q + qmax);
    }
    std::complex<double> psi(int n, int p, int q) const { return coeffs[index(n, p, q)]; }
};

inline KineticDensity solve_stationary_kramers(const SpaceTimeDrift& F, double gamma,
                                               const SolverConfig& cfg) {
    cfg.validate();
    if (!(gamma > 0.0)) throw std::invalid_argument("solve_stationary_kramers: gamma must be positive");
    const TorusField& f = F.field;
    const double T = f.T(), L = f.L();
    const int N = cfg.nmax, P = cfg.pmax, Q = cfg.qmax;
    const int NP = 2 * P + 1, NQ = 2 * Q + 1;
    const std::size_t ntot = std::size_t(N + 1) * NP * NQ;

    std::vector<std::tuple<int, int, std::complex<double>>> modes;
    for (int pp = -f.pmax(); pp <= f.pmax(); ++pp)
        for (int qq = -f.qmax(); qq <= f.qmax(); ++qq) {
            std::complex<double> c = f.coeff(pp, qq);
            if (std::norm(c) > 0.0) modes.emplace_back(pp, qq, c);
        }

    auto ix = [&](int n, int p, int q) {
        return (std::size_t(n) * NP + std::size_t(p + P)) * NQ + std::size_t(q + Q);
    };

    // Galerkin row (m, p, q):
    //   (-gamma m - 2 pi i p/T) psi_{m,p,q}
    //   - (2 pi i q/L)/sqrt(2 gamma) [sqrt(m+1) psi_{m+1,p,q} + sqrt(m) psi_{m-1,p,q}]
    //   + sqrt(2 gamma m) sum_{F modes} Fhat_{pp,qq} psi_{m-1,p-pp,q-qq} = 0,
    // with the (0,0,0) row replaced by the mass normalization
    //   psi_{0,0,0} = (gamma/pi)^{1/4}/L.
    std::vector<Eigen::Triplet<std::complex<double>>> trips;
    trips.reserve(ntot * (4 + modes.size()));
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(Eigen::Index(ntot));
    for (int m = 0; m <= N; ++m) {
        for (int p = -P; p <= P; ++p) {
            for (int q = -Q; q <= Q; ++q) {
                const int r = int(ix(m, p, q));
                if (m == 0 && p == 0 && q == 0) {
                    trips.emplace_back(r, r, std::complex<double>(1.0, 0.0));
                    rhs(r) = std::pow(gamma / M_PI, 0.25) / L;
                    continue;
                }
                trips.emplace_back(r, r, std::complex<double>(-gamma * m, -2.0 * M_PI * p / T));
                if (q != 0) {
                    const std::complex<double> cq =
                        std::complex<double>(0.0, 2.0 * M_PI * q / L) / std::sqrt(2.0 * gamma);
                    if (m + 1 <= N)
                        trips.emplace_back(r, int(ix(m + 1, p, q)), -cq * std::sqrt(double(m + 1)));
                    if (m >= 1)
                        trips.emplace_back(r, int(ix(m - 1, p, q)), -cq * std::sqrt(double(m)));
                }
                if (m >= 1) {
                    const double cf = std::sqrt(2.0 * gamma * m);
                    for (const auto& [pp, qq, c] : modes) {
                        const int p2 = p - pp, q2 = q - qq;
                        if (std::abs(p2) <= P && std::abs(q2) <= Q)
                            trips.emplace_back(r, int(ix(m - 1, p2, q2)), cf * c);
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
        throw std::runtime_error("solve_stationary_kramers: sparse factorization failed");
    Eigen::VectorXcd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("solve_stationary_kramers: sparse solve failed");

    KineticDensity out;
    out.nmax = N; out.pmax = P; out.qmax = Q;
    out.gamma = gamma; out.T = T; out.L = L;
    out.coeffs.assign(ntot, {0.0, 0.0});

    // Realness of f forces Hermitian symmetry in (p,q) per Hermite level.
    double defect = 0.0;
    for (int n = 0; n <= N; ++n)
        for (int p = -P; p <= P; ++p)
            for (int q = -Q; q <= Q; ++q) {
                const std::complex<double> a1 = x(Eigen::Index(ix(n, p, q)));
                const std::complex<double> a2 = std::conj(x(Eigen::Index(ix(n, -p, -q))));
                defect = std::max(defect, std::abs(a1 - a2));
                out.coeffs[ix(n, p, q)] = 0.5 * (a1 + a2);
            }
    out.hermitian_defect = defect;

    // Hermite tail: top-level energy against everything except the fixed
    // normalization coefficient.
    double num = 0.0, den = 0.0;
    for (int n = 0; n <= N; ++n)
        for (int p = -P; p <= P; ++p)
            for (int q = -Q; q <= Q; ++q) {
                const double e = std::norm(out.coeffs[ix(n, p, q)]);
                if (n == N) num += e;
                if (!(n == 0 && p == 0 && q == 0)) den += e;
            }
    out.hermite_tail = (den > 0.0) ? std::sqrt(num / den) : 0.0;
    if (out.hermite_tail > cfg.tail_tol)
        throw std::runtime_error("solve_stationary_kramers: Hermite tail above tolerance, raise nmax");

    // Per-slice mass: the q = 0 marginal modes must reproduce exactly one.
    double md = 0.0;
    const double marg0 = L * std::pow(M_PI / gamma, 0.25);
    for (int p = -P; p <= P; ++p) {
        const std::complex<double> m0 = marg0 * out.coeffs[ix(0, p, 0)];
        md = std::max(md, std::abs(m0 - ((p == 0) ? 1.0 : 0.0)));
    }
    out.mass_defect = md;

    // Extended-band residual: rows beyond the solved band with the solved
    // coefficients (zero outside), skipping the replaced normalization row.
    const int Pe = P + f.pmax(), Qe = Q + f.qmax();
    auto psi_at = [&](int n, int p, int q) -> std::complex<double> {
        if (n < 0 || n > N || std::abs(p) > P || std::abs(q) > Q) return {0.0, 0.0};
        return out.coeffs[ix(n, p, q)];
    };
    double res = 0.0;
    for (int m = 0; m <= N + 1; ++m) {
        for (int p = -Pe; p <= Pe; ++p) {
            for (int q = -Qe; q <= Qe; ++q) {
                if (m == 0 && p == 0 && q == 0) continue;
                std::complex<double> row =
                    std::complex<double>(-gamma * m, -2.0 * M_PI * p / T) * psi_at(m, p, q);
                if (q != 0) {
                    const std::complex<double> cq =
                        std::complex<double>(0.0, 2.0 * M_PI * q / L) / std::sqrt(2.0 * gamma);
                    row -= cq * std::sqrt(double(m + 1)) * psi_at(m + 1, p, q);
                    if (m >= 1) row -= cq * std::sqrt(double(m)) * psi_at(m - 1, p, q);
                }
                if (m >= 1) {
                    const double cf = std::sqrt(2.0 * gamma * m);
                    for (const auto& [pp, qq, c] : modes)
                        row += cf * c * psi_at(m - 1, p - pp, q - qq);
                }
                res = std::max(res, std::abs(row));
            }
        }
    }
    out.residual = res;
    return out;
}

// v-marginal of the stationary density as a torus field:
// marginal mode (p,q) = (pi/gamma)^{1/4} psi_{0,p,q}.
inline TorusField v_marginal(const KineticDensity& f) {
    TorusField out(f.T, f.L, f.pmax, f.qmax, true);
    const double c = std::pow(M_PI / f.gamma, 0.25);
    for (int p = 0; p <= f.pmax; ++p)
        for (int q = -f.qmax; q <= f.qmax; ++q) {
            if (p == 0 && q < 0) continue;
            const std::complex<double> v = c * f.psi(0, p, q);
            if (p == 0 && q == 0) out.set(0, 0, v.real());
            else out.set(p, q, v);
        }
    return out;
}

// Mean velocity, force-contraction route:
//   I = (1/(gamma T)) int F f~ = (L/gamma) (pi/gamma)^{1/4} sum Fhat_{p,q} psi_{0,-p,-q}.
inline VelocityEstimate velocity_kramers(const SpaceTimeDrift& F, const KineticDensity& f) {
    const TorusField& g = F.field;
    if (std::abs(g.T() - f.T) > 1e-12 * f.T || std::abs(g.L() - f.L) > 1e-12 * f.L)
        throw std::invalid_argument("velocity_kramers: force and density periods differ");
    if (g.pmax() > f.pmax || g.qmax() > f.qmax)
        throw std::invalid_argument("velocity_kramers: density band does not cover the force modes");
    std::complex<double> acc{0.0, 0.0};
    for (int p = -g.pmax(); p <= g.pmax(); ++p)
        for (int q = -g.qmax(); q <= g.qmax(); ++q) {
            const std::complex<double> c = g.coeff(p, q);
            if (std::norm(c) > 0.0) acc += c * f.psi(0, -p, -q);
        }
    acc *= (f.L / f.gamma) * std::pow(M_PI / f.gamma, 0.25);
    if (std::abs(acc.imag()) > 1e-10 * (1.0 + std::abs(acc.real())))
        throw std::runtime_error("velocity_kramers: contraction has a non-real part");
    VelocityEstimate v;
    v.value = acc.real();
    v.method = "kinetic-force-contraction";
    v.note = "stationary Galerkin solve; cross-check with the first-moment route";
    return v;
}

// Mean velocity, first-moment route: I = (1/T) int v f = L pi^{1/4} gamma^{-3/4} psi_{1,0,0}/sqrt(2).
inline VelocityEstimate velocity_kramers_moment(const KineticDensity& f) {
    if (f.nmax < 1) throw std::invalid_argument("velocity_kramers_moment: need nmax >= 1");
    const std::complex<double> c = f.psi(1, 0, 0);
    VelocityEstimate v;
    v.value = f.L * std::pow(M_PI, 0.25) * std::pow(f.gamma, -0.75) * c.real() / std::sqrt(2.0);
    v.method = "kinetic-first-moment";
    v.note = "n = 1 Hermite coefficient of the (0,0) torus mode";
    return v;
}

// ---------------------------------------------------------------------------
// Rescaling t -> gamma t, v -> sqrt(gamma) v, x -> gamma^{3/2} x maps friction
// gamma to one. Dictionary for parameters and for carrying velocities back;
// the inverse map is the dictionary at reciprocal friction.

struct UnitFrictionRescaling {
    double gamma = 1.0;
    double time(double t) const { return gamma * t; }
    double length(double x) const { return std::pow(gamma, 1.5) * x; }
    double force(double amplitude) const { return amplitude / std::sqrt(gamma); }
    double rate(double nu) const { return nu / gamma; }
    double velocity_back(double unit_velocity) const { return unit_velocity / std::sqrt(gamma); }
    UnitFrictionRescaling inverse() const { return {1.0 / gamma}; }
};

inline UnitFrictionRescaling unit_friction_map(double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("unit_friction_map: gamma must be positive");
    return {gamma};
}

}
