// Two-state switching diffusion: stationary solver, velocity orientation,
// perturbation series, and the closed-form cubic coefficient.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ratchet/twostate.hpp"

using namespace ratchet;
using Catch::Approx;

namespace {

SpaceField zero_field(double L, int Q) { return SpaceField(L, Q, true); }

SpaceField modes(double L, int Q, std::initializer_list<std::pair<int, cplx>> list) {
    SpaceField f(L, Q, true);
    for (const auto& [q, c] : list) f.set(q, c);
    return f;
}

}

TEST_CASE("switching equilibrium without drift") {
    const double L = 5.0;
    const TwoStateRates rates{0.7, 1.9, 1.3};
    const auto w = solve_stationary_two_state(zero_field(L, 4), zero_field(L, 4), rates);
    CHECK(w.w1.coeff(0).real() == Approx(1.9 / (L * 2.6)).epsilon(1e-13));
    CHECK(w.w2.coeff(0).real() == Approx(0.7 / (L * 2.6)).epsilon(1e-13));
    for (int n = 1; n <= 4; ++n) {
        CHECK(std::abs(w.w1.coeff(n)) <= 1e-14);
        CHECK(std::abs(w.w2.coeff(n)) <= 1e-14);
    }
    CHECK(velocity_two_state(zero_field(L, 4), zero_field(L, 4), w).value
          == Approx(0.0).margin(1e-14));
    CHECK(w.residual <= 1e-12);
}

TEST_CASE("common drift reduces to the single-state zero-flux density") {
    const double L = 5.0;
    const TwoStateRates rates{1.3, 0.6, 0.8};
    const SpaceField b = modes(L, 2, {{1, 0.15}, {2, cplx(0.05, -0.08)}});
    const auto w = solve_stationary_two_state(b, b, rates);

    CHECK(std::abs(velocity_two_state(b, b, w).value) <= 1e-10);
    CHECK((w.w1.coeff(0) + w.w2.coeff(0)).real() == Approx(1.0 / L).epsilon(1e-12));

    // summing the two equations cancels the switching terms, so the total
    // density obeys D w' + b w = 0: compare against exp(-B/D)/Z, which the
    // unit-diffusion oracle produces for the scaled drift b/(2D)
    SpaceField bD(L, 2, true);
    bD.set(1, cplx(0.15, 0.0) / 1.6);
    bD.set(2, cplx(0.05, -0.08) / 1.6);
    const int K = 256;
    const auto ref = oracle::static_drift_density(bD, K);
    double worst = 0.0;
    for (int k = 0; k < K; ++k) {
        const double x = L * k / K;
        const double total = w.w1.value_at(x) + w.w2.value_at(x);
        worst = std::max(worst, std::abs(total - ref[k]));
    }
    CHECK(worst <= 1e-9);
    CHECK(w.min_grid_value > 0.0);
}

TEST_CASE("full solve matches the order-eps perturbation density at small amplitude") {
    const double L = 2.0 * M_PI, eps = 1e-2;
    const TwoStateRates rates{1.0, 2.0, 1.0};
    const SpaceField B1 = modes(L, 2, {{2, 0.5}});
    const SpaceField B2 = modes(L, 2, {{1, 0.5}});
    const SpaceField b1 = modes(L, 2, {{2, eps / 2.0}});
    const SpaceField b2 = modes(L, 2, {{1, eps / 2.0}});
    SolverConfig cfg;
    cfg.qmax = 24;
    const auto w = solve_stationary_two_state(b1, b2, rates, cfg);
    const auto [o1, o2] = perturbation_density(B1, B2, rates, 1, 24);
    double worst = 0.0;
    for (int n = -24; n <= 24; ++n) {
        const cplx base1 = (n == 0 ? cplx(2.0 / (3.0 * L), 0.0) : cplx(0, 0)) + eps * o1[std::size_t(n + 24)];
        const cplx base2 = (n == 0 ? cplx(1.0 / (3.0 * L), 0.0) : cplx(0, 0)) + eps * o2[std::size_t(n + 24)];
        worst = std::max(worst, std::abs(w.w1.coeff(n) - base1));
        worst = std::max(worst, std::abs(w.w2.coeff(n) - base2));
    }
    CHECK(worst <= 1e-5 / L);

    // frozen cross-implementation value for the dominant coefficient
    CHECK(w.w1.coeff(1).real() == Approx(4.026227520482e-7).epsilon(1e-6));
    CHECK(w.w1.coeff(1).imag() == Approx(1.326292376607e-4).epsilon(1e-9));
}

TEST_CASE("first and second perturbation orders vanish for real drift pairs") {
    std::mt19937 rng(17);
    std::normal_distribution<double> gauss(0.0, 0.1);
    for (int trial = 0; trial < 20; ++trial) {
        const double L = 1.0 + 5.0 * (trial % 4) / 3.0;
        SpaceField b1(L, 3, true), b2(L, 3, true);
        for (int q = 1; q <= 3; ++q) {
            b1.set(q, cplx(gauss(rng), gauss(rng)));
            b2.set(q, cplx(gauss(rng), gauss(rng)));
        }
        const TwoStateRates rates{0.4 + 0.2 * (trial % 5), 0.3 + 0.5 * (trial % 3), 0.6 + 0.1 * (trial % 7)};
        CHECK(std::abs(perturbation_order(b1, b2, rates, 1)) <= 1e-12);
        CHECK(std::abs(perturbation_order(b1, b2, rates, 2)) <= 1e-10);
    }
}

TEST_CASE("cubic coefficient: closed form and recursion agree") {
    const double L = 2.0 * M_PI;
    const SpaceField B1 = modes(L, 2, {{2, 0.5}});
    const SpaceField B2 = modes(L, 2, {{1, 0.5}});

    CHECK(third_variation_closed_form(1.0, 2.0) == Approx(-1.0 / 672.0).epsilon(1e-14));
    CHECK(third_variation_closed_form(2.0, 1.0) == Approx(1.0 / 336.0).epsilon(1e-14));
    CHECK(third_variation_closed_form(1.0, 1.0) == Approx(0.0).margin(1e-16));

    for (const auto& [nu1, nu2] : std::initializer_list<std::pair<double, double>>{
             {1.0, 2.0}, {2.0, 1.0}, {0.5, 3.0}}) {
        const TwoStateRates rates{nu1, nu2, 1.0};
        const double I3 = perturbation_order(B1, B2, rates, 3);
        const double cf = third_variation_closed_form(nu1, nu2);
        CHECK(I3 == Approx(cf).epsilon(1e-6));
    }
    CHECK(perturbation_order(B1, B2, TwoStateRates{1.0, 2.0, 1.0}, 3)
          == Approx(-1.48810e-3).epsilon(1e-4));
}

TEST_CASE("cubic coefficient regression for a generic drift pair") {
    // frozen from an independent implementation of the recursion
    const double L = 3.0;
    const SpaceField b1 = modes(L, 3, {{1, cplx(-0.080193142525345, -0.132435899562815)},
                                       {2, cplx(0.113604653248964, 0.010970639932181)},
                                       {3, cplx(0.074874577073459, 0.163478304295858)}});
    const SpaceField b2 = modes(L, 3, {{1, cplx(-0.024836162209525, 0.042044523806552)},
                                       {2, cplx(-0.055264732053623, -0.078478035534428)},
                                       {3, cplx(0.027276877584472, -0.123332866403077)}});
    const TwoStateRates rates{0.7, 1.9, 1.3};
    CHECK(perturbation_order(b1, b2, rates, 3) == Approx(3.137566385601e-5).epsilon(1e-9));
}

TEST_CASE("velocity regression and magnitude agreement with the cubic law") {
    const double L = 2.0 * M_PI;
    SolverConfig cfg;
    cfg.qmax = 24;

    const SpaceField b1 = modes(L, 2, {{2, 0.1}});   // eps = 0.2 of cos(2x)
    const SpaceField b2 = modes(L, 2, {{1, 0.1}});
    const TwoStateRates r12{1.0, 2.0, 1.0};
    const double v = velocity_two_state(b1, b2, solve_stationary_two_state(b1, b2, r12, cfg)).value;
    CHECK(v == Approx(1.181843920247e-5).epsilon(1e-9));

    // the physical velocity and the series coefficient carry opposite signs;
    // their magnitudes agree to the cubic order
    const double I3 = third_variation_closed_form(1.0, 2.0);
    const double eps = 0.2;
    CHECK(std::abs(std::abs(v) - std::abs(eps * eps * eps * I3)) <= 0.15 * std::abs(eps * eps * eps * I3));
    CHECK(v * I3 < 0.0);

    const TwoStateRates r21{2.0, 1.0, 1.0};
    const double v21 = velocity_two_state(b1, b2, solve_stationary_two_state(b1, b2, r21, cfg)).value;
    CHECK(v21 == Approx(-2.352226364874e-5).epsilon(1e-9));
    CHECK(v21 * third_variation_closed_form(2.0, 1.0) < 0.0);
}

TEST_CASE("amplitude sweep shows the cubic exponent") {
    const double L = 2.0 * M_PI;
    SolverConfig cfg;
    cfg.qmax = 24;
    const TwoStateRates rates{1.0, 2.0, 1.0};
    std::vector<double> eps = {0.05, 0.1, 0.2}, val;
    for (double e : eps) {
        const SpaceField b1 = modes(L, 2, {{2, e / 2.0}});
        const SpaceField b2 = modes(L, 2, {{1, e / 2.0}});
        val.push_back(std::abs(
            velocity_two_state(b1, b2, solve_stationary_two_state(b1, b2, rates, cfg)).value));
    }
    // least-squares slope of log|I| against log eps
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double x = std::log(eps[i]), y = std::log(val[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double n = double(eps.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == Approx(3.0).margin(0.15));
}
