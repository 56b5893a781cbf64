// Basis functions, overlap kernels, and coefficient-space arithmetic.
#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ratchet/fourier.hpp"
#include "ratchet/special.hpp"

using namespace ratchet;
using Catch::Approx;

namespace {

cplx gamma_nm_quadrature(int n, int m, double r, double L) {
    // trapezoid on a wide uniform grid; integrand decays like a Gaussian
    const int K = 4001;
    const double V = 12.0;
    cplx s = 0.0;
    for (int k = 0; k < K; ++k) {
        const double v = -V + 2.0 * V * k / (K - 1);
        // e_n(v - 2 pi i r / L) via the recurrence in complex arithmetic
        const cplx z(v, -2.0 * M_PI * r / L);
        cplx e0 = std::pow(M_PI, -0.25) * std::exp(-0.5 * z * z);
        cplx en = e0;
        if (n >= 1) {
            cplx e1 = std::sqrt(2.0) * z * e0;
            for (int j = 1; j < n; ++j) {
                const cplx e2 = (std::sqrt(2.0) * z * e1 - std::sqrt(double(j)) * e0) / std::sqrt(double(j + 1));
                e0 = e1;
                e1 = e2;
            }
            en = e1;
        }
        const double wq = (k == 0 || k == K - 1) ? 0.5 : 1.0;
        s += wq * hermite_e(m, v) * en;
    }
    return s * (2.0 * V / (K - 1));
}

}

TEST_CASE("hermite_e point values") {
    CHECK(hermite_e(0, 0.0) == Approx(std::pow(M_PI, -0.25)).epsilon(1e-14));
    CHECK(hermite_e(1, 0.0) == Approx(0.0).margin(1e-15));
    CHECK_THROWS_AS(hermite_e(-1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(hermite_e(hermite_hard_cap + 1, 0.0), std::invalid_argument);

    std::vector<double> all;
    hermite_e_all(8, 1.3, all);
    for (int n = 0; n <= 8; ++n) CHECK(all[n] == Approx(hermite_e(n, 1.3)).epsilon(1e-13));
}

TEST_CASE("hermite orthonormality by quadrature") {
    // trapezoid on [-V, V]; e_n e_m decays like e^{-v^2}, convergence is spectral
    const int N = 24;
    const int K = 6001;
    const double V = 14.0;
    const double h = 2.0 * V / (K - 1);
    std::vector<std::vector<double>> e(K);
    for (int k = 0; k < K; ++k) hermite_e_all(N, -V + h * k, e[k]);
    for (int n = 0; n <= N; ++n)
        for (int m = n; m <= N; ++m) {
            double s = 0.0;
            for (int k = 0; k < K; ++k) {
                const double wq = (k == 0 || k == K - 1) ? 0.5 : 1.0;
                s += wq * e[k][n] * e[k][m];
            }
            s *= h;
            CHECK(std::abs(s - (n == m ? 1.0 : 0.0)) <= 1e-10);
        }
}

TEST_CASE("hermite ladder identity (d/dv - v) e_n = -sqrt(2(n+1)) e_{n+1}") {
    for (int n : {0, 1, 2, 5, 11, 20}) {
        double worst = 0.0;
        for (int k = 0; k <= 200; ++k) {
            const double v = -6.0 + 12.0 * k / 200.0;
            const double lhs = hermite_e_derivative(n, v) - v * hermite_e(n, v);
            const double rhs = -std::sqrt(2.0 * (n + 1)) * hermite_e(n + 1, v);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("laguerre recurrence values") {
    CHECK(laguerre(0, 3, -7.2) == Approx(1.0).epsilon(1e-15));
    CHECK(laguerre(1, 0, 2.0) == Approx(-1.0).epsilon(1e-14));
    CHECK(laguerre(2, 1, -1.0) == Approx(6.5).epsilon(1e-14)); // x^2/2 - 3x + 3 at x = -1
    CHECK_THROWS_AS(laguerre(-1, 0, 0.0), std::invalid_argument);
}

TEST_CASE("gamma_nm zero shift is exactly the identity") {
    for (int n = 0; n <= 6; ++n)
        for (int m = 0; m <= 6; ++m) {
            const cplx g = gamma_nm(n, m, 0.0, 3.0);
            if (n == m) {
                CHECK(g.real() == 1.0);
                CHECK(g.imag() == 0.0);
            } else {
                CHECK(g == cplx(0.0, 0.0));
            }
        }
}

TEST_CASE("gamma_nm closed form vs quadrature of the defining overlap") {
    struct Case { int n, m; double r, L; };
    for (const auto& c : {Case{0, 1, 1.0, 3.0}, Case{3, 2, 2.0, 5.0}, Case{5, 5, 1.0, 2.0},
                          Case{2, 6, 3.0, 10.0}, Case{4, 0, 2.0, 7.0}}) {
        const cplx cf = gamma_nm(c.n, c.m, c.r, c.L);
        const cplx qd = gamma_nm_quadrature(c.n, c.m, c.r, c.L);
        CHECK(std::abs(cf - qd) <= 1e-10 * std::max(1.0, std::abs(cf)));
    }
    // explicit first off-diagonal: gamma_{0,1}(r) = sqrt(2) e^{pi^2 r^2/L^2} (i pi r / L)
    const double r = 1.0, L = 3.0;
    const cplx expect = std::sqrt(2.0) * std::exp(M_PI * M_PI * r * r / (L * L))
                        * cplx(0.0, M_PI * r / L);
    CHECK(std::abs(gamma_nm(0, 1, r, L) - expect) <= 1e-12 * std::abs(expect));
}

TEST_CASE("gamma_nm conjugate-transpose symmetry") {
    for (int n = 0; n <= 6; ++n)
        for (int m = 0; m <= 6; ++m) {
            const cplx a = gamma_nm(n, m, 2.0, 7.0);
            const cplx b = std::conj(gamma_nm(m, n, 2.0, 7.0));
            CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
        }
}

TEST_CASE("torus field storage and Hermitian invariant") {
    TorusField f(1.0, 2.0, 3, 4, true);
    f.set(1, 2, cplx(0.5, -0.25));
    CHECK(f.coeff(-1, -2) == std::conj(f.coeff(1, 2)));
    CHECK(f.max_hermitian_defect() == 0.0);
    CHECK_THROWS_AS(f.set(0, 0, cplx(0.0, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(f.set(4, 0, cplx(1.0, 0.0)), std::out_of_range);
    CHECK(f.coeff(3, 4) == cplx(0.0, 0.0));
    CHECK(f.max_time_mode() == 1);
    CHECK(f.max_space_mode() == 2);
}

TEST_CASE("torus_convolve identity and cosine-squared") {
    TorusField one(1.0, 1.0, 2, 2, true);
    one.set(0, 0, 1.0);
    TorusField b(1.0, 1.0, 2, 2, true);
    b.set(1, 1, cplx(0.3, 0.1));
    b.set(2, -1, cplx(-0.2, 0.05));
    const TorusField id = torus_convolve(one, b);
    b.for_each([&](int p, int q, cplx c) { CHECK(std::abs(id.coeff(p, q) - c) <= 1e-15); });

    // cos^2(2 pi (t + x)) = 1/2 + cos(4 pi (t + x))/2
    TorusField c(1.0, 1.0, 2, 2, true);
    c.set(1, 1, 0.5);
    const TorusField c2 = torus_convolve(c, c);
    CHECK(c2.coeff(0, 0).real() == Approx(0.5).epsilon(1e-14));
    CHECK(c2.coeff(2, 2).real() == Approx(0.25).epsilon(1e-14));
    CHECK(std::abs(c2.coeff(1, 1)) <= 1e-15);
    CHECK(std::abs(c2.coeff(2, -2)) <= 1e-15);
}

TEST_CASE("torus_convolve matches grid-space multiplication") {
    std::mt19937 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    TorusField a(1.3, 0.8, 2, 3, true), b(1.3, 0.8, 3, 2, true);
    auto fill = [&](TorusField& f) {
        for (int p = 0; p <= f.pmax(); ++p)
            for (int q = -f.qmax(); q <= f.qmax(); ++q) {
                if (p == 0 && q < 0) continue;
                cplx v(gauss(rng), (p == 0 && q == 0) ? 0.0 : gauss(rng));
                f.set(p, q, v);
            }
    };
    fill(a);
    fill(b);
    const TorusField ab = torus_convolve(a, b, 5, 5);
    double worst = 0.0;
    for (int i = 0; i < 13; ++i)
        for (int j = 0; j < 13; ++j) {
            const double t = 1.3 * i / 13.0, x = 0.8 * j / 13.0;
            worst = std::max(worst, std::abs(ab.value_at(t, x) - a.value_at(t, x) * b.value_at(t, x)));
        }
    CHECK(worst <= 1e-12);
    CHECK_THROWS_AS(torus_convolve(a, TorusField(2.0, 0.8, 1, 1, true)), std::invalid_argument);
}

TEST_CASE("analyze_grid round trip on a band-limited field") {
    std::mt19937 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    TorusField f(2.0, 3.0, 3, 4, true);
    for (int p = 0; p <= 3; ++p)
        for (int q = -4; q <= 4; ++q) {
            if (p == 0 && q < 0) continue;
            f.set(p, q, cplx(gauss(rng), (p == 0 && q == 0) ? 0.0 : gauss(rng)));
        }
    const int nt = 16, nx = 16;
    std::vector<double> samples(nt * nx);
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nx; ++j)
            samples[std::size_t(i) * nx + j] = f.value_at(2.0 * i / nt, 3.0 * j / nx);
    const TorusField g = analyze_grid(samples, nt, nx, 2.0, 3.0, 3, 4, true);
    double worst = 0.0;
    f.for_each([&](int p, int q, cplx c) { worst = std::max(worst, std::abs(c - g.coeff(p, q))); });
    CHECK(worst <= 1e-10);
    CHECK_THROWS_AS(analyze_grid(samples, nt, nx, 2.0, 3.0, 8, 8, true), std::invalid_argument);
}
