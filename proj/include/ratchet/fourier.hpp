#pragma once
// Truncated double Fourier coefficient tables on the space-time torus,
//   f(t,x) = sum_{|p|<=P, |q|<=Q} c_{p,q} exp(2 pi i (p t/T + q x/L)),
// and their one-dimensional (space-only) counterpart. A field declared
// real keeps the Hermitian pairing c_{-p,-q} = conj(c_{p,q}) as an
// enforced invariant of set()/add().

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace ratchet {

using cplx = std::complex<double>;

struct FourierMode {
    int p = 0;
    int q = 0;
};

class TorusField {
public:
    TorusField(double T, double L, int P, int Q, bool real_symmetric = true)
        : T_(T), L_(L), P_(P), Q_(Q), real_(real_symmetric),
          c_((2 * P + 1) * (2 * Q + 1), cplx(0.0, 0.0)) {
        if (T <= 0 || L <= 0) throw std::invalid_argument("TorusField: periods must be positive");
        if (P < 0 || Q < 0) throw std::invalid_argument("TorusField: negative truncation");
    }

    double T() const { return T_; }
    double L() const { return L_; }
    int pmax() const { return P_; }
    int qmax() const { return Q_; }
    bool real_symmetric() const { return real_; }

    bool in_range(int p, int q) const { return std::abs(p) <= P_ && std::abs(q) <= Q_; }

    cplx coeff(int p, int q) const {
        if (!in_range(p, q)) return 0.0;
        return c_[idx(p, q)];
    }

    // For a real-symmetric field the mirrored coefficient is written too,
    // so the Hermitian invariant can never be broken through this interface.
    void set(int p, int q, cplx v) {
        if (!in_range(p, q)) throw std::out_of_range("TorusField::set: mode outside truncation");
        c_[idx(p, q)] = v;
        if (real_) {
            if (p == 0 && q == 0 && std::abs(v.imag()) > 0)
                throw std::invalid_argument("TorusField::set: (0,0) coefficient of a real field must be real");
            c_[idx(-p, -q)] = std::conj(v);
        }
    }

    void add(int p, int q, cplx v) { set(p, q, coeff(p, q) + v); }

    // f(p, q, c) over every stored mode.
    template <class F>
    void for_each(F&& f) const {
        for (int p = -P_; p <= P_; ++p)
            for (int q = -Q_; q <= Q_; ++q) f(p, q, c_[idx(p, q)]);
    }

    double energy() const {
        double s = 0.0;
        for (const auto& v : c_) s += std::norm(v);
        return s;
    }

    double max_hermitian_defect() const {
        double d = 0.0;
        for (int p = 0; p <= P_; ++p)
            for (int q = -Q_; q <= Q_; ++q)
                d = std::max(d, std::abs(c_[idx(p, q)] - std::conj(c_[idx(-p, -q)])));
        return d;
    }

    double value_at(double t, double x) const {
        cplx s = 0.0;
        for_each([&](int p, int q, cplx c) {
            const double ph = 2.0 * M_PI * (p * t / T_ + q * x / L_);
            s += c * cplx(std::cos(ph), std::sin(ph));
        });
        return s.real();
    }

    // Largest |p| (resp. |q|) carrying a nonzero coefficient.
    int max_time_mode() const {
        int m = 0;
        for_each([&](int p, int, cplx c) { if (std::abs(c) > 0) m = std::max(m, std::abs(p)); });
        return m;
    }
    int max_space_mode() const {
        int m = 0;
        for_each([&](int, int q, cplx c) { if (std::abs(c) > 0) m = std::max(m, std::abs(q)); });
        return m;
    }

private:
    std::size_t idx(int p, int q) const {
        return std::size_t(p + P_) * (2 * Q_ + 1) + std::size_t(q + Q_);
    }

    double T_, L_;
    int P_, Q_;
    bool real_;
    std::vector<cplx> c_;
};

// Coefficients of the pointwise product, truncated to (P, Q).
inline TorusField torus_convolve(const TorusField& a, const TorusField& b, int P, int Q) {
    if (std::abs(a.T() - b.T()) > 1e-12 * a.T() || std::abs(a.L() - b.L()) > 1e-12 * a.L())
        throw std::invalid_argument("torus_convolve: period mismatch");
    TorusField out(a.T(), a.L(), P, Q, a.real_symmetric() && b.real_symmetric());
    for (int p = -P; p <= P; ++p)
        for (int q = -Q; q <= Q; ++q) {
            cplx s = 0.0;
            for (int pp = std::max(-a.pmax(), p - b.pmax());
                 pp <= std::min(a.pmax(), p + b.pmax()); ++pp)
                for (int qq = std::max(-a.qmax(), q - b.qmax());
                     qq <= std::min(a.qmax(), q + b.qmax()); ++qq) {
                    const cplx ca = a.coeff(pp, qq);
                    if (ca == cplx(0.0, 0.0)) continue;
                    s += ca * b.coeff(p - pp, q - qq);
                }
            if (s != cplx(0.0, 0.0)) {
                if (out.real_symmetric() && p == 0 && q == 0) s = cplx(s.real(), 0.0);
                out.set(p, q, s);
            }
        }
    return out;
}

inline TorusField torus_convolve(const TorusField& a, const TorusField& b) {
    return torus_convolve(a, b, std::max(a.pmax(), b.pmax()), std::max(a.qmax(), b.qmax()));
}

// Space-only coefficient table, g(x) = sum_{|q|<=Q} c_q exp(2 pi i q x / L).
class SpaceField {
public:
    SpaceField(double L, int Q, bool real_symmetric = true)
        : L_(L), Q_(Q), real_(real_symmetric), c_(2 * Q + 1, cplx(0.0, 0.0)) {
        if (L <= 0) throw std::invalid_argument("SpaceField: L must be positive");
        if (Q < 0) throw std::invalid_argument("SpaceField: negative truncation");
    }

    double L() const { return L_; }
    int qmax() const { return Q_; }
    bool real_symmetric() const { return real_; }
    bool in_range(int q) const { return std::abs(q) <= Q_; }

    cplx coeff(int q) const { return in_range(q) ? c_[q + Q_] : cplx(0.0, 0.0); }

    void set(int q, cplx v) {
        if (!in_range(q)) throw std::out_of_range("SpaceField::set: mode outside truncation");
        c_[q + Q_] = v;
        if (real_) {
            if (q == 0 && std::abs(v.imag()) > 0)
                throw std::invalid_argument("SpaceField::set: mean of a real field must be real");
            c_[-q + Q_] = std::conj(v);
        }
    }

    void add(int q, cplx v) { set(q, coeff(q) + v); }

    template <class F>
    void for_each(F&& f) const {
        for (int q = -Q_; q <= Q_; ++q) f(q, c_[q + Q_]);
    }

    double value_at(double x) const {
        cplx s = 0.0;
        for_each([&](int q, cplx c) {
            const double ph = 2.0 * M_PI * q * x / L_;
            s += c * cplx(std::cos(ph), std::sin(ph));
        });
        return s.real();
    }

    double energy() const {
        double s = 0.0;
        for (const auto& v : c_) s += std::norm(v);
        return s;
    }

    int max_mode() const {
        int m = 0;
        for_each([&](int q, cplx c) { if (std::abs(c) > 0) m = std::max(m, std::abs(q)); });
        return m;
    }

private:
    double L_;
    int Q_;
    bool real_;
    std::vector<cplx> c_;
};

// Minimum of the synthesized field over an oversampled uniform grid.
inline double min_on_grid(const TorusField& f, int nt, int nx) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nx; ++j)
            m = std::min(m, f.value_at(f.T() * i / nt, f.L() * j / nx));
    return m;
}

inline double min_on_grid(const SpaceField& f, int nx) {
    double m = std::numeric_limits<double>::infinity();
    for (int j = 0; j < nx; ++j) m = std::min(m, f.value_at(f.L() * j / nx));
    return m;
}

// Discrete Fourier analysis of uniform samples val[i*nx + j] = f(T i/nt, L j/nx).
// Exact for band-limited inputs when nt >= 2P+1 and nx >= 2Q+1.
inline TorusField analyze_grid(const std::vector<double>& val, int nt, int nx,
                               double T, double L, int P, int Q, bool real_symmetric = true) {
    if (int(val.size()) != nt * nx) throw std::invalid_argument("analyze_grid: size mismatch");
    if (nt < 2 * P + 1 || nx < 2 * Q + 1)
        throw std::invalid_argument("analyze_grid: grid too small for requested truncation");
    TorusField out(T, L, P, Q, false);
    for (int p = -P; p <= P; ++p)
        for (int q = -Q; q <= Q; ++q) {
            cplx s = 0.0;
            for (int i = 0; i < nt; ++i)
                for (int j = 0; j < nx; ++j) {
                    const double ph = -2.0 * M_PI * (double(p) * i / nt + double(q) * j / nx);
                    s += val[std::size_t(i) * nx + j] * cplx(std::cos(ph), std::sin(ph));
                }
            out.set(p, q, s / double(nt * nx));
        }
    if (!real_symmetric) return out;
    TorusField sym(T, L, P, Q, true);
    for (int p = 0; p <= P; ++p)
        for (int q = -Q; q <= Q; ++q) {
            if (p == 0 && q < 0) continue;
            cplx v = 0.5 * (out.coeff(p, q) + std::conj(out.coeff(-p, -q)));
            if (p == 0 && q == 0) v = cplx(out.coeff(0, 0).real(), 0.0);
            sym.set(p, q, v);
        }
    return sym;
}

}
