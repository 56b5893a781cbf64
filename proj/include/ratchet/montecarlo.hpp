#pragma once
// Euler-Maruyama Monte Carlo for the three stochastic processes behind the
// velocity functionals: overdamped diffusion dx = -b(t,x) dt + dW, the
// Langevin pair dx = v dt, dv = (-gamma v + F(t,x)) dt + a dW, and the
// two-state variants whose drift/force flips by a continuous-time Markov
// chain with exact exponential clocks.
//
// Reproducibility contract: every path owns an RNG stream derived from
// (seed, path index), path results land in index-ordered slots, and the
// reduction is pairwise over that order, so estimates are bit-identical
// for any thread count.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"
#include "drift.hpp"
#include "fourier.hpp"

namespace ratchet {

namespace rng {

// SplitMix64 mixer; distinct inputs give effectively independent outputs.
struct SplitMix64 {
    std::uint64_t x;
    std::uint64_t next() {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256++, one instance per path; state seeded through SplitMix64 so
// nearby (seed, stream) pairs land far apart in state space.
class Xoshiro256pp {
public:
    Xoshiro256pp(std::uint64_t seed, std::uint64_t stream) {
        SplitMix64 sm{seed + stream};
        for (int k = 0; k < 4; ++k) s_[k] = sm.next();
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    // Uniform on (0, 1]; safe under log().
    double uniform_pos() { return double((next() >> 11) + 1) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    std::uint64_t s_[4];
};

// 128-layer ziggurat for the standard normal. Tables are built once from the
// classic layer constants; the wedge and tail fall back to explicit
// exponentials, so every finite double is reachable.
class ZigguratNormal {
public:
    ZigguratNormal() {
        const double m1 = 2147483648.0;
        double dn = kTail, tn = kTail;
        const double vn = 9.91256303526217e-3;
        const double q = vn / std::exp(-0.5 * dn * dn);
        kn_[0] = std::uint32_t((dn / q) * m1);
        kn_[1] = 0;
        wn_[0] = q / m1;
        wn_[127] = dn / m1;
        fn_[0] = 1.0;
        fn_[127] = std::exp(-0.5 * dn * dn);
        for (int i = 126; i >= 1; --i) {
            dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
            kn_[i + 1] = std::uint32_t((dn / tn) * m1);
            tn = dn;
            fn_[i] = std::exp(-0.5 * dn * dn);
            wn_[i] = dn / m1;
        }
    }

    double sample(Xoshiro256pp& g) const {
        for (;;) {
            const std::int32_t hz = std::int32_t(std::uint32_t(g.next() >> 32));
            const int iz = hz & 127;
            const std::uint32_t mag =
                hz < 0 ? std::uint32_t(0) - std::uint32_t(hz) : std::uint32_t(hz);
            if (mag < kn_[iz]) return hz * wn_[iz];
            if (iz == 0) {
                // Tail beyond kTail by Marsaglia's exponential wedge.
                double x, y;
                do {
                    x = -std::log(g.uniform_pos()) / kTail;
                    y = -std::log(g.uniform_pos());
                } while (y + y < x * x);
                return hz > 0 ? kTail + x : -(kTail + x);
            }
            const double x = hz * wn_[iz];
            if (fn_[iz] + g.uniform() * (fn_[iz - 1] - fn_[iz]) < std::exp(-0.5 * x * x))
                return x;
        }
    }

private:
    static constexpr double kTail = 3.442619855899;
    std::uint32_t kn_[128];
    double wn_[128];
    double fn_[128];
};

inline const ZigguratNormal& ziggurat() {
    static const ZigguratNormal z;
    return z;
}

}

// ---------------------------------------------------------------------------
// Periodic lookup tables so the inner step never synthesizes Fourier sums.

class DriftTable {
public:
    // Default grid keeps the table cache resident; tent-filter damping of the
    // retained modes stays far below Monte Carlo resolution.
    explicit DriftTable(const SpaceTimeDrift& b, int nt = 256, int nx = 256)
        : invT_(1.0 / b.T()), invL_(1.0 / b.L()), dnt_(nt), dnx_(nx), nt_(nt), nx_(nx),
          stride_(std::size_t(nx) + 1), v_(std::size_t(nt + 1) * (nx + 1) + 1, 0.0) {
        if (nt < 2 || nx < 2) throw std::invalid_argument("DriftTable: grid too small");
        std::vector<cplx> tp(nt), tx(nx);
        b.field.for_each([&](int p, int q, cplx c) {
            if (c == cplx(0.0, 0.0)) return;
            if (p < 0 || (p == 0 && q < 0)) return;   // Hermitian mirror handled by doubling
            for (int i = 0; i < nt; ++i) {
                const double ph = 2.0 * M_PI * p * double(i) / nt;
                tp[i] = cplx(std::cos(ph), std::sin(ph));
            }
            for (int j = 0; j < nx; ++j) {
                const double ph = 2.0 * M_PI * q * double(j) / nx;
                tx[j] = cplx(std::cos(ph), std::sin(ph));
            }
            const double w = (p == 0 && q == 0) ? 1.0 : 2.0;
            for (int i = 0; i < nt; ++i)
                for (int j = 0; j < nx; ++j)
                    v_[std::size_t(i) * (nx + 1) + j] += w * (c * tp[i] * tx[j]).real();
        });
        // Wrapped edges make the interpolation branch-free.
        for (int i = 0; i < nt; ++i)
            v_[std::size_t(i) * (nx + 1) + nx] = v_[std::size_t(i) * (nx + 1)];
        for (int j = 0; j <= nx; ++j)
            v_[std::size_t(nt) * (nx + 1) + j] = v_[j];
    }

    // Fractional parts can round to exactly 1, landing on the wrapped edge
    // row or column; the weights vanish there and a guard element keeps the
    // corner read in bounds.
    double operator()(double t, double x) const {
        double u = t * invT_;
        u -= std::floor(u);
        u *= dnt_;
        double w = x * invL_;
        w -= std::floor(w);
        w *= dnx_;
        const int i = int(u), j = int(w);
        const double fu = u - double(i), fw = w - double(j);
        const double* row = v_.data() + std::size_t(i) * stride_ + j;
        const double a = row[0] + fw * (row[1] - row[0]);
        const double b = row[stride_] + fw * (row[stride_ + 1] - row[stride_]);
        return a + fu * (b - a);
    }

private:
    double invT_, invL_, dnt_, dnx_;
    int nt_, nx_;
    std::size_t stride_;
    std::vector<double> v_;
};

class SpaceTable {
public:
    explicit SpaceTable(const SpaceField& f, int nx = 8192)
        : invL_(1.0 / f.L()), dnx_(nx), nx_(nx), v_(std::size_t(nx) + 2, 0.0) {
        if (nx < 2) throw std::invalid_argument("SpaceTable: grid too small");
        const double L = f.L();
        for (int j = 0; j < nx; ++j) v_[j] = f.value_at(L * double(j) / nx);
        v_[nx] = v_[0];
    }

    double operator()(double x) const {
        double w = x * invL_;
        w -= std::floor(w);
        w *= dnx_;
        const int j = int(w);
        const double fw = w - double(j);
        return v_[j] + fw * (v_[j + 1] - v_[j]);
    }

private:
    double invL_, dnx_;
    int nx_;
    std::vector<double> v_;
};

// ---------------------------------------------------------------------------
// Deterministic reduction helpers.

namespace detail {

inline double pairwise_sum(const double* a, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(a, h) + pairwise_sum(a + h, n - h);
}

struct MeanErr {
    double mean = 0.0;
    double std_error = 0.0;
};

inline MeanErr reduce_mean(std::vector<double>& slots) {
    const std::size_t n = slots.size();
    MeanErr r;
    r.mean = pairwise_sum(slots.data(), n) / double(n);
    if (n > 1) {
        std::vector<double> dev(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = slots[i] - r.mean;
            dev[i] = d * d;
        }
        const double var = pairwise_sum(dev.data(), n) / double(n - 1);
        r.std_error = std::sqrt(var / double(n));
    }
    return r;
}

// Runs per_path(i) for i in [0, n) across the requested threads. Work is
// handed out in chunks through an atomic cursor; each call writes only its
// own slot, so scheduling order cannot reach the results.
template <class Fn>
inline void run_paths(long n_paths, int threads, Fn&& per_path) {
    if (threads <= 1) {
        for (long i = 0; i < n_paths; ++i) per_path(i);
        return;
    }
    std::atomic<long> cursor{0};
    auto worker = [&]() {
        for (;;) {
            const long i0 = cursor.fetch_add(64);
            if (i0 >= n_paths) return;
            const long i1 = std::min(i0 + 64, n_paths);
            for (long i = i0; i < i1; ++i) per_path(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(threads));
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}

// Optional per-run diagnostics; fields are filled by the simulators that
// produce them and left at zero otherwise.
struct McDiagnostics {
    double v2_mean = 0.0;            // Langevin: time-averaged v^2 across paths
    double v2_std_error = 0.0;
    double occupancy1 = 0.0;         // two-state: fraction of time in state 1
    double occupancy1_std_error = 0.0;
    std::vector<double> batch_means; // across-path mean velocity per time batch
    std::vector<double> batch_std_errors;
    std::vector<double> per_path;    // per-path velocity estimates, path order
};

// ---------------------------------------------------------------------------
// Overdamped diffusion dx = -b(t, x) dt + dW, unit noise. Velocity per path:
// displacement between the burn-in mark and the horizon over the elapsed time.

inline VelocityEstimate simulate_overdamped(const SpaceTimeDrift& b, const SdeConfig& cfg,
                                            McDiagnostics* diag = nullptr) {
    cfg.validate();
    const DriftTable table(b);
    const long nsteps = std::llround(cfg.horizon / cfg.dt);
    long mark = std::llround(cfg.burn_in / cfg.dt);
    if (mark >= nsteps) mark = nsteps - 1;
    const double dt = cfg.dt, sq = std::sqrt(cfg.dt);
    const double window = double(nsteps - mark) * dt;

    constexpr int kBatches = 8;
    const bool want_batches = diag != nullptr;
    long bounds[kBatches];
    for (int j = 0; j < kBatches; ++j) bounds[j] = mark + (long(j) * (nsteps - mark)) / kBatches;

    std::vector<double> slots(std::size_t(cfg.n_paths), 0.0);
    std::vector<double> bslots(want_batches ? std::size_t(kBatches) * cfg.n_paths : 0, 0.0);
    const rng::ZigguratNormal& zig = rng::ziggurat();

    detail::run_paths(cfg.n_paths, cfg.threads, [&](long i) {
        rng::Xoshiro256pp g(cfg.seed, std::uint64_t(i) + 1);
        double x = 0.0, xmark = 0.0;
        double xb[kBatches + 1];
        int nb = 0;
        for (long k = 0; k < nsteps; ++k) {
            if (k == mark) xmark = x;
            if (want_batches && nb < kBatches && k == bounds[nb]) xb[nb++] = x;
            x += -table(double(k) * dt, x) * dt + sq * zig.sample(g);
        }
        slots[std::size_t(i)] = (x - xmark) / window;
        if (want_batches) {
            xb[kBatches] = x;
            for (int j = 0; j < kBatches; ++j) {
                const long k1 = (j + 1 < kBatches) ? bounds[j + 1] : nsteps;
                bslots[std::size_t(j) * cfg.n_paths + i] =
                    (xb[j + 1] - xb[j]) / (double(k1 - bounds[j]) * dt);
            }
        }
    });

    const detail::MeanErr m = detail::reduce_mean(slots);
    if (diag) {
        diag->batch_means.resize(kBatches);
        diag->batch_std_errors.resize(kBatches);
        for (int j = 0; j < kBatches; ++j) {
            std::vector<double> col(bslots.begin() + std::size_t(j) * cfg.n_paths,
                                    bslots.begin() + std::size_t(j + 1) * cfg.n_paths);
            const detail::MeanErr bm = detail::reduce_mean(col);
            diag->batch_means[j] = bm.mean;
            diag->batch_std_errors[j] = bm.std_error;
        }
        diag->per_path = slots;
    }
    VelocityEstimate v;
    v.value = m.mean;
    v.std_error = m.std_error;
    v.n_effective = double(cfg.n_paths);
    v.method = "mc-overdamped-em";
    v.note = "unit noise; displacement estimator";
    return v;
}

// ---------------------------------------------------------------------------
// Langevin pair process. Noise amplitude 1 under the Kramers convention,
// sqrt(2) under the alternative; the time average of v equals the
// displacement estimator exactly because x integrates the same v samples.

inline VelocityEstimate simulate_langevin(const SpaceTimeDrift& F, double gamma,
                                          const SdeConfig& cfg, McDiagnostics* diag = nullptr) {
    cfg.validate();
    if (!(gamma > 0.0)) throw std::invalid_argument("simulate_langevin: gamma must be positive");
    const DriftTable table(F);
    const long nsteps = std::llround(cfg.horizon / cfg.dt);
    long mark = std::llround(cfg.burn_in / cfg.dt);
    if (mark >= nsteps) mark = nsteps - 1;
    const double dt = cfg.dt, sq = std::sqrt(cfg.dt);
    const double amp = (cfg.noise == NoiseConvention::kramers) ? 1.0 : std::sqrt(2.0);
    const double window = double(nsteps - mark) * dt;

    std::vector<double> slots(std::size_t(cfg.n_paths), 0.0);
    std::vector<double> v2slots(std::size_t(cfg.n_paths), 0.0);
    const rng::ZigguratNormal& zig = rng::ziggurat();

    detail::run_paths(cfg.n_paths, cfg.threads, [&](long i) {
        rng::Xoshiro256pp g(cfg.seed, std::uint64_t(i) + 1);
        double x = 0.0, v = 0.0, xmark = 0.0, s2 = 0.0;
        for (long k = 0; k < nsteps; ++k) {
            if (k == mark) xmark = x;
            if (k >= mark) s2 += v * v;
            const double f = table(double(k) * dt, x);
            x += v * dt;
            v += (-gamma * v + f) * dt + amp * sq * zig.sample(g);
        }
        slots[std::size_t(i)] = (x - xmark) / window;
        v2slots[std::size_t(i)] = s2 / double(nsteps - mark);
    });

    const detail::MeanErr m = detail::reduce_mean(slots);
    if (diag) {
        const detail::MeanErr m2 = detail::reduce_mean(v2slots);
        diag->v2_mean = m2.mean;
        diag->v2_std_error = m2.std_error;
        diag->per_path = slots;
    }
    VelocityEstimate v;
    v.value = m.mean;
    v.std_error = m.std_error;
    v.n_effective = double(cfg.n_paths);
    v.method = "mc-langevin-em";
    v.note = (cfg.noise == NoiseConvention::kramers) ? "noise amplitude 1"
                                                     : "noise amplitude sqrt(2)";
    return v;
}

// ---------------------------------------------------------------------------
// Two-state switching diffusion. The state flips 1 <-> 2 by exact exponential
// clocks; burn-in and horizon are events of the same loop, so segments never
// straddle the measurement window's edges. Overdamped branch:
// dx = -b_s(x) dt + sqrt(2 D) dW. Kinetic branch: Langevin with force F_s(x),
// friction rates.gamma, noise as in simulate_langevin.

inline VelocityEstimate simulate_two_state_switching(const SpaceField& b1, const SpaceField& b2,
                                                     const TwoStateRates& rates, bool kinetic,
                                                     const SdeConfig& cfg,
                                                     McDiagnostics* diag = nullptr) {
    cfg.validate();
    rates.validate();
    if (std::abs(b1.L() - b2.L()) > 1e-12 * b1.L())
        throw std::invalid_argument("simulate_two_state_switching: periods differ");
    const SpaceTable t1(b1), t2(b2);
    const double dt = cfg.dt;
    const double amp = kinetic ? ((cfg.noise == NoiseConvention::kramers) ? 1.0 : std::sqrt(2.0))
                               : std::sqrt(2.0 * rates.D);
    const double gamma = rates.gamma;
    const double p1 = rates.nu2 / (rates.nu1 + rates.nu2);   // stationary weight of state 1
    const double window = cfg.horizon - cfg.burn_in;

    std::vector<double> slots(std::size_t(cfg.n_paths), 0.0);
    std::vector<double> occ(std::size_t(cfg.n_paths), 0.0);
    const rng::ZigguratNormal& zig = rng::ziggurat();

    const double sqdt = std::sqrt(dt);
    detail::run_paths(cfg.n_paths, cfg.threads, [&](long i) {
        rng::Xoshiro256pp g(cfg.seed, std::uint64_t(i) + 1);
        double x = 0.0, v = 0.0, t = 0.0, xmark = 0.0, time1 = 0.0;
        int s = (g.uniform() < p1) ? 0 : 1;
        bool marked = cfg.burn_in <= 0.0;
        double next_switch = g.exponential(s == 0 ? rates.nu1 : rates.nu2);
        while (t < cfg.horizon) {
            double stop = std::min(next_switch, cfg.horizon);
            if (!marked && cfg.burn_in < stop) stop = cfg.burn_in;
            const SpaceTable& tb = (s == 0) ? t1 : t2;
            // Advance to the stop time in dt chunks plus one remainder chunk.
            double remain = stop - t;
            while (remain > 0.0) {
                const bool full = remain >= dt;
                const double h = full ? dt : remain;
                const double sq = full ? sqdt : std::sqrt(h);
                if (kinetic) {
                    const double f = tb(x);
                    x += v * h;
                    v += (-gamma * v + f) * h + amp * sq * zig.sample(g);
                } else {
                    x += -tb(x) * h + amp * sq * zig.sample(g);
                }
                remain -= h;
            }
            if (marked && s == 0) time1 += stop - t;
            t = stop;
            if (!marked && t >= cfg.burn_in) {
                xmark = x;
                marked = true;
            }
            if (t >= cfg.horizon) break;
            if (t >= next_switch) {
                s = 1 - s;
                next_switch = t + g.exponential(s == 0 ? rates.nu1 : rates.nu2);
            }
        }
        slots[std::size_t(i)] = (x - xmark) / window;
        occ[std::size_t(i)] = time1 / window;
    });

    const detail::MeanErr m = detail::reduce_mean(slots);
    if (diag) {
        const detail::MeanErr mo = detail::reduce_mean(occ);
        diag->occupancy1 = mo.mean;
        diag->occupancy1_std_error = mo.std_error;
        diag->per_path = slots;
    }
    VelocityEstimate v;
    v.value = m.mean;
    v.std_error = m.std_error;
    v.n_effective = double(cfg.n_paths);
    v.method = kinetic ? "mc-two-state-kinetic-em" : "mc-two-state-em";
    v.note = kinetic ? "exact switching clocks; Langevin branch"
                     : "exact switching clocks; noise sqrt(2 D)";
    return v;
}

}
