// Batch front end: config ingestion, experiment orchestration, result
// persistence and plot-data emission for the four transport models.
//
// Subcommands
//   velocity   run the configured method(s) once, emit one record per method
//   sweep      repeat a run over a parameter list, fit scaling when eps
//   zero-find  locate a vanishing velocity on the segment between two drifts
//   selftest   run the built-in acceptance suite
//
// Records go to stdout as JSON lines and to --out as records.jsonl plus an
// RFC-4180 CSV; sweeps also write (x, value, std_error) plot data. All files
// are written atomically.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/program_options.hpp>
#include <nlohmann/json.hpp>

#include <ratchet/acceptance.hpp>
#include <ratchet/config.hpp>
#include <ratchet/drift.hpp>
#include <ratchet/kinetic.hpp>
#include <ratchet/kinetic_two_state.hpp>
#include <ratchet/montecarlo.hpp>
#include <ratchet/overdamped.hpp>
#include <ratchet/record.hpp>
#include <ratchet/twostate.hpp>
#include <ratchet/version.hpp>

namespace po = boost::program_options;
using nlohmann::json;
using namespace ratchet;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Schema helpers. Unknown keys are rejected, never ignored; every message
// names the offending key and its context.

void reject_unknown(const json& j, const std::string& where,
                    const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) {
            std::string msg = "unknown key \"" + key + "\" in " + where + "; allowed keys:";
            for (const auto& k : allowed) msg += " " + k;
            throw ConfigError(msg);
        }
}

double get_num(const json& j, const std::string& where, const std::string& key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number()) throw ConfigError("key \"" + key + "\" in " + where + ": expected a number");
    return j.at(key).get<double>();
}

long get_int(const json& j, const std::string& where, const std::string& key, long dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number_integer())
        throw ConfigError("key \"" + key + "\" in " + where + ": expected an integer");
    return j.at(key).get<long>();
}

std::string get_str(const json& j, const std::string& where, const std::string& key,
                    const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_string()) throw ConfigError("key \"" + key + "\" in " + where + ": expected a string");
    return j.at(key).get<std::string>();
}

SolverConfig parse_solver(const json& j) {
    SolverConfig cfg;
    if (j.is_null()) return cfg;
    reject_unknown(j, "solver",
                   {"pmax", "qmax", "nmax", "oversample", "residual_tol", "positivity_tol", "tail_tol"});
    cfg.pmax = int(get_int(j, "solver", "pmax", cfg.pmax));
    cfg.qmax = int(get_int(j, "solver", "qmax", cfg.qmax));
    cfg.nmax = int(get_int(j, "solver", "nmax", cfg.nmax));
    cfg.oversample = int(get_int(j, "solver", "oversample", cfg.oversample));
    cfg.residual_tol = get_num(j, "solver", "residual_tol", cfg.residual_tol);
    cfg.positivity_tol = get_num(j, "solver", "positivity_tol", cfg.positivity_tol);
    cfg.tail_tol = get_num(j, "solver", "tail_tol", cfg.tail_tol);
    cfg.validate();
    return cfg;
}

SdeConfig parse_sde(const json& j) {
    SdeConfig cfg;
    if (j.is_null()) return cfg;
    reject_unknown(j, "sde", {"dt", "horizon", "n_paths", "seed", "burn_in", "threads", "noise"});
    cfg.dt = get_num(j, "sde", "dt", cfg.dt);
    cfg.horizon = get_num(j, "sde", "horizon", cfg.horizon);
    cfg.n_paths = get_int(j, "sde", "n_paths", cfg.n_paths);
    cfg.seed = std::uint64_t(get_int(j, "sde", "seed", long(cfg.seed)));
    cfg.burn_in = get_num(j, "sde", "burn_in", cfg.burn_in);
    cfg.threads = int(get_int(j, "sde", "threads", cfg.threads));
    const std::string noise = get_str(j, "sde", "noise", "kramers");
    if (noise == "kramers")
        cfg.noise = NoiseConvention::kramers;
    else if (noise == "langevin_sqrt2d")
        cfg.noise = NoiseConvention::langevin_sqrt2d;
    else
        throw ConfigError("key \"noise\" in sde: expected \"kramers\" or \"langevin_sqrt2d\"");
    cfg.validate();
    return cfg;
}

struct OutputSpec {
    std::string records = "records.jsonl";
    std::string csv = "results.csv";
    std::string plot = "plot.csv";
    std::string summary = "summary.json";
    std::string composite = "composite_drift.json";
};

OutputSpec parse_output(const json& j) {
    OutputSpec out;
    if (j.is_null()) return out;
    reject_unknown(j, "output", {"records", "csv", "plot", "summary", "composite"});
    out.records = get_str(j, "output", "records", out.records);
    out.csv = get_str(j, "output", "csv", out.csv);
    out.plot = get_str(j, "output", "plot", out.plot);
    out.summary = get_str(j, "output", "summary", out.summary);
    out.composite = get_str(j, "output", "composite", out.composite);
    return out;
}

// A space-time drift built from a preset name or an explicit mode list
// [[p, q, re, im], ...]; eps scales either form.
struct TorusDriftSpec {
    SpaceTimeDrift drift;
    std::string preset;  // empty for mode lists
    double eps = 1.0;
};

TorusDriftSpec parse_torus_drift(const json& j, const std::string& where, double defT, double defL) {
    if (j.is_null()) throw ConfigError(where + ": required for this model");
    reject_unknown(j, where, {"preset", "eps", "T", "L", "P", "Q", "modes"});
    TorusDriftSpec out{SpaceTimeDrift(TorusField(1.0, 1.0, 1, 1, true), true), "", 1.0};
    const double T = get_num(j, where, "T", defT);
    const double L = get_num(j, where, "L", defL);
    if (j.contains("preset")) {
        out.preset = get_str(j, where, "preset", "");
        out.eps = get_num(j, where, "eps", 0.05);
        const int P = int(get_int(j, where, "P", 2));
        const int Q = int(get_int(j, where, "Q", 2));
        if (out.preset == "traveling_wave")
            out.drift = traveling_wave(out.eps, T, L, P, Q);
        else if (out.preset == "standing_wave")
            out.drift = standing_wave(out.eps, T, L, P, Q);
        else
            throw ConfigError(where + ": preset \"" + out.preset +
                              "\" is not a space-time drift (available: traveling_wave, standing_wave)");
        return out;
    }
    if (!j.contains("modes") || !j.at("modes").is_array())
        throw ConfigError(where + ": needs either \"preset\" or a \"modes\" array [[p,q,re,im],...]");
    out.eps = get_num(j, where, "eps", 1.0);
    int maxp = 0, maxq = 0;
    for (const auto& m : j.at("modes")) {
        if (!m.is_array() || m.size() != 4)
            throw ConfigError(where + ": each mode must be [p, q, re, im]");
        maxp = std::max(maxp, std::abs(int(m[0].get<double>())));
        maxq = std::max(maxq, std::abs(int(m[1].get<double>())));
    }
    const int P = int(get_int(j, where, "P", maxp));
    const int Q = int(get_int(j, where, "Q", maxq));
    TorusField f(T, L, std::max(P, 1), std::max(Q, 1), true);
    for (const auto& m : j.at("modes"))
        f.set(int(m[0].get<double>()), int(m[1].get<double>()),
              out.eps * cplx(m[2].get<double>(), m[3].get<double>()));
    out.drift = SpaceTimeDrift(std::move(f), true);
    return out;
}

// A pair of static drifts or forces for the two-state models, from the
// cos2x_cosx preset or explicit per-state mode lists [[q, re, im], ...].
struct PairDriftSpec {
    SpaceField b1, b2;
    std::string preset;
    double eps = 1.0;
};

PairDriftSpec parse_pair_drift(const json& j, const std::string& where) {
    if (j.is_null()) throw ConfigError(where + ": required for this model");
    reject_unknown(j, where, {"preset", "eps", "L", "Q", "modes1", "modes2"});
    PairDriftSpec out{SpaceField(1.0, 1, true), SpaceField(1.0, 1, true), "", 1.0};
    if (j.contains("preset")) {
        out.preset = get_str(j, where, "preset", "");
        if (out.preset != "cos2x_cosx")
            throw ConfigError(where + ": preset \"" + out.preset +
                              "\" is not a two-state pair (available: cos2x_cosx)");
        out.eps = get_num(j, where, "eps", 0.1);
        const double L = get_num(j, where, "L", 2.0 * M_PI);
        const int Q = int(get_int(j, where, "Q", 4));
        const SpaceDriftPair pr = cos2x_cosx(out.eps, L, Q);
        out.b1 = pr.b1;
        out.b2 = pr.b2;
        return out;
    }
    if (!j.contains("modes1") || !j.contains("modes2"))
        throw ConfigError(where + ": needs either \"preset\" or \"modes1\" and \"modes2\" arrays");
    out.eps = get_num(j, where, "eps", 1.0);
    const double L = get_num(j, where, "L", 2.0 * M_PI);
    int maxq = 1;
    for (const char* key : {"modes1", "modes2"})
        for (const auto& m : j.at(key)) {
            if (!m.is_array() || m.size() != 3)
                throw ConfigError(where + ": each mode must be [q, re, im]");
            maxq = std::max(maxq, std::abs(int(m[0].get<double>())));
        }
    const int Q = int(get_int(j, where, "Q", maxq));
    SpaceField b1(L, Q, true), b2(L, Q, true);
    for (const auto& m : j.at("modes1"))
        b1.set(int(m[0].get<double>()), out.eps * cplx(m[1].get<double>(), m[2].get<double>()));
    for (const auto& m : j.at("modes2"))
        b2.set(int(m[0].get<double>()), out.eps * cplx(m[1].get<double>(), m[2].get<double>()));
    out.b1 = std::move(b1);
    out.b2 = std::move(b2);
    return out;
}

struct Experiment {
    std::string model;   // overdamped | two-state | kramers | kramers-two-state
    std::string method;  // spectral | perturbative | montecarlo | all
    double gamma = 1.0;
    TwoStateRates rates;
    SolverConfig solver;
    SdeConfig sde;
    OutputSpec output;
    std::optional<TorusDriftSpec> torus;    // overdamped, kramers, zero-find endpoint 1
    std::optional<TorusDriftSpec> torus2;   // zero-find endpoint 2
    std::optional<PairDriftSpec> pair;      // two-state models
    std::string sweep_parameter;
    std::vector<double> sweep_values;
};

const std::set<std::string> kModels = {"overdamped", "two-state", "kramers", "kramers-two-state"};
const std::set<std::string> kMethods = {"spectral", "perturbative", "montecarlo", "all"};

Experiment parse_experiment(const json& j) {
    reject_unknown(j, "config",
                   {"model", "method", "T", "L", "gamma", "D", "nu1", "nu2", "drift", "drift2",
                    "solver", "sde", "sweep", "output"});
    Experiment e;
    e.model = get_str(j, "config", "model", "overdamped");
    if (!kModels.count(e.model))
        throw ConfigError("key \"model\": \"" + e.model +
                          "\" is not a model (overdamped, two-state, kramers, kramers-two-state)");
    e.method = get_str(j, "config", "method", "spectral");
    if (!kMethods.count(e.method))
        throw ConfigError("key \"method\": \"" + e.method +
                          "\" is not a method (spectral, perturbative, montecarlo, all)");
    const double defT = get_num(j, "config", "T", 1.0);
    const double defL = get_num(j, "config", "L", 1.0);
    e.gamma = get_num(j, "config", "gamma", 1.0);
    e.rates.nu1 = get_num(j, "config", "nu1", 1.0);
    e.rates.nu2 = get_num(j, "config", "nu2", 2.0);
    e.rates.D = get_num(j, "config", "D", 1.0);
    e.rates.gamma = e.gamma;
    e.solver = parse_solver(j.contains("solver") ? j.at("solver") : json());
    e.sde = parse_sde(j.contains("sde") ? j.at("sde") : json());
    e.output = parse_output(j.contains("output") ? j.at("output") : json());

    if (e.model == "overdamped" || e.model == "kramers") {
        e.torus = parse_torus_drift(j.contains("drift") ? j.at("drift") : json(), "drift", defT, defL);
        if (j.contains("drift2"))
            e.torus2 = parse_torus_drift(j.at("drift2"), "drift2", defT, defL);
    } else {
        e.pair = parse_pair_drift(j.contains("drift") ? j.at("drift") : json(), "drift");
        if (j.contains("drift2")) throw ConfigError("key \"drift2\": only space-time drift models take it");
        e.rates.validate();
    }

    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        reject_unknown(s, "sweep", {"parameter", "values"});
        e.sweep_parameter = get_str(s, "sweep", "parameter", "");
        if (!s.contains("values") || !s.at("values").is_array() || s.at("values").empty())
            throw ConfigError("key \"values\" in sweep: expected a non-empty array of numbers");
        for (const auto& v : s.at("values")) {
            if (!v.is_number()) throw ConfigError("key \"values\" in sweep: expected a non-empty array of numbers");
            e.sweep_values.push_back(v.get<double>());
        }
        static const std::set<std::string> kSweepable = {"eps", "nu1", "nu2", "D", "gamma", "T", "L"};
        if (!kSweepable.count(e.sweep_parameter)) {
            std::string msg = "key \"parameter\" in sweep: \"" + e.sweep_parameter +
                              "\" is not sweepable; choose one of:";
            for (const auto& k : kSweepable) msg += " " + k;
            throw ConfigError(msg);
        }
    }
    return e;
}

// Parameter echo for the record, restricted to what the model consumed.
std::map<std::string, double> echo_parameters(const Experiment& e) {
    std::map<std::string, double> p;
    p["threads"] = double(e.sde.threads);
    if (e.torus) {
        p["T"] = e.torus->drift.field.T();
        p["L"] = e.torus->drift.field.L();
        if (!e.torus->preset.empty()) p["eps"] = e.torus->eps;
    }
    if (e.pair) {
        p["L"] = e.pair->b1.L();
        if (!e.pair->preset.empty()) p["eps"] = e.pair->eps;
        p["nu1"] = e.rates.nu1;
        p["nu2"] = e.rates.nu2;
    }
    if (e.model == "two-state") p["D"] = e.rates.D;
    if (e.model == "kramers" || e.model == "kramers-two-state") p["gamma"] = e.gamma;
    if (e.method == "montecarlo" || e.method == "all") {
        p["dt"] = e.sde.dt;
        p["horizon"] = e.sde.horizon;
        p["n_paths"] = double(e.sde.n_paths);
        p["burn_in"] = e.sde.burn_in;
    }
    return p;
}

// Amplitude proxy used as the systematic error scale of a truncated series:
// twice the root energy of the drift coefficients, capped at one.
double amplitude_proxy(const Experiment& e) {
    double energy = 0.0;
    if (e.torus) {
        const TorusField& f = e.torus->drift.field;
        for (int p = -f.pmax(); p <= f.pmax(); ++p)
            for (int q = -f.qmax(); q <= f.qmax(); ++q) energy += std::norm(f.coeff(p, q));
    }
    if (e.pair) {
        for (int q = -e.pair->b1.qmax(); q <= e.pair->b1.qmax(); ++q)
            energy += std::norm(e.pair->b1.coeff(q)) + std::norm(e.pair->b2.coeff(q));
    }
    return std::min(1.0, 2.0 * std::sqrt(energy));
}

ResultRecord run_spectral(const Experiment& e) {
    const auto t0 = std::chrono::steady_clock::now();
    VelocityEstimate est;
    double residual = 0.0, tail = 0.0;
    if (e.model == "overdamped") {
        const StationaryDensity w = solve_stationary(e.torus->drift, e.solver);
        est = velocity(e.torus->drift, w);
        residual = w.residual;
    } else if (e.model == "two-state") {
        const TwoStateDensity w = solve_stationary_two_state(e.pair->b1, e.pair->b2, e.rates, e.solver);
        est = velocity_two_state(e.pair->b1, e.pair->b2, w);
        residual = w.residual;
    } else if (e.model == "kramers") {
        const KineticDensity f = solve_stationary_kramers(e.torus->drift, e.gamma, e.solver);
        est = velocity_kramers(e.torus->drift, f);
        residual = f.residual;
        tail = f.hermite_tail;
    } else {
        const KineticTwoStateDensity f =
            solve_stationary_kramers_two_state(e.pair->b1, e.pair->b2, e.rates, e.solver);
        est = velocity_kramers_two_state(e.pair->b1, e.pair->b2, f);
        residual = f.residual;
        tail = f.hermite_tail;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ResultRecord r = make_record(e.model, est, echo_parameters(e), wall, 0);
    r.residual = residual;
    r.tail = tail;
    return r;
}

ResultRecord run_perturbative(const Experiment& e) {
    const auto t0 = std::chrono::steady_clock::now();
    VelocityEstimate est;
    double tail = 0.0;
    if (e.model == "overdamped") {
        est.value = second_variation(e.torus->drift);
        est.method = "perturbative-quadratic";
        est.note = "leading order of the amplitude expansion";
    } else if (e.model == "two-state") {
        double series = 0.0;
        for (int k = 1; k <= 3; ++k) series += perturbation_order(e.pair->b1, e.pair->b2, e.rates, k, e.solver);
        est.value = -series;  // transport orientation of the stationary solver
        est.method = "perturbative-cubic";
        est.note = "orders one to three; odd leading term";
        if (e.pair->preset == "cos2x_cosx") {
            const double closed = third_variation_closed_form(e.rates.nu1, e.rates.nu2);
            const double predicted = -closed * std::pow(e.pair->eps, 3);
            std::ostringstream n;
            n.precision(6);
            n << est.note << "; closed-form cubic coefficient " << closed << " predicts " << predicted;
            est.note = n.str();
        }
    } else if (e.model == "kramers") {
        std::string warning;
        est.value = kramers_second_order(e.torus->drift, e.gamma, &warning);
        est.method = "perturbative-quadratic";
        est.note = warning.empty() ? "mode sum over the response kernel"
                                   : "mode sum over the response kernel; " + warning;
    } else {
        const SecondOrderSeries s2 =
            velocity_series_I2(e.pair->b1, e.pair->b2, e.rates.nu1, e.rates.nu2, e.solver);
        const ThirdOrderSeries s3 =
            velocity_series_I3(e.pair->b1, e.pair->b2, e.rates.nu1, e.rates.nu2, e.solver);
        est.value = s2.value + s3.value;
        est.method = "perturbative-cubic";
        est.note = "second order vanishes identically; cubic mode sum";
        tail = s3.tail_estimate;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ResultRecord r = make_record(e.model, est, echo_parameters(e), wall, 0);
    r.tail = tail;
    return r;
}

ResultRecord run_montecarlo(const Experiment& e) {
    const auto t0 = std::chrono::steady_clock::now();
    VelocityEstimate est;
    if (e.model == "overdamped")
        est = simulate_overdamped(e.torus->drift, e.sde);
    else if (e.model == "two-state")
        est = simulate_two_state_switching(e.pair->b1, e.pair->b2, e.rates, false, e.sde);
    else if (e.model == "kramers")
        est = simulate_langevin(e.torus->drift, e.gamma, e.sde);
    else
        est = simulate_two_state_switching(e.pair->b1, e.pair->b2, e.rates, true, e.sde);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return make_record(e.model, est, echo_parameters(e), wall, e.sde.seed);
}

std::vector<ResultRecord> run_methods(const Experiment& e) {
    std::vector<ResultRecord> records;
    if (e.method == "spectral" || e.method == "all") records.push_back(run_spectral(e));
    if (e.method == "perturbative" || e.method == "all") records.push_back(run_perturbative(e));
    if (e.method == "montecarlo" || e.method == "all") records.push_back(run_montecarlo(e));
    return records;
}

// Per-method uncertainty entering the cross-validation verdicts: statistical
// error for the sampler, solver residual for the spectral route, and the
// drift amplitude as the relative size of the first dropped series order.
double method_sigma(const Experiment& e, const ResultRecord& r) {
    if (r.method.rfind("mc-", 0) == 0) return r.std_error;
    if (r.method.rfind("perturbative", 0) == 0) return std::abs(r.value) * amplitude_proxy(e);
    return std::max(r.residual * std::abs(r.value), 1e-12);
}

json cross_validate(const Experiment& e, const std::vector<ResultRecord>& records, std::ostream& log) {
    json block = json::array();
    bool all_agree = true;
    log << "cross-validation (3 sigma):\n";
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t k = i + 1; k < records.size(); ++k) {
            const double diff = std::abs(records[i].value - records[k].value);
            const double sigma = std::hypot(method_sigma(e, records[i]), method_sigma(e, records[k]));
            const bool agree = diff <= 3.0 * sigma + 1e-12;
            all_agree = all_agree && agree;
            block.push_back({{"a", records[i].method},
                             {"b", records[k].method},
                             {"difference", diff},
                             {"sigma", sigma},
                             {"agree", agree}});
            log << "  " << records[i].method << " vs " << records[k].method << ": diff " << diff
                << ", sigma " << sigma << ", " << (agree ? "agree" : "DISAGREE") << "\n";
        }
    log << (all_agree ? "all pairs agree\n" : "cross-validation FAILED\n");
    return json{{"pairs", block}, {"all_agree", all_agree}};
}

void emit_records(const std::filesystem::path& outdir, const OutputSpec& spec,
                  const std::vector<ResultRecord>& records) {
    for (const auto& r : records) std::cout << to_json_line(r) << "\n";
    write_records_jsonl((outdir / spec.records).string(), records);
    write_records_csv((outdir / spec.csv).string(), records);
}

int cmd_velocity(const Experiment& e, const std::filesystem::path& outdir) {
    const std::vector<ResultRecord> records = run_methods(e);
    emit_records(outdir, e.output, records);
    json summary{{"model", e.model}, {"method", e.method}};
    bool ok = true;
    if (records.size() > 1) {
        const json cv = cross_validate(e, records, std::cout);
        summary["cross_validation"] = cv;
        ok = cv.at("all_agree").get<bool>();
    }
    detail::write_file_atomic((outdir / e.output.summary).string(), summary.dump(2) + "\n");
    return ok ? 0 : 1;
}

// One sweep point: the base config with the swept parameter substituted.
json patch_config(json base, const std::string& parameter, double v) {
    if (parameter == "eps") {
        if (!base.contains("drift")) throw ConfigError("sweep over eps needs a drift spec");
        base["drift"]["eps"] = v;
    } else if (parameter == "T" || parameter == "L") {
        if (base.contains("drift")) base["drift"][parameter] = v;
        base[parameter] = v;
    } else {
        base[parameter] = v;
    }
    if (base.contains("sweep")) base.erase("sweep");
    return base;
}

int cmd_sweep(const Experiment& base, const json& base_json, const std::filesystem::path& outdir,
              int worker_threads) {
    if (base.sweep_parameter.empty())
        throw ConfigError("sweep: config needs a \"sweep\" block with \"parameter\" and \"values\"");
    const auto& values = base.sweep_values;
    std::vector<std::vector<ResultRecord>> per_value(values.size());

    const int workers = std::max(1, std::min<int>(worker_threads, int(values.size())));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto body = [&]() {
        for (std::size_t i = next.fetch_add(1); i < values.size(); i = next.fetch_add(1)) {
            try {
                Experiment e = parse_experiment(patch_config(base_json, base.sweep_parameter, values[i]));
                if (workers > 1) e.sde.threads = 1;  // runs are already parallel across values
                per_value[i] = run_methods(e);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<ResultRecord> records;
    std::vector<double> x, y, yerr;
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (auto& r : per_value[i]) {
            r.parameters[base.sweep_parameter] = values[i];
            records.push_back(std::move(r));
        }
        // Plot series follows the first configured method at each point.
        if (!per_value[i].empty()) {
            x.push_back(values[i]);
            y.push_back(records[records.size() - per_value[i].size()].value);
            yerr.push_back(records[records.size() - per_value[i].size()].std_error);
        }
    }
    emit_records(outdir, base.output, records);
    write_xy_csv((outdir / base.output.plot).string(), base.sweep_parameter, x, y, yerr);

    json summary{{"model", base.model}, {"method", base.method},
                 {"parameter", base.sweep_parameter}, {"values", values}};
    if (base.sweep_parameter == "eps" && x.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!(x[i] > 0.0) || y[i] == 0.0) continue;
            const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++n;
        }
        if (n >= 2) {
            const double exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            summary["exponent"] = exponent;
            std::cout << "fitted power-law exponent: " << exponent << "\n";
        }
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (y[i] != 0.0 && y[i + 1] != 0.0 && std::signbit(y[i]) != std::signbit(y[i + 1])) {
            summary["sign_change_bracket"] = {x[i], x[i + 1]};
            std::cout << "sign change bracketed in [" << x[i] << ", " << x[i + 1] << "]\n";
            break;
        }
    detail::write_file_atomic((outdir / base.output.summary).string(), summary.dump(2) + "\n");
    return 0;
}

json torus_drift_to_json(const SpaceTimeDrift& d) {
    const TorusField& f = d.field;
    json modes = json::array();
    for (int p = 0; p <= f.pmax(); ++p)
        for (int q = -f.qmax(); q <= f.qmax(); ++q) {
            if (p == 0 && q <= 0) continue;
            const cplx c = f.coeff(p, q);
            if (std::norm(c) == 0.0) continue;
            modes.push_back({p, q, c.real(), c.imag()});
        }
    return json{{"T", f.T()}, {"L", f.L()}, {"P", f.pmax()}, {"Q", f.qmax()}, {"modes", modes}};
}

int cmd_zero_find(const Experiment& e, const std::filesystem::path& outdir) {
    if (e.model != "overdamped")
        throw ConfigError("zero-find: only the overdamped model supports it");
    if (!e.torus2) throw ConfigError("zero-find: config needs both \"drift\" and \"drift2\"");
    const SpaceTimeDrift& b1 = e.torus->drift;
    const SpaceTimeDrift& b2 = e.torus2->drift;

    const double i1 = velocity(b1, solve_stationary(b1, e.solver)).value;
    const double i2 = velocity(b2, solve_stationary(b2, e.solver)).value;
    if (std::signbit(i1) == std::signbit(i2) || i1 == 0.0 || i2 == 0.0) {
        std::ostringstream msg;
        msg << "zero-find: endpoint velocities do not change sign (I(drift) = " << i1
            << ", I(drift2) = " << i2 << ")";
        throw std::runtime_error(msg.str());
    }

    // The bracketing routine wants the positive endpoint first; report alpha
    // in the original drift -> drift2 parameterization either way.
    const auto t0 = std::chrono::steady_clock::now();
    const bool swapped = i1 < 0.0;
    const MixedZero mz = swapped ? find_mixed_zero(b2, b1, e.solver) : find_mixed_zero(b1, b2, e.solver);
    const double alpha = swapped ? 1.0 - mz.alpha : mz.alpha;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    VelocityEstimate est;
    est.value = mz.value;
    est.method = "mixed-zero";
    est.note = "velocity at the sign change of the blended drift";
    std::map<std::string, double> params = echo_parameters(e);
    params["alpha"] = alpha;
    params["endpoint_velocity_1"] = i1;
    params["endpoint_velocity_2"] = i2;
    ResultRecord r = make_record(e.model, est, params, wall, 0);
    emit_records(outdir, e.output, {r});

    detail::write_file_atomic((outdir / e.output.composite).string(),
                              torus_drift_to_json(mz.composite).dump(2) + "\n");
    json summary{{"alpha", alpha},
                 {"velocity_at_alpha", mz.value},
                 {"endpoint_velocities", {i1, i2}},
                 {"composite_drift", e.output.composite}};
    detail::write_file_atomic((outdir / e.output.summary).string(), summary.dump(2) + "\n");
    std::cout << "zero at alpha = " << alpha << ", velocity " << mz.value << "\n";
    return 0;
}

void print_usage(std::ostream& out, const po::options_description& visible) {
    out << "usage: ratchet <velocity|sweep|zero-find|selftest> [options]\n"
        << "\n"
        << "Computes the asymptotic mean velocity of periodically driven diffusions\n"
        << "(overdamped, two-state, kramers, kramers-two-state) by spectral, series\n"
        << "and Monte Carlo routes. Config grammar is documented in the README.\n"
        << "\n"
        << visible;
}

}  // namespace

int main(int argc, char** argv) {
    po::options_description visible("options");
    visible.add_options()
        ("help,h", "print usage")
        ("config", po::value<std::string>(), "experiment config file (JSON)")
        ("out", po::value<std::string>()->default_value("."), "output directory")
        ("seed", po::value<std::uint64_t>(), "Monte Carlo seed override")
        ("threads", po::value<int>(), "thread count (overrides RATCHET_THREADS)")
        ("preset", po::value<std::string>(), "drift preset override");
    po::options_description hidden;
    hidden.add_options()("command", po::value<std::string>(), "subcommand");
    po::options_description all;
    all.add(visible).add(hidden);
    po::positional_options_description pos;
    pos.add("command", 1);

    try {
        po::variables_map vm;
        po::store(po::command_line_parser(argc, argv).options(all).positional(pos).run(), vm);
        po::notify(vm);

        if (vm.count("help") || !vm.count("command")) {
            print_usage(std::cout, visible);
            return vm.count("help") ? 0 : 2;
        }
        const std::string command = vm["command"].as<std::string>();
        if (command == "selftest") {
            const auto results = acceptance::run_all(std::cout);
            return acceptance::failure_count(results);
        }
        if (command != "velocity" && command != "sweep" && command != "zero-find") {
            std::cerr << "error: unknown subcommand \"" << command << "\"\n";
            print_usage(std::cerr, visible);
            return 2;
        }

        json cfg = json::object();
        if (vm.count("config")) {
            std::ifstream in(vm["config"].as<std::string>());
            if (!in) throw ConfigError("cannot open config file: " + vm["config"].as<std::string>());
            try {
                in >> cfg;
            } catch (const json::parse_error& pe) {
                throw ConfigError(std::string("config is not valid JSON: ") + pe.what());
            }
            if (!cfg.is_object()) throw ConfigError("config root must be a JSON object");
        }
        if (vm.count("preset")) {
            const std::string preset = vm["preset"].as<std::string>();
            if (!cfg.contains("drift")) cfg["drift"] = json::object();
            cfg["drift"]["preset"] = preset;
            for (const char* k : {"modes", "modes1", "modes2"})
                if (cfg["drift"].contains(k)) cfg["drift"].erase(k);
            if (preset == "cos2x_cosx" && !cfg.contains("model")) cfg["model"] = "two-state";
        }
        if (!vm.count("config") && !vm.count("preset"))
            throw ConfigError("no drift specified: pass --config or --preset");
        if (vm.count("seed")) {
            if (!cfg.contains("sde")) cfg["sde"] = json::object();
            cfg["sde"]["seed"] = vm["seed"].as<std::uint64_t>();
        }
        int threads = 0;
        if (vm.count("threads")) {
            threads = vm["threads"].as<int>();
        } else if (const char* env = std::getenv("RATCHET_THREADS")) {
            threads = std::atoi(env);
            if (threads < 1) throw ConfigError("RATCHET_THREADS must be a positive integer");
        }
        if (threads > 0) {
            if (!cfg.contains("sde")) cfg["sde"] = json::object();
            cfg["sde"]["threads"] = threads;
        }

        const Experiment e = parse_experiment(cfg);
        const std::filesystem::path outdir(vm["out"].as<std::string>());
        std::filesystem::create_directories(outdir);

        if (command == "velocity") return cmd_velocity(e, outdir);
        if (command == "sweep") return cmd_sweep(e, cfg, outdir, e.sde.threads);
        return cmd_zero_find(e, outdir);
    } catch (const ConfigError& ce) {
        std::cerr << "config error: " << ce.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
}
