#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include <ratchet/record.hpp>

using nlohmann::json;
using namespace ratchet;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("ratchet_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void dump_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    out << j.dump(2);
    REQUIRE(out.good());
}

struct CliRun {
    int status = -1;
    std::string out, err;
};

CliRun run_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
    const fs::path so = dir / "stdout.txt", se = dir / "stderr.txt";
    std::string cmd = env.empty() ? std::string() : env + " ";
    cmd += "\"" RATCHET_CLI_PATH "\" " + args + " > \"" + so.string() + "\" 2> \"" + se.string() + "\"";
    const int raw = std::system(cmd.c_str());
    CliRun r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("result records round trip through json") {
    ResultRecord r;
    r.model = "overdamped";
    r.method = "spectral-stationary";
    r.parameters = {{"T", 1.0}, {"L", 1.0}, {"eps", 0.05}};
    r.value = -1.1421e-2;
    r.std_error = 3.2e-4;
    r.residual = 1e-14;
    r.tail = 2e-7;
    r.wall_seconds = 0.42;
    r.seed = 424242;
    r.note = "says \"quoted\", with a comma";
    const ResultRecord back = record_from_json(to_json(r));
    CHECK(back.model == r.model);
    CHECK(back.method == r.method);
    CHECK(back.parameters == r.parameters);
    CHECK(back.value == r.value);
    CHECK(back.std_error == r.std_error);
    CHECK(back.residual == r.residual);
    CHECK(back.tail == r.tail);
    CHECK(back.wall_seconds == r.wall_seconds);
    CHECK(back.seed == r.seed);
    CHECK(back.library_version == r.library_version);
    CHECK(back.note == r.note);
}

TEST_CASE("csv quoting follows rfc 4180") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("with,comma") == "\"with,comma\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("line\nbreak") == "\"line\nbreak\"");
    CHECK(csv_row({"a", "b,c"}) == "a,\"b,c\"\r\n");
}

TEST_CASE("record files are written atomically and read back") {
    const fs::path dir = fresh_dir("records");
    ResultRecord r;
    r.model = "two-state";
    r.method = "perturbative-cubic";
    r.parameters = {{"eps", 0.2}};
    r.value = 1.19e-5;
    const fs::path path = dir / "records.jsonl";
    write_records_jsonl(path.string(), {r, r});
    CHECK(!fs::exists(path.string() + ".tmp"));
    const auto back = read_records_jsonl(path.string());
    REQUIRE(back.size() == 2);
    CHECK(back[0].value == r.value);
    CHECK(back[1].method == r.method);

    write_records_csv((dir / "records.csv").string(), {r});
    const std::string csv = slurp(dir / "records.csv");
    CHECK(csv.rfind("model,method,value", 0) == 0);
    CHECK(csv.find("two-state") != std::string::npos);

    CHECK_THROWS_AS(write_xy_csv((dir / "p.csv").string(), "x", {1.0, 2.0}, {1.0}, {0.0}),
                    std::invalid_argument);
    write_xy_csv((dir / "p.csv").string(), "eps", {0.1, 0.2}, {1.0, 4.0}, {0.0, 0.0});
    CHECK(count_lines(slurp(dir / "p.csv")) == 3);
}

TEST_CASE("velocity subcommand emits a spectral record") {
    const fs::path dir = fresh_dir("velocity");
    dump_json(dir / "config.json",
              json{{"model", "overdamped"},
                   {"method", "spectral"},
                   {"drift", {{"preset", "traveling_wave"}, {"eps", 0.05}, {"T", 1.0}, {"L", 1.0},
                              {"P", 2}, {"Q", 2}}}});
    const CliRun r = run_cli("velocity --config \"" + (dir / "config.json").string() + "\" --out \"" +
                                 dir.string() + "\"",
                             dir);
    CAPTURE(r.err);
    REQUIRE(r.status == 0);
    const auto records = read_records_jsonl((dir / "records.jsonl").string());
    REQUIRE(records.size() == 1);
    CHECK(records[0].model == "overdamped");
    CHECK(records[0].method == "spectral-stationary");
    CHECK(records[0].value < 0.0);
    CHECK(records[0].value == Catch::Approx(-0.5 / (1.0 + M_PI * M_PI) * 0.0025).epsilon(0.01));
    CHECK(records[0].parameters.at("eps") == 0.05);
    const std::string csv = slurp(dir / "results.csv");
    CHECK(csv.rfind("model,method,value", 0) == 0);
    // stdout carries the same record as a structured log line
    CHECK(json::parse(r.out).at("method") == "spectral-stationary");

    // a re-run reproduces the baseline record exactly (deterministic method)
    const fs::path dir2 = fresh_dir("velocity_again");
    const CliRun r2 = run_cli("velocity --config \"" + (dir / "config.json").string() + "\" --out \"" +
                                  dir2.string() + "\"",
                              dir2);
    REQUIRE(r2.status == 0);
    const auto again = read_records_jsonl((dir2 / "records.jsonl").string());
    REQUIRE(again.size() == 1);
    CHECK(again[0].value == records[0].value);
}

TEST_CASE("unknown config keys are rejected by name") {
    const fs::path dir = fresh_dir("badkey");
    dump_json(dir / "config.json",
              json{{"model", "overdamped"}, {"method", "spectral"},
                   {"drft", {{"preset", "traveling_wave"}}}});
    const CliRun r = run_cli("velocity --config \"" + (dir / "config.json").string() + "\"", dir);
    CHECK(r.status == 2);
    CHECK(r.err.find("drft") != std::string::npos);
    CHECK(r.err.find("config error") != std::string::npos);

    dump_json(dir / "config2.json",
              json{{"model", "overdamped"}, {"method", "montecarlo"},
                   {"drift", {{"preset", "traveling_wave"}, {"eps", 0.1}}},
                   {"sde", {{"horizonn", 50.0}}}});
    const CliRun r2 = run_cli("velocity --config \"" + (dir / "config2.json").string() + "\"", dir);
    CHECK(r2.status == 2);
    CHECK(r2.err.find("horizonn") != std::string::npos);
}

TEST_CASE("method all cross-validates the three routes") {
    const fs::path dir = fresh_dir("all");
    dump_json(dir / "config.json",
              json{{"model", "overdamped"},
                   {"method", "all"},
                   {"drift", {{"preset", "traveling_wave"}, {"eps", 0.5}, {"T", 1.0}, {"L", 1.0},
                              {"P", 2}, {"Q", 2}}},
                   {"sde", {{"dt", 8e-3}, {"horizon", 60.0}, {"burn_in", 10.0}, {"n_paths", 4000},
                            {"seed", 7}}}});
    const CliRun r = run_cli("velocity --config \"" + (dir / "config.json").string() + "\" --out \"" +
                                 dir.string() + "\"",
                             dir);
    CAPTURE(r.err);
    REQUIRE(r.status == 0);
    const auto records = read_records_jsonl((dir / "records.jsonl").string());
    REQUIRE(records.size() == 3);
    CHECK(records[0].method == "spectral-stationary");
    CHECK(records[1].method == "perturbative-quadratic");
    CHECK(records[2].method.rfind("mc-", 0) == 0);
    for (const auto& rec : records) CHECK(rec.value < 0.0);
    const json summary = json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("cross_validation").at("all_agree").get<bool>());
    CHECK(summary.at("cross_validation").at("pairs").size() == 3);
    CHECK(r.out.find("all pairs agree") != std::string::npos);
}

TEST_CASE("eps sweep fits the quadratic response exponent") {
    const fs::path dir = fresh_dir("sweep");
    dump_json(dir / "config.json",
              json{{"model", "overdamped"},
                   {"method", "spectral"},
                   {"drift", {{"preset", "traveling_wave"}, {"T", 1.0}, {"L", 1.0}, {"P", 2}, {"Q", 2}}},
                   {"sweep", {{"parameter", "eps"}, {"values", {0.05, 0.1, 0.2}}}}});
    const CliRun r = run_cli("sweep --config \"" + (dir / "config.json").string() + "\" --out \"" +
                                 dir.string() + "\" --threads 2",
                             dir);
    CAPTURE(r.err);
    REQUIRE(r.status == 0);
    const auto records = read_records_jsonl((dir / "records.jsonl").string());
    REQUIRE(records.size() == 3);
    CHECK(records[0].parameters.at("eps") == 0.05);
    CHECK(records[2].parameters.at("eps") == 0.2);
    const json summary = json::parse(slurp(dir / "summary.json"));
    const double exponent = summary.at("exponent").get<double>();
    CHECK(exponent == Catch::Approx(2.0).margin(0.1));
    const std::string plot = slurp(dir / "plot.csv");
    CHECK(plot.rfind("eps,value,std_error", 0) == 0);
    CHECK(count_lines(plot) == 4);
}

TEST_CASE("eps sweep of the two-state pair fits the cubic exponent") {
    const fs::path dir = fresh_dir("sweep3");
    dump_json(dir / "config.json",
              json{{"model", "two-state"},
                   {"method", "spectral"},
                   {"nu1", 1.0},
                   {"nu2", 2.0},
                   {"drift", {{"preset", "cos2x_cosx"}, {"Q", 4}}},
                   {"sweep", {{"parameter", "eps"}, {"values", {0.04, 0.08, 0.16}}}}});
    const CliRun r = run_cli("sweep --config \"" + (dir / "config.json").string() + "\" --out \"" +
                                 dir.string() + "\"",
                             dir);
    CAPTURE(r.err);
    REQUIRE(r.status == 0);
    const json summary = json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("exponent").get<double>() == Catch::Approx(3.0).margin(0.15));
}

TEST_CASE("rate sweep brackets the sign change of the cubic coefficient") {
    const fs::path dir = fresh_dir("nu2");
    dump_json(dir / "config.json",
              json{{"model", "two-state"},
                   {"method", "perturbative"},
                   {"nu1", 1.0},
                   {"drift", {{"preset", "cos2x_cosx"}, {"eps", 0.3}, {"Q", 4}}},
                   {"sweep", {{"parameter", "nu2"}, {"values", {0.6, 0.9, 1.1, 1.5}}}}});
    const CliRun r = run_cli("sweep --config \"" + (dir / "config.json").string() + "\" --out \"" +
                                 dir.string() + "\"",
                             dir);
    CAPTURE(r.err);
    REQUIRE(r.status == 0);
    const json summary = json::parse(slurp(dir / "summary.json"));
    REQUIRE(summary.contains("sign_change_bracket"));
    CHECK(summary.at("sign_change_bracket").at(0).get<double>() == 0.9);
    CHECK(summary.at("sign_change_bracket").at(1).get<double>() == 1.1);
    CHECK(r.out.find("sign change bracketed") != std::string::npos);
}

TEST_CASE("zero-find locates a vanishing blend and emits the composite drift") {
    const fs::path dir = fresh_dir("zero");
    // the wave and its space-reversed image transport in opposite directions
    dump_json(dir / "config.json",
              json{{"model", "overdamped"},
                   {"method", "spectral"},
                   {"drift", {{"T", 1.0}, {"L", 1.0}, {"modes", {{1, 1, 0.25, 0.0}}}}},
                   {"drift2", {{"T", 1.0}, {"L", 1.0}, {"modes", {{1, -1, 0.25, 0.0}}}}},
                   {"solver", {{"pmax", 5}, {"qmax", 6}}}});
    const CliRun r = run_cli("zero-find --config \"" + (dir / "config.json").string() + "\" --out \"" +
                                 dir.string() + "\"",
                             dir);
    CAPTURE(r.err);
    REQUIRE(r.status == 0);
    const json summary = json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("alpha").get<double>() == Catch::Approx(0.5).margin(0.02));
    CHECK(std::abs(summary.at("velocity_at_alpha").get<double>()) < 1e-6);
    const json composite = json::parse(slurp(dir / "composite_drift.json"));
    CHECK(composite.at("T") == 1.0);
    CHECK(composite.at("modes").size() >= 2);
    const auto records = read_records_jsonl((dir / "records.jsonl").string());
    REQUIRE(records.size() == 1);
    CHECK(records[0].method == "mixed-zero");
    CHECK(records[0].parameters.count("alpha") == 1);
}

TEST_CASE("zero-find refuses same-sign endpoints") {
    const fs::path dir = fresh_dir("zerosame");
    dump_json(dir / "config.json",
              json{{"model", "overdamped"},
                   {"method", "spectral"},
                   {"drift", {{"T", 1.0}, {"L", 1.0}, {"modes", {{1, 1, 0.25, 0.0}}}}},
                   {"drift2", {{"T", 1.0}, {"L", 1.0}, {"modes", {{1, 1, 0.1, 0.0}}}}},
                   {"solver", {{"pmax", 5}, {"qmax", 6}}}});
    const CliRun r = run_cli("zero-find --config \"" + (dir / "config.json").string() + "\" --out \"" +
                                 dir.string() + "\"",
                             dir);
    CHECK(r.status == 1);
    CHECK(r.err.find("do not change sign") != std::string::npos);
}

TEST_CASE("thread count comes from the environment unless the flag overrides it") {
    const fs::path dir = fresh_dir("threads");
    dump_json(dir / "config.json",
              json{{"model", "overdamped"},
                   {"method", "montecarlo"},
                   {"drift", {{"preset", "traveling_wave"}, {"eps", 0.3}}},
                   {"sde", {{"dt", 1e-2}, {"horizon", 3.0}, {"burn_in", 1.0}, {"n_paths", 64},
                            {"seed", 5}}}});
    const std::string base = "velocity --config \"" + (dir / "config.json").string() + "\" --out \"";

    const CliRun env_only = run_cli(base + dir.string() + "/a\"", dir, "RATCHET_THREADS=2");
    CAPTURE(env_only.err);
    REQUIRE(env_only.status == 0);
    const auto ra = read_records_jsonl((dir / "a" / "records.jsonl").string());
    REQUIRE(ra.size() == 1);
    CHECK(ra[0].parameters.at("threads") == 2.0);

    const CliRun flagged = run_cli(base + dir.string() + "/b\" --threads 1", dir, "RATCHET_THREADS=2");
    REQUIRE(flagged.status == 0);
    const auto rb = read_records_jsonl((dir / "b" / "records.jsonl").string());
    REQUIRE(rb.size() == 1);
    CHECK(rb[0].parameters.at("threads") == 1.0);
    // same seed, different thread counts, identical estimate
    CHECK(ra[0].value == rb[0].value);
}

TEST_CASE("preset flag is enough to run without a config file") {
    const fs::path dir = fresh_dir("preset");
    const CliRun r = run_cli("velocity --preset traveling_wave --out \"" + dir.string() + "\"", dir);
    CAPTURE(r.err);
    REQUIRE(r.status == 0);
    const auto records = read_records_jsonl((dir / "records.jsonl").string());
    REQUIRE(records.size() == 1);
    CHECK(records[0].value < 0.0);

    const CliRun bare = run_cli("velocity --out \"" + dir.string() + "\"", dir);
    CHECK(bare.status == 2);
    CHECK(bare.err.find("no drift specified") != std::string::npos);

    const CliRun help = run_cli("--help", dir);
    CHECK(help.status == 0);
    CHECK(help.out.find("usage:") != std::string::npos);

    const CliRun bogus = run_cli("frobnicate", dir);
    CHECK(bogus.status == 2);
}
