#pragma once
// Result persistence: one record per run, serialized as JSON lines for
// machine diffing and as RFC-4180 CSV for tables. All file writes go through
// a temp file in the target directory followed by rename, so readers never
// observe a partial file.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "version.hpp"

namespace ratchet {

struct ResultRecord {
    std::string model;                        // overdamped | two-state | kramers | kramers-two-state
    std::string method;                       // solver tag, e.g. spectral-stationary
    std::map<std::string, double> parameters; // full numeric parameter echo
    double value = 0.0;
    double std_error = 0.0;
    double residual = 0.0;                    // stationary-equation defect, 0 when not applicable
    double tail = 0.0;                        // truncation tail fraction, 0 when not applicable
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
    std::string library_version = version();
    std::string note;
};

inline ResultRecord make_record(const std::string& model, const VelocityEstimate& est,
                                std::map<std::string, double> parameters,
                                double wall_seconds, std::uint64_t seed) {
    ResultRecord r;
    r.model = model;
    r.method = est.method;
    r.parameters = std::move(parameters);
    r.value = est.value;
    r.std_error = est.std_error;
    r.wall_seconds = wall_seconds;
    r.seed = seed;
    r.note = est.note;
    return r;
}

inline nlohmann::json to_json(const ResultRecord& r) {
    return nlohmann::json{{"model", r.model},
                          {"method", r.method},
                          {"parameters", r.parameters},
                          {"value", r.value},
                          {"std_error", r.std_error},
                          {"residual", r.residual},
                          {"tail", r.tail},
                          {"wall_seconds", r.wall_seconds},
                          {"seed", r.seed},
                          {"library_version", r.library_version},
                          {"note", r.note}};
}

inline ResultRecord record_from_json(const nlohmann::json& j) {
    ResultRecord r;
    r.model = j.at("model").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.parameters = j.at("parameters").get<std::map<std::string, double>>();
    r.value = j.at("value").get<double>();
    r.std_error = j.at("std_error").get<double>();
    r.residual = j.at("residual").get<double>();
    r.tail = j.at("tail").get<double>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.library_version = j.at("library_version").get<std::string>();
    r.note = j.at("note").get<std::string>();
    return r;
}

// One record per line; doubles are emitted with round-trip precision.
inline std::string to_json_line(const ResultRecord& r) { return to_json(r).dump(); }

// RFC 4180: fields holding comma, quote, CR or LF are quoted, inner quotes doubled.
inline std::string csv_escape(const std::string& field) {
    const bool needs = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(fields[i]);
    }
    out += "\r\n";
    return out;
}

namespace detail {

inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
        out.write(content.data(), std::streamsize(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("short write: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("rename failed: " + path);
}

}

inline void write_records_jsonl(const std::string& path, const std::vector<ResultRecord>& records) {
    std::string content;
    for (const auto& r : records) {
        content += to_json_line(r);
        content += '\n';
    }
    detail::write_file_atomic(path, content);
}

inline std::vector<ResultRecord> read_records_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<ResultRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

// Fixed-order columns; the parameter echo is embedded as one JSON field so a
// row loses nothing relative to the log line.
inline void write_records_csv(const std::string& path, const std::vector<ResultRecord>& records) {
    std::string content = csv_row({"model", "method", "value", "std_error", "residual", "tail",
                                   "wall_seconds", "seed", "library_version", "note", "parameters"});
    for (const auto& r : records) {
        std::vector<std::string> row{r.model, r.method};
        auto num = [&](double x) {
            std::ostringstream s;
            s.precision(17);
            s << x;
            return s.str();
        };
        row.push_back(num(r.value));
        row.push_back(num(r.std_error));
        row.push_back(num(r.residual));
        row.push_back(num(r.tail));
        row.push_back(num(r.wall_seconds));
        row.push_back(std::to_string(r.seed));
        row.push_back(r.library_version);
        row.push_back(r.note);
        row.push_back(nlohmann::json(r.parameters).dump());
        content += csv_row(row);
    }
    detail::write_file_atomic(path, content);
}

// (x, y, yerr) triples for any plotting tool.
inline void write_xy_csv(const std::string& path, const std::string& xname,
                         const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& yerr) {
    if (x.size() != y.size() || x.size() != yerr.size())
        throw std::invalid_argument("write_xy_csv: length mismatch");
    std::string content = csv_row({xname, "value", "std_error"});
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::ostringstream s;
        s.precision(17);
        s << x[i];
        std::ostringstream t;
        t.precision(17);
        t << y[i];
        std::ostringstream u;
        u.precision(17);
        u << yerr[i];
        content += csv_row({s.str(), t.str(), u.str()});
    }
    detail::write_file_atomic(path, content);
}

}
