// io.hpp
// Trial logs as JSON lines (header object first, then one object per trial)
// and the CSV / JSON report writers.

#pragma once

#include "bellsim/spacetime.hpp"
#include "bellsim/statistics.hpp"
#include "bellsim/trial_log.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bellsim {

/// Malformed input data (log lines, report inputs).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline nlohmann::ordered_json header_json(const LogHeader& h) {
    nlohmann::ordered_json j;
    j["format_version"] = h.format_version;
    j["config_hash"] = h.config_hash;
    j["master_seed"] = h.master_seed;
    j["created_utc"] = h.created_utc;
    j["requested_trials"] = h.requested_trials;
    j["complete"] = h.complete;
    j["config"] = nlohmann::ordered_json::parse(h.config.dump());
    return j;
}

inline nlohmann::ordered_json record_json(const TrialRecord& r) {
    nlohmann::ordered_json j;
    j["idx"] = r.idx;
    j["a"] = r.a;
    j["b"] = r.b;
    j["x"] = r.x;
    j["y"] = r.y;
    j["t_herald_ns"] = r.t_herald_ns;
    j["t_choice_a_ns"] = r.t_choice_a_ns;
    j["t_choice_b_ns"] = r.t_choice_b_ns;
    j["t_read_done_a_ns"] = r.t_read_done_a_ns;
    j["t_read_done_b_ns"] = r.t_read_done_b_ns;
    j["attempts"] = r.attempts;
    return j;
}

inline void write_log(std::ostream& os, const TrialLog& log) {
    os << header_json(log.header).dump() << '\n';
    for (const auto& r : log.trials) os << record_json(r).dump() << '\n';
}

inline void write_log_file(const std::string& path, const TrialLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_log(out, log);
    if (!out) throw DataError("write failed for '" + path + "'");
}

namespace detail {

template <class T>
T field(const nlohmann::json& j, const char* key, std::size_t line) {
    if (!j.contains(key)) throw DataError("line " + std::to_string(line) + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DataError("line " + std::to_string(line) + ": bad value for '" + key + "'");
    }
}

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, std::size_t line) {
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw DataError("line " + std::to_string(line) + ": unknown key '" + k + "'");
    }
}

inline TrialRecord parse_record(const nlohmann::json& j, std::size_t line) {
    if (!j.is_object()) throw DataError("line " + std::to_string(line) + ": trial entry must be a JSON object");
    check_keys(j,
               {"idx", "a", "b", "x", "y", "t_herald_ns", "t_choice_a_ns", "t_choice_b_ns", "t_read_done_a_ns",
                "t_read_done_b_ns", "attempts"},
               line);
    TrialRecord r;
    r.idx = field<std::uint64_t>(j, "idx", line);
    r.a = field<int>(j, "a", line);
    r.b = field<int>(j, "b", line);
    r.x = field<int>(j, "x", line);
    r.y = field<int>(j, "y", line);
    r.t_herald_ns = field<double>(j, "t_herald_ns", line);
    r.t_choice_a_ns = field<double>(j, "t_choice_a_ns", line);
    r.t_choice_b_ns = field<double>(j, "t_choice_b_ns", line);
    r.t_read_done_a_ns = field<double>(j, "t_read_done_a_ns", line);
    r.t_read_done_b_ns = field<double>(j, "t_read_done_b_ns", line);
    r.attempts = field<std::uint64_t>(j, "attempts", line);
    const std::string at = "line " + std::to_string(line) + ": ";
    if ((r.a != 0 && r.a != 1) || (r.b != 0 && r.b != 1)) throw DataError(at + "inputs a, b must be 0 or 1");
    if ((r.x != 1 && r.x != -1) || (r.y != 1 && r.y != -1)) throw DataError(at + "outputs x, y must be +1 or -1");
    if (!(r.t_choice_a_ns < r.t_read_done_a_ns) || !(r.t_choice_b_ns < r.t_read_done_b_ns))
        throw DataError(at + "basis choice must precede readout completion");
    if (r.attempts < 1) throw DataError(at + "attempt count must be >= 1");
    return r;
}

}  // namespace detail

inline TrialLog read_log(std::istream& in) {
    TrialLog log;
    std::string text;
    std::size_t line = 0;
    bool have_header = false;
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.empty()) throw DataError("line " + std::to_string(line) + ": empty line");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("line " + std::to_string(line) + ": not valid JSON (" + e.what() + ")");
        }
        if (!have_header) {
            if (!j.is_object() || !j.contains("format_version"))
                throw DataError("line 1: expected the log header object");
            detail::check_keys(j, {"format_version", "config_hash", "master_seed", "created_utc", "requested_trials",
                                   "complete", "config"},
                               line);
            auto& h = log.header;
            h.format_version = detail::field<int>(j, "format_version", line);
            if (h.format_version != trial_log_format_version)
                throw DataError("line 1: unsupported log format version " + std::to_string(h.format_version));
            h.config_hash = detail::field<std::string>(j, "config_hash", line);
            h.master_seed = detail::field<std::uint64_t>(j, "master_seed", line);
            h.created_utc = detail::field<std::string>(j, "created_utc", line);
            h.requested_trials = j.contains("requested_trials") ? detail::field<std::uint64_t>(j, "requested_trials", line) : 0;
            h.complete = j.contains("complete") ? detail::field<bool>(j, "complete", line) : true;
            h.config = j.contains("config") ? j.at("config") : nlohmann::json::object();
            have_header = true;
            continue;
        }
        auto r = detail::parse_record(j, line);
        if (r.idx != log.trials.size())
            throw DataError("line " + std::to_string(line) + ": expected idx " + std::to_string(log.trials.size()) +
                            ", found " + std::to_string(r.idx));
        log.trials.push_back(r);
    }
    if (!have_header) throw DataError("empty log: missing header line");
    return log;
}

inline TrialLog read_log_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open log '" + path + "'");
    try {
        return read_log(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

/// Fixed-format number for CSV cells: shortest round-trip form, '.' decimal.
inline std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return nlohmann::json(v).dump();
}

inline constexpr const char* curve_csv_header = "k,I,p_complete,p_conventional";

inline void write_curve_csv(std::ostream& os, const std::vector<CurveRow>& rows) {
    os << curve_csv_header << '\n';
    for (const auto& r : rows)
        os << r.k << ',' << csv_number(r.i) << ',' << csv_number(r.p_complete) << ',' << csv_number(r.p_conventional)
           << '\n';
}

inline constexpr const char* locality_csv_header = "idx,condition,margin_ns,effective_margin_ns,passed";

/// One row per trial and condition.
inline void write_locality_csv(std::ostream& os, const std::vector<std::pair<std::uint64_t, LocalityReport>>& rows) {
    os << locality_csv_header << '\n';
    for (const auto& [idx, rep] : rows)
        for (const auto& c : rep.conditions)
            os << idx << ',' << c.name << ',' << csv_number(c.margin_ns) << ',' << csv_number(c.effective_margin_ns) << ','
               << (c.passed ? 1 : 0) << '\n';
}

inline nlohmann::ordered_json analysis_json(const AnalysisResult& r) {
    nlohmann::ordered_json j;
    j["n"] = r.n;
    j["k"] = r.k;
    j["S"] = r.s;
    j["sigma_S"] = r.sigma_s;
    j["I"] = r.i;
    j["tau"] = r.tau;
    j["p_conventional"] = r.p_conventional;
    j["p_complete"] = r.p_complete;
    auto cells = nlohmann::ordered_json::array();
    for (const auto& c : r.table.cells) {
        nlohmann::ordered_json cj;
        cj["a"] = c.a;
        cj["b"] = c.b;
        cj["n"] = c.n;
        cj["correlated"] = c.same;
        cj["anticorrelated"] = c.diff;
        cj["E"] = c.correlation;
        cj["E_err"] = c.std_error;
        cells.push_back(cj);
    }
    j["cells"] = cells;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace bellsim
