// config.hpp
// Experiment configuration bundle, its defaults and the JSON (with comments)
// reader/writer. Unknown keys are rejected.

#pragma once

#include "bellsim/optimizer.hpp"
#include "bellsim/photonics.hpp"
#include "bellsim/randomness.hpp"
#include "bellsim/readout.hpp"
#include "bellsim/spacetime.hpp"
#include "bellsim/statistics.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bellsim {

using nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physical loss budget of one arm (source to detector at C).
struct ArmBudget {
    double collection_efficiency = 0.0025526938257207374;
    double fibre_km = 0.85;
    double detector_efficiency = 0.3;
};

struct HeraldBudget {
    ArmBudget arm_a;
    ArmBudget arm_b;
    double loss_db_per_km = 8.0;
    std::optional<double> probability_override;  // use instead of the composed budget
};

inline double arm_transmission(const ArmBudget& arm, double loss_db_per_km) {
    return arm.collection_efficiency * std::pow(10.0, -loss_db_per_km * arm.fibre_km / 10.0) * arm.detector_efficiency;
}

/// Herald probability per entanglement attempt: the ideal psi- pattern
/// probability 1/4 times the transmission of both arms.
inline double herald_probability(const HeraldBudget& b) {
    if (b.probability_override) {
        if (!(*b.probability_override >= 0 && *b.probability_override <= 1))
            throw ConfigError("herald probability must lie in [0,1]");
        return *b.probability_override;
    }
    for (const auto* arm : {&b.arm_a, &b.arm_b}) {
        if (!(arm->collection_efficiency >= 0 && arm->collection_efficiency <= 1 && arm->detector_efficiency >= 0 &&
              arm->detector_efficiency <= 1))
            throw ConfigError("efficiencies must lie in [0,1]");
        if (!(arm->fibre_km >= 0)) throw ConfigError("fibre length must be >= 0");
    }
    if (!(b.loss_db_per_km >= 0)) throw ConfigError("fibre loss must be >= 0");
    return 0.25 * arm_transmission(b.arm_a, b.loss_db_per_km) * arm_transmission(b.arm_b, b.loss_db_per_km);
}

struct RunSettings {
    std::uint64_t trials = 245;
    double hours = 0;  // wall-clock budget; 0 means unlimited
    std::uint64_t seed = 20151021;
    double attempt_period_ns = 20690;
    double timestamp_jitter_ns = 5;
};

/// Readout calibrated at 3.7 us: F_avg 0.971 (A) and 0.963 (B) with F_minus 0.99.
inline ReadoutModel default_readout_a() { return {1.5, 0.0027163069874328242, 0.07173338409052496, 3.7}; }
inline ReadoutModel default_readout_b() { return {1.5, 0.0027163069874328242, 0.099355241602759409, 3.7}; }

struct ExperimentConfig {
    RunSettings run;
    HeraldBudget herald;
    InterferenceModel interference;
    bool include_psi_plus = false;
    SpinPhotonErrorModel spin_photon;
    ReadoutModel readout_a = default_readout_a();
    ReadoutModel readout_b = default_readout_b();
    RngModel rng{0.0, 32, 160};
    double epsilon_over_pi = 0.026;
    Geometry geometry;
    TimingBudget timing;
    PredictabilityAdjustment adjustment;
    std::optional<double> tau_override;  // predictability used by the analysis
    OptimizationSpec optimizer;

    ReadoutBasisSet basis() const { return ReadoutBasisSet::with_tilt(epsilon_over_pi * std::numbers::pi); }

    HeraldPattern pattern() const {
        return include_psi_plus ? HeraldPattern::psi_minus_and_corrected_plus() : HeraldPattern::psi_minus();
    }

    /// Predictability fed to the complete analysis.
    double tau() const { return tau_override ? *tau_override : output_predictability(rng); }

    void validate() const {
        if (!(run.hours >= 0)) throw ConfigError("run.hours must be >= 0");
        if (!(run.attempt_period_ns > 0)) throw ConfigError("run.attempt_period_ns must be > 0");
        if (!(run.timestamp_jitter_ns >= 0)) throw ConfigError("run.timestamp_jitter_ns must be >= 0");
        herald_probability(herald);
        interference.validate();
        spin_photon.validate();
        readout_a.validate();
        readout_b.validate();
        rng.validate();
        if (!std::isfinite(epsilon_over_pi)) throw ConfigError("basis.epsilon_over_pi must be finite");
        geometry.validate();
        timing.validate();
        if (!(adjustment.c_adj >= 0)) throw ConfigError("statistics.c_adj must be >= 0");
        if (tau_override && !(*tau_override >= 0 && *tau_override < 0.25))
            throw ConfigError("statistics.tau must lie in [0, 0.25)");
        optimizer.validate();
    }
};

namespace detail {

/// Reads keys out of one JSON object and rejects any it did not consume.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("'" + name() + "' must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("bad value for '" + child(key) + "': " + e.what());
        }
    }

    template <class T>
    void get_optional(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return;
        T v{};
        get(key, v);
        out = v;
    }

    std::optional<ObjectReader> object(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        return ObjectReader(j_.at(key), child(key));
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError("unknown key '" + child(k) + "'");
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string name() const { return path_.empty() ? "<root>" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void read_point(ObjectReader& r, const char* key, Point3& p) {
    if (auto o = r.object(key)) {
        std::optional<json> dummy;
        o->get("x", p.x);
        o->get("y", p.y);
        o->get("z", p.z);
        o->finish();
    }
}

inline void read_arm(ObjectReader& r, const char* key, ArmBudget& arm) {
    if (auto o = r.object(key)) {
        o->get("collection_efficiency", arm.collection_efficiency);
        o->get("fibre_km", arm.fibre_km);
        o->get("detector_efficiency", arm.detector_efficiency);
        o->finish();
    }
}

inline void read_readout(ObjectReader& r, const char* key, ReadoutModel& m) {
    if (auto o = r.object(key)) {
        o->get("bright_rate_per_us", m.bright_rate);
        o->get("dark_rate_per_us", m.dark_rate);
        o->get("flip_rate_per_us", m.flip_rate);
        o->get("duration_us", m.duration_us);
        o->finish();
    }
}

inline json point_json(const Point3& p) { return {{"x", p.x}, {"y", p.y}, {"z", p.z}}; }

inline json arm_json(const ArmBudget& a) {
    return {{"collection_efficiency", a.collection_efficiency},
            {"fibre_km", a.fibre_km},
            {"detector_efficiency", a.detector_efficiency}};
}

inline json readout_json(const ReadoutModel& m) {
    return {{"bright_rate_per_us", m.bright_rate},
            {"dark_rate_per_us", m.dark_rate},
            {"flip_rate_per_us", m.flip_rate},
            {"duration_us", m.duration_us}};
}

inline const char* objective_name(Objective o) {
    return o == Objective::expected_s ? "expected-S" : "expected-complete-significance";
}

inline const char* parameters_name(FreeParameters p) { return p == FreeParameters::epsilon ? "epsilon" : "all-angles"; }

}  // namespace detail

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["run"] = {{"trials", c.run.trials},
                {"hours", c.run.hours},
                {"seed", c.run.seed},
                {"attempt_period_ns", c.run.attempt_period_ns},
                {"timestamp_jitter_ns", c.run.timestamp_jitter_ns}};
    j["herald"] = {{"arm_a", detail::arm_json(c.herald.arm_a)},
                   {"arm_b", detail::arm_json(c.herald.arm_b)},
                   {"loss_db_per_km", c.herald.loss_db_per_km},
                   {"probability_override", c.herald.probability_override ? json(*c.herald.probability_override) : json()}};
    j["interference"] = {{"visibility", c.interference.visibility},
                         {"efficiency_out1", c.interference.efficiency_out1},
                         {"efficiency_out2", c.interference.efficiency_out2},
                         {"dark_count_probability", c.interference.dark_count_probability},
                         {"laser_leakage_probability", c.interference.laser_leakage_probability},
                         {"include_psi_plus", c.include_psi_plus}};
    j["spin_photon"] = {{"a_early", c.spin_photon.a_early},
                        {"a_late", c.spin_photon.a_late},
                        {"b_early", c.spin_photon.b_early},
                        {"b_late", c.spin_photon.b_late}};
    j["readout"] = {{"a", detail::readout_json(c.readout_a)}, {"b", detail::readout_json(c.readout_b)}};
    j["rng"] = {{"raw_excess_predictability", c.rng.raw_excess_predictability},
                {"raw_bits_per_output", c.rng.raw_bits_per_output},
                {"extraction_time_ns", c.rng.extraction_time_ns}};
    j["basis"] = {{"epsilon_over_pi", c.epsilon_over_pi}};
    j["geometry"] = {{"a", detail::point_json(c.geometry.a)},
                     {"b", detail::point_json(c.geometry.b)},
                     {"c", detail::point_json(c.geometry.c)}};
    j["timing"] = {{"basis_choice_ns", c.timing.basis_choice_ns},
                   {"choice_to_readout_start_ns", c.timing.choice_to_readout_start_ns},
                   {"readout_ns", c.timing.readout_ns},
                   {"sync_allowance_ns", c.timing.sync_allowance_ns},
                   {"herald_lead_ns", c.timing.herald_lead_ns}};
    j["statistics"] = {{"c_adj", c.adjustment.c_adj}, {"tau", c.tau_override ? json(*c.tau_override) : json()}};
    j["optimizer"] = {{"objective", detail::objective_name(c.optimizer.objective)},
                      {"parameters", detail::parameters_name(c.optimizer.parameters)},
                      {"lower", c.optimizer.lower},
                      {"upper", c.optimizer.upper},
                      {"tolerance", c.optimizer.tolerance},
                      {"grid_points", c.optimizer.grid_points},
                      {"step_floor", c.optimizer.step_floor}};
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    detail::ObjectReader root(j, "");
    if (auto r = root.object("run")) {
        r->get("trials", c.run.trials);
        r->get("hours", c.run.hours);
        r->get("seed", c.run.seed);
        r->get("attempt_period_ns", c.run.attempt_period_ns);
        r->get("timestamp_jitter_ns", c.run.timestamp_jitter_ns);
        r->finish();
    }
    if (auto r = root.object("herald")) {
        detail::read_arm(*r, "arm_a", c.herald.arm_a);
        detail::read_arm(*r, "arm_b", c.herald.arm_b);
        r->get("loss_db_per_km", c.herald.loss_db_per_km);
        r->get_optional("probability_override", c.herald.probability_override);
        r->finish();
    }
    if (auto r = root.object("interference")) {
        r->get("visibility", c.interference.visibility);
        r->get("efficiency_out1", c.interference.efficiency_out1);
        r->get("efficiency_out2", c.interference.efficiency_out2);
        r->get("dark_count_probability", c.interference.dark_count_probability);
        r->get("laser_leakage_probability", c.interference.laser_leakage_probability);
        r->get("include_psi_plus", c.include_psi_plus);
        r->finish();
    }
    if (auto r = root.object("spin_photon")) {
        r->get("a_early", c.spin_photon.a_early);
        r->get("a_late", c.spin_photon.a_late);
        r->get("b_early", c.spin_photon.b_early);
        r->get("b_late", c.spin_photon.b_late);
        r->finish();
    }
    if (auto r = root.object("readout")) {
        detail::read_readout(*r, "a", c.readout_a);
        detail::read_readout(*r, "b", c.readout_b);
        r->finish();
    }
    if (auto r = root.object("rng")) {
        r->get("raw_excess_predictability", c.rng.raw_excess_predictability);
        r->get("raw_bits_per_output", c.rng.raw_bits_per_output);
        r->get("extraction_time_ns", c.rng.extraction_time_ns);
        r->finish();
    }
    if (auto r = root.object("basis")) {
        r->get("epsilon_over_pi", c.epsilon_over_pi);
        r->finish();
    }
    if (auto r = root.object("geometry")) {
        detail::read_point(*r, "a", c.geometry.a);
        detail::read_point(*r, "b", c.geometry.b);
        detail::read_point(*r, "c", c.geometry.c);
        r->finish();
    }
    if (auto r = root.object("timing")) {
        r->get("basis_choice_ns", c.timing.basis_choice_ns);
        r->get("choice_to_readout_start_ns", c.timing.choice_to_readout_start_ns);
        r->get("readout_ns", c.timing.readout_ns);
        r->get("sync_allowance_ns", c.timing.sync_allowance_ns);
        r->get("herald_lead_ns", c.timing.herald_lead_ns);
        r->finish();
    }
    if (auto r = root.object("statistics")) {
        r->get("c_adj", c.adjustment.c_adj);
        r->get_optional("tau", c.tau_override);
        r->finish();
    }
    if (auto r = root.object("optimizer")) {
        std::string objective = detail::objective_name(c.optimizer.objective);
        std::string params = detail::parameters_name(c.optimizer.parameters);
        r->get("objective", objective);
        r->get("parameters", params);
        if (objective == "expected-S")
            c.optimizer.objective = Objective::expected_s;
        else if (objective == "expected-complete-significance")
            c.optimizer.objective = Objective::expected_complete_significance;
        else
            throw ConfigError("bad value for 'optimizer.objective': " + objective);
        if (params == "epsilon")
            c.optimizer.parameters = FreeParameters::epsilon;
        else if (params == "all-angles")
            c.optimizer.parameters = FreeParameters::all_angles;
        else
            throw ConfigError("bad value for 'optimizer.parameters': " + params);
        r->get("lower", c.optimizer.lower);
        r->get("upper", c.optimizer.upper);
        r->get("tolerance", c.optimizer.tolerance);
        r->get("grid_points", c.optimizer.grid_points);
        r->get("step_floor", c.optimizer.step_floor);
        r->finish();
    }
    root.finish();
    c.optimizer.trials = c.run.trials;
    c.optimizer.tau = c.tau();
    c.optimizer.adjustment = c.adjustment;
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    return c;
}

/// Parses JSON text; // and /* */ comments are allowed. Parse errors carry
/// the line and column.
inline ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
    const std::string s = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace bellsim
