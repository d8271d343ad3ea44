// commands.hpp
// The five command-line operations as library calls. Each returns its report
// in memory; the writers below put it on disk or a stream.

#pragma once

#include "bellsim/config.hpp"
#include "bellsim/io.hpp"
#include "bellsim/optimizer.hpp"
#include "bellsim/photonics.hpp"
#include "bellsim/spacetime.hpp"
#include "bellsim/statistics.hpp"
#include "bellsim/trial_engine.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace bellsim {

/// Exit-code contract of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_scientific = 3 };

struct SpinPhotonRow {
    std::string side;
    std::string time_bin;
    double p_up_corrected;  // spin populations given the photon bin
    double p_up_raw;        // as seen through the readout
};

struct AlignedCorrelation {
    std::string basis;        // ZZ or XX
    std::string orientation;  // parallel or anti-parallel
    double theta_a;
    double theta_b;
    double correlation;
};

struct CharacterizationReport {
    std::vector<SpinPhotonRow> spin_photon;
    double coincidence_indistinguishable = 0;
    double coincidence_distinguishable = 0;
    double visibility = 0;
    double herald_pattern_probability = 0;
    double herald_probability_per_attempt = 0;
    double heralded_fidelity = 0;
    ReadoutFidelities readout_a{};
    ReadoutFidelities readout_b{};
    std::vector<AlignedCorrelation> aligned;
    std::array<double, 4> expected_correlations{};
    double expected_s = 0;
};

inline CharacterizationReport cmd_characterize(const ExperimentConfig& c) {
    c.validate();
    CharacterizationReport rep;
    rep.readout_a = c.readout_a.fidelities();
    rep.readout_b = c.readout_b.fidelities();

    for (Side side : {Side::A, Side::B}) {
        const auto state = spin_photon_state(side, c.spin_photon);
        const auto& f = side == Side::A ? rep.readout_a : rep.readout_b;
        for (int bin = 0; bin < 2; ++bin) {
            Matrix proj = Matrix::Zero(4, 4);
            proj(bin, bin) = 1;          // |up, bin>
            proj(2 + bin, 2 + bin) = 1;  // |down, bin>
            Matrix up = Matrix::Zero(4, 4);
            up(bin, bin) = 1;
            const Matrix rho = state.density();
            const double p_bin = (proj * rho).trace().real();
            const double p_up = (up * rho).trace().real() / p_bin;
            rep.spin_photon.push_back({to_string(side), bin == 0 ? "early" : "late", p_up,
                                       f.plus * p_up + (1 - f.minus) * (1 - p_up)});
        }
    }

    PhotonicModeSpace space;
    auto coincidences = [&](double v) {
        return coincidence_probability(beam_splitter(two_photon_input(TimeBin::early, TimeBin::early, v, space), space), space);
    };
    rep.coincidence_indistinguishable = coincidences(c.interference.visibility);
    rep.coincidence_distinguishable = coincidences(0.0);
    rep.visibility = 1 - rep.coincidence_indistinguishable / rep.coincidence_distinguishable;

    const auto h = heralded_state(c.spin_photon, c.interference, c.pattern(), space);
    rep.herald_pattern_probability = h.probability;
    rep.herald_probability_per_attempt = herald_probability(c.herald);
    rep.heralded_fidelity = h.fidelity;

    const CorrelationModel model(h.spins, rep.readout_a, rep.readout_b);
    const double pi = std::numbers::pi;
    const std::array<AlignedCorrelation, 4> aligned{{
        {"ZZ", "parallel", 0, 0, 0},
        {"ZZ", "anti-parallel", 0, pi, 0},
        {"XX", "parallel", pi / 2, pi / 2, 0},
        {"XX", "anti-parallel", pi / 2, -pi / 2, 0},
    }};
    for (auto a : aligned) {
        a.correlation = model.correlation(a.theta_a, a.theta_b);
        rep.aligned.push_back(a);
    }
    rep.expected_correlations = expected_correlations(h.spins, rep.readout_a, rep.readout_b, c.basis());
    rep.expected_s = chsh_combination(rep.expected_correlations);
    return rep;
}

inline nlohmann::ordered_json characterization_json(const CharacterizationReport& r) {
    nlohmann::ordered_json j;
    j["heralded_fidelity"] = r.heralded_fidelity;
    j["herald_pattern_probability"] = r.herald_pattern_probability;
    j["herald_probability_per_attempt"] = r.herald_probability_per_attempt;
    j["visibility"] = r.visibility;
    j["coincidence_indistinguishable"] = r.coincidence_indistinguishable;
    j["coincidence_distinguishable"] = r.coincidence_distinguishable;
    j["readout"] = {{"a", {{"F_plus", r.readout_a.plus}, {"F_minus", r.readout_a.minus}, {"F_avg", r.readout_a.average()}}},
                    {"b", {{"F_plus", r.readout_b.plus}, {"F_minus", r.readout_b.minus}, {"F_avg", r.readout_b.average()}}}};
    j["expected_correlations"] = r.expected_correlations;
    j["expected_S"] = r.expected_s;
    return j;
}

/// Writes summary.json, spin_photon.csv, visibility.csv and correlations.csv
/// into `dir`.
inline void write_characterization(const std::string& dir, const CharacterizationReport& r) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path d(dir);
    write_text_file((d / "summary.json").string(), characterization_json(r).dump(2) + "\n");

    std::ostringstream sp;
    sp << "side,time_bin,p_up_corrected,p_up_raw\n";
    for (const auto& row : r.spin_photon)
        sp << row.side << ',' << row.time_bin << ',' << csv_number(row.p_up_corrected) << ',' << csv_number(row.p_up_raw)
           << '\n';
    write_text_file((d / "spin_photon.csv").string(), sp.str());

    std::ostringstream vis;
    vis << "photons,coincidence_probability\n"
        << "indistinguishable," << csv_number(r.coincidence_indistinguishable) << '\n'
        << "distinguishable," << csv_number(r.coincidence_distinguishable) << '\n';
    write_text_file((d / "visibility.csv").string(), vis.str());

    std::ostringstream cor;
    cor << "basis,orientation,theta_a,theta_b,correlation\n";
    for (const auto& a : r.aligned)
        cor << a.basis << ',' << a.orientation << ',' << csv_number(a.theta_a) << ',' << csv_number(a.theta_b) << ','
            << csv_number(a.correlation) << '\n';
    write_text_file((d / "correlations.csv").string(), cor.str());
}

inline TrialLog cmd_simulate(const ExperimentConfig& c) { return run_experiment(c); }

struct AnalyzeReport {
    AnalysisResult result;
    std::vector<CurveRow> curve;
};

inline AnalyzeReport cmd_analyze(const TrialLog& log, double tau, const PredictabilityAdjustment& adj = {}) {
    AnalyzeReport rep;
    rep.result = analyze(log.trials, tau, adj);
    rep.curve = p_vs_i_curve(rep.result.n, tau, adj);
    return rep;
}

struct AuditReport {
    std::vector<std::pair<std::uint64_t, LocalityReport>> trials;
    std::uint64_t failures = 0;
    double min_margin_ns = 0;  // over all trials and conditions; 0 for an empty log

    bool passed() const { return failures == 0; }
};

inline AuditReport cmd_audit(const TrialLog& log, const Geometry& g, const TimingBudget& budget) {
    AuditReport rep;
    bool first = true;
    for (const auto& r : log.trials) {
        auto lr = audit_trial(r, g, budget);
        if (!lr.passed()) ++rep.failures;
        rep.min_margin_ns = first ? lr.min_margin_ns() : std::min(rep.min_margin_ns, lr.min_margin_ns());
        first = false;
        rep.trials.emplace_back(r.idx, lr);
    }
    return rep;
}

inline OptimizationResult cmd_optimize(const ExperimentConfig& c) {
    c.validate();
    const auto h = heralded_state(c.spin_photon, c.interference, c.pattern());
    OptimizationSpec spec = c.optimizer;
    spec.trials = c.run.trials;
    spec.tau = c.tau();
    spec.adjustment = c.adjustment;
    return optimize(spec, h.spins, c.readout_a.fidelities(), c.readout_b.fidelities());
}

inline nlohmann::ordered_json optimization_json(const OptimizationResult& r) {
    nlohmann::ordered_json j;
    j["a0"] = r.angles.a0;
    j["a1"] = r.angles.a1;
    j["b0"] = r.angles.b0;
    j["b1"] = r.angles.b1;
    j["epsilon"] = r.angles.epsilon;
    j["epsilon_over_pi"] = r.angles.epsilon / std::numbers::pi;
    j["parameters"] = r.parameters;
    j["objective"] = r.objective;
    j["expected_S"] = r.expected_s;
    j["degenerate"] = r.degenerate;
    j["evaluations"] = r.evaluations;
    return j;
}

}  // namespace bellsim
