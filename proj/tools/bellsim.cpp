// bellsim: command-line front end for the event-ready Bell test simulator.

#include "bellsim/commands.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr const char* csv_formats = R"(Output formats (CSV: ',' separator, '.' decimal, fixed column order):
  analyze --curve   k,I,p_complete,p_conventional
  audit             idx,condition,margin_ns,effective_margin_ns,passed
  characterize      spin_photon.csv  side,time_bin,p_up_corrected,p_up_raw
                    visibility.csv   photons,coincidence_probability
                    correlations.csv basis,orientation,theta_a,theta_b,correlation
Exit codes: 0 ok, 1 usage, 2 data error, 3 scientific failure (locality audit).)";

void emit(const std::optional<std::string>& out, const std::string& text) {
    if (out)
        bellsim::write_text_file(*out, text);
    else
        std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace bellsim;

    CLI::App app{"Event-ready CHSH Bell test simulator"};
    app.footer(csv_formats);
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::optional<double> hours;
    std::optional<double> tau;
    std::optional<std::string> out;
    std::optional<std::string> curve;
    std::string log_path;

    auto add_config = [&](CLI::App* c) {
        c->add_option("--config", config_path, "Configuration file (JSON with comments)")->check(CLI::ExistingFile);
    };

    auto* characterize = app.add_subcommand("characterize", "Model characterization reports");
    add_config(characterize);
    characterize->add_option("--out", out, "Directory for summary.json and the CSV reports (default: summary to stdout)");

    auto* simulate = app.add_subcommand("simulate", "Run the Bell test and write a JSON-lines trial log");
    add_config(simulate);
    simulate->add_option("--seed", seed, "Master seed");
    simulate->add_option("--n", trials, "Number of heralded trials");
    simulate->add_option("--hours", hours, "Simulated measurement-time budget in hours (0 = none)")->check(CLI::NonNegativeNumber);
    simulate->add_option("--out", out, "Log file (default: stdout)");

    auto* analyze_cmd = app.add_subcommand("analyze", "CHSH analysis of a trial log");
    add_config(analyze_cmd);
    analyze_cmd->add_option("log", log_path, "Trial log")->required();
    analyze_cmd->add_option("--tau", tau, "Setting predictability for the complete test");
    analyze_cmd->add_option("--out", out, "Analysis JSON (default: stdout)");
    analyze_cmd->add_option("--curve", curve, "CSV of p-value versus I");

    auto* audit = app.add_subcommand("audit", "Space-time audit of a trial log");
    add_config(audit);
    audit->add_option("log", log_path, "Trial log")->required();
    audit->add_option("--out", out, "Locality CSV (default: stdout)");

    auto* optimize_cmd = app.add_subcommand("optimize", "Choose readout angles");
    add_config(optimize_cmd);
    optimize_cmd->add_option("--out", out, "Angles JSON (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        ExperimentConfig cfg = config_path ? load_config(*config_path) : ExperimentConfig{};
        if (seed) cfg.run.seed = *seed;
        if (trials) cfg.run.trials = *trials;
        if (hours) cfg.run.hours = *hours;

        if (*characterize) {
            const auto rep = cmd_characterize(cfg);
            if (out)
                write_characterization(*out, rep);
            else
                std::cout << characterization_json(rep).dump(2) << '\n';
        } else if (*simulate) {
            const auto log = cmd_simulate(cfg);
            std::ostringstream os;
            write_log(os, log);
            emit(out, os.str());
            if (!log.header.complete)
                std::cerr << "time budget exhausted after " << log.trials.size() << " of " << cfg.run.trials
                          << " trials; log marked incomplete\n";
        } else if (*analyze_cmd) {
            const auto log = read_log_file(log_path);
            const double t = tau ? *tau : cfg.tau();
            const auto rep = cmd_analyze(log, t, cfg.adjustment);
            emit(out, analysis_json(rep.result).dump(2) + "\n");
            if (curve) {
                std::ostringstream os;
                write_curve_csv(os, rep.curve);
                write_text_file(*curve, os.str());
            }
        } else if (*audit) {
            const auto log = read_log_file(log_path);
            const auto rep = cmd_audit(log, cfg.geometry, cfg.timing);
            std::ostringstream os;
            write_locality_csv(os, rep.trials);
            emit(out, os.str());
            if (!rep.passed()) {
                std::cerr << rep.failures << " of " << rep.trials.size() << " trials fail the locality conditions\n";
                return exit_scientific;
            }
        } else if (*optimize_cmd) {
            const auto r = cmd_optimize(cfg);
            emit(out, optimization_json(r).dump(2) + "\n");
            if (r.degenerate) std::cerr << "objective is flat over the search box; returning the canonical angles\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_ok;
}
