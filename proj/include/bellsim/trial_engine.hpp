// trial_engine.hpp
// Event-ready experiment loop: wait for a herald (geometric number of
// attempts), draw both settings, read out both spins, stamp the events.

#pragma once

#include "bellsim/config.hpp"
#include "bellsim/photonics.hpp"
#include "bellsim/randomness.hpp"
#include "bellsim/readout.hpp"
#include "bellsim/spacetime.hpp"
#include "bellsim/trial_log.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace bellsim {

class EngineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Number of attempts up to and including the first success, p in (0, 1].
inline std::uint64_t geometric_attempts(double p, RngStream& rng) {
    if (!(p > 0 && p <= 1)) throw EngineError("herald probability must lie in (0, 1]");
    if (p == 1) return 1;
    const double u = rng.uniform_open_zero();
    const double k = std::floor(std::log(u) / std::log1p(-p));
    if (k >= 1e18) return std::numeric_limits<std::uint64_t>::max();
    return 1 + static_cast<std::uint64_t>(k);
}

/// Independent streams, one per random consumer in a trial.
struct TrialStreams {
    RngStream attempts;
    RngStream choice_a;
    RngStream choice_b;
    RngStream readout_a;
    RngStream readout_b;
    RngStream jitter;

    explicit TrialStreams(std::uint64_t master)
        : attempts(derive_seed(master, 1)),
          choice_a(derive_seed(master, 2)),
          choice_b(derive_seed(master, 3)),
          readout_a(derive_seed(master, 4)),
          readout_b(derive_seed(master, 5)),
          jitter(derive_seed(master, 6)) {}
};

/// Everything a trial needs that does not change between trials.
struct TrialModel {
    QuantumState spins;  // heralded state, subsystems A and B
    ReadoutFidelities readout_a;
    ReadoutFidelities readout_b;
    ReadoutBasisSet basis;
    RngModel rng;
    Geometry geometry;
    TimingBudget timing;
    double jitter_ns = 5;

    static TrialModel from_config(const ExperimentConfig& c) {
        return {heralded_state(c.spin_photon, c.interference, c.pattern()).spins,
                c.readout_a.fidelities(),
                c.readout_b.fidelities(),
                c.basis(),
                c.rng,
                c.geometry,
                c.timing,
                c.run.timestamp_jitter_ns};
    }
};

struct ForcedInputs {
    int a;
    int b;
};

/// One trial given its herald time. Settings come from the extractor unless
/// forced; outcomes from sequential readout of A then B.
inline TrialRecord run_trial(const TrialModel& m, TrialStreams& s, std::uint64_t idx, double t_herald_ns,
                             std::uint64_t attempts, std::optional<ForcedInputs> forced = std::nullopt) {
    TrialRecord r;
    r.idx = idx;
    r.attempts = attempts;
    r.a = extracted_bit(m.rng, s.choice_a);
    r.b = extracted_bit(m.rng, s.choice_b);
    if (forced) {
        r.a = forced->a;
        r.b = forced->b;
    }
    const auto ma = measure_in_basis(m.spins, "A", m.basis.angle_a(r.a), m.readout_a, s.readout_a);
    const auto mb = measure_in_basis(ma.after, "B", m.basis.angle_b(r.b), m.readout_b, s.readout_b);
    r.x = ma.outcome;
    r.y = mb.outcome;

    auto jitter = [&] { return m.jitter_ns * (2.0 * s.jitter.uniform() - 1.0); };
    const double choice = t_herald_ns + choice_offset_from_herald(m.geometry, m.timing);
    const double to_done = m.timing.choice_to_readout_start_ns + m.timing.readout_ns;
    r.t_herald_ns = t_herald_ns;
    r.t_choice_a_ns = choice + jitter();
    r.t_choice_b_ns = choice + jitter();
    r.t_read_done_a_ns = r.t_choice_a_ns + to_done + jitter();
    r.t_read_done_b_ns = r.t_choice_b_ns + to_done + jitter();
    return r;
}

/// ISO-8601 UTC stamp from SOURCE_DATE_EPOCH (0 when unset) so that logs are
/// reproducible byte for byte.
inline std::string reproducible_timestamp() {
    std::time_t t = 0;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end != env && *end == '\0') t = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline LogHeader make_header(const ExperimentConfig& c) {
    LogHeader h;
    h.config_hash = config_hash(c);
    h.master_seed = c.run.seed;
    h.created_utc = reproducible_timestamp();
    h.requested_trials = c.run.trials;
    h.config = to_json(c);
    return h;
}

/// Runs trials until `run.trials` heralds are logged or the simulated
/// measurement time exceeds `run.hours` (when > 0), whichever comes first.
/// A log cut short by the time budget is marked incomplete.
inline TrialLog run_experiment(const ExperimentConfig& c, const TrialModel& model) {
    c.validate();
    const double p = herald_probability(c.herald);
    if (!(p > 0)) throw EngineError("herald probability is zero; no trial can ever be heralded");
    const double budget_ns = c.run.hours > 0 ? c.run.hours * 3600e9 : std::numeric_limits<double>::infinity();
    if (c.run.trials == 0 && !(c.run.hours > 0)) {
        TrialLog log{make_header(c), {}};
        return log;
    }

    TrialLog log{make_header(c), {}};
    TrialStreams streams(c.run.seed);
    double clock_ns = 0;
    for (std::uint64_t i = 0; c.run.trials == 0 || i < c.run.trials; ++i) {
        const std::uint64_t attempts = geometric_attempts(p, streams.attempts);
        clock_ns += static_cast<double>(attempts) * c.run.attempt_period_ns;
        if (clock_ns > budget_ns) {
            log.header.complete = c.run.trials == 0;
            break;
        }
        log.trials.push_back(run_trial(model, streams, i, clock_ns, attempts));
    }
    return log;
}

inline TrialLog run_experiment(const ExperimentConfig& c) { return run_experiment(c, TrialModel::from_config(c)); }

/// Independent replicas with seeds derive_seed(run.seed, replica index),
/// executed on up to `threads` workers (0 = hardware concurrency).
inline std::vector<TrialLog> run_replicas(const ExperimentConfig& c, std::size_t count, unsigned threads = 0) {
    const TrialModel model = TrialModel::from_config(c);
    std::vector<TrialLog> out(count);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            try {
                ExperimentConfig rc = c;
                rc.run.seed = derive_seed(c.run.seed, i);
                out[i] = run_experiment(rc, model);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace bellsim
