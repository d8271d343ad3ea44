// trial_log.hpp
// In-memory Bell trial records.

#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace bellsim {

/// One event-ready Bell trial. Times are nanoseconds in the common frame.
struct TrialRecord {
    std::uint64_t idx = 0;
    int a = 0;
    int b = 0;
    int x = 1;
    int y = 1;
    double t_herald_ns = 0;
    double t_choice_a_ns = 0;
    double t_choice_b_ns = 0;
    double t_read_done_a_ns = 0;
    double t_read_done_b_ns = 0;
    std::uint64_t attempts = 1;

    /// (-1)^(a b) x y == 1
    bool win() const { return ((a & b) ? -x * y : x * y) == 1; }

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

inline constexpr int trial_log_format_version = 1;

struct LogHeader {
    int format_version = trial_log_format_version;
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::string created_utc;
    std::uint64_t requested_trials = 0;
    bool complete = true;
    nlohmann::json config = nlohmann::json::object();

    friend bool operator==(const LogHeader&, const LogHeader&) = default;
};

struct TrialLog {
    LogHeader header;
    std::vector<TrialRecord> trials;

    friend bool operator==(const TrialLog&, const TrialLog&) = default;
};

}  // namespace bellsim
