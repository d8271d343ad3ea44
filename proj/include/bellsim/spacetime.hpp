// spacetime.hpp
// Light-cone bookkeeping for one Bell trial: each side's readout must finish
// before light from the other side's basis choice arrives, and the herald at
// C must lie outside the future light cone of both choices.

#pragma once

#include "bellsim/trial_log.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bellsim {

inline constexpr double speed_of_light_m_per_s = 299'792'458.0;

class AuditError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Site { A, B, C };

inline Site site_from_string(std::string_view s) {
    if (s == "A") return Site::A;
    if (s == "B") return Site::B;
    if (s == "C") return Site::C;
    throw AuditError("unknown site '" + std::string(s) + "'");
}

inline const char* to_string(Site s) {
    switch (s) {
    case Site::A: return "A";
    case Site::B: return "B";
    case Site::C: return "C";
    }
    return "?";
}

struct Point3 {
    double x = 0, y = 0, z = 0;
    friend bool operator==(const Point3&, const Point3&) = default;
};

inline double distance_m(const Point3& p, const Point3& q) {
    return std::hypot(p.x - q.x, p.y - q.y, p.z - q.z);
}

/// Lab positions in metres. Default: A and B 1280 m apart on the x axis, C
/// at the midpoint.
struct Geometry {
    Point3 a{0, 0, 0};
    Point3 b{1280, 0, 0};
    Point3 c{640, 0, 0};

    const Point3& position(Site s) const {
        switch (s) {
        case Site::A: return a;
        case Site::B: return b;
        case Site::C: return c;
        }
        throw AuditError("unknown site");
    }

    double distance(Site s, Site t) const { return distance_m(position(s), position(t)); }

    void validate() const {
        if (!(distance(Site::A, Site::B) > 0 && distance(Site::A, Site::C) > 0 && distance(Site::B, Site::C) > 0))
            throw AuditError("site separations must be > 0");
    }
};

inline double light_time_ns(double metres) { return metres / speed_of_light_m_per_s * 1e9; }

inline double light_time(const Geometry& g, Site x, Site y) { return light_time_ns(g.distance(x, y)); }

inline double light_time(const Geometry& g, std::string_view x, std::string_view y) {
    return light_time(g, site_from_string(x), site_from_string(y));
}

struct TimingBudget {
    double basis_choice_ns = 160;
    double choice_to_readout_start_ns = 480;  // maximum, includes basis_choice_ns
    double readout_ns = 3700;
    double sync_allowance_ns = 16;
    // Choices are placed so that the herald precedes the arrival at C of light
    // from the nearer choice by this much.
    double herald_lead_ns = 100;

    void validate() const {
        for (double v : {basis_choice_ns, choice_to_readout_start_ns, readout_ns, sync_allowance_ns, herald_lead_ns})
            if (!(v >= 0 && std::isfinite(v))) throw AuditError("timing budget entries must be finite and >= 0");
    }

    /// Light time between A and B minus the time from choice to readout end.
    double slack(const Geometry& g) const {
        return light_time(g, Site::A, Site::B) - (choice_to_readout_start_ns + readout_ns);
    }
};

enum class EventLabel { choice_a, choice_b, readout_done_a, readout_done_b, herald_c, choice_commit };

inline const char* to_string(EventLabel l) {
    switch (l) {
    case EventLabel::choice_a: return "choice-A";
    case EventLabel::choice_b: return "choice-B";
    case EventLabel::readout_done_a: return "readout-done-A";
    case EventLabel::readout_done_b: return "readout-done-B";
    case EventLabel::herald_c: return "herald-C";
    case EventLabel::choice_commit: return "choice-commit";
    }
    return "?";
}

struct SpacetimeEvent {
    EventLabel label;
    double time_ns;
};

struct ConditionResult {
    std::string name;
    double margin_ns;            // before the synchronization allowance
    double effective_margin_ns;  // after subtracting it
    bool passed;
};

struct LocalityReport {
    std::array<ConditionResult, 3> conditions;

    bool passed() const {
        return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.passed; });
    }

    double min_margin_ns() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& c : conditions) m = std::min(m, c.margin_ns);
        return m;
    }
};

inline constexpr std::array<const char*, 3> locality_condition_names{
    "readout-A-before-choice-B-signal", "readout-B-before-choice-A-signal", "herald-outside-choice-cones"};

inline LocalityReport audit_trial(std::span<const SpacetimeEvent> events, const Geometry& g, const TimingBudget& budget) {
    g.validate();
    budget.validate();
    auto time_of = [&](EventLabel l) {
        std::optional<double> t;
        for (const auto& e : events)
            if (e.label == l) t = e.time_ns;
        if (!t) throw AuditError(std::string("missing event '") + to_string(l) + "'");
        if (!std::isfinite(*t)) throw AuditError(std::string("non-finite time for event '") + to_string(l) + "'");
        return *t;
    };
    const double ca = time_of(EventLabel::choice_a), cb = time_of(EventLabel::choice_b);
    const double da = time_of(EventLabel::readout_done_a), db = time_of(EventLabel::readout_done_b);
    const double h = time_of(EventLabel::herald_c);
    const double ab = light_time(g, Site::A, Site::B);

    const std::array<double, 3> margins{
        cb + ab - da,
        ca + ab - db,
        std::min(ca + light_time(g, Site::A, Site::C), cb + light_time(g, Site::B, Site::C)) - h,
    };
    LocalityReport r;
    for (std::size_t i = 0; i < 3; ++i) {
        const double eff = margins[i] - budget.sync_allowance_ns;
        r.conditions[i] = {locality_condition_names[i], margins[i], eff, eff > 0};
    }
    return r;
}

inline std::vector<SpacetimeEvent> events_of(const TrialRecord& r) {
    return {{EventLabel::herald_c, r.t_herald_ns},
            {EventLabel::choice_a, r.t_choice_a_ns},
            {EventLabel::choice_b, r.t_choice_b_ns},
            {EventLabel::readout_done_a, r.t_read_done_a_ns},
            {EventLabel::readout_done_b, r.t_read_done_b_ns}};
}

inline LocalityReport audit_trial(const TrialRecord& r, const Geometry& g, const TimingBudget& budget) {
    const auto ev = events_of(r);
    return audit_trial(ev, g, budget);
}

/// Time from the herald to both basis choices in the synthetic timeline.
inline double choice_offset_from_herald(const Geometry& g, const TimingBudget& budget) {
    return -std::min(light_time(g, Site::A, Site::C), light_time(g, Site::B, Site::C)) + budget.herald_lead_ns;
}

/// Jitter-free event set of one trial with the herald at t = 0.
inline std::vector<SpacetimeEvent> nominal_events(const Geometry& g, const TimingBudget& budget) {
    const double choice = choice_offset_from_herald(g, budget);
    const double done = choice + budget.choice_to_readout_start_ns + budget.readout_ns;
    return {{EventLabel::herald_c, 0.0},
            {EventLabel::choice_a, choice},
            {EventLabel::choice_b, choice},
            {EventLabel::readout_done_a, done},
            {EventLabel::readout_done_b, done}};
}

/// How long before being recorded the inputs may have been fixed while the
/// locality conditions still hold, for a readout shortened to `readout_ns`.
inline double determination_bound(const Geometry& g, const TimingBudget& budget, double readout_ns) {
    budget.validate();
    if (!(readout_ns >= 0)) throw AuditError("readout duration must be >= 0");
    if (readout_ns > budget.readout_ns) throw AuditError("shortened readout exceeds the nominal readout duration");
    return light_time(g, Site::A, Site::B) - budget.choice_to_readout_start_ns - readout_ns - budget.sync_allowance_ns;
}

}  // namespace bellsim
