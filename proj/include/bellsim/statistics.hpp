// statistics.hpp
// CHSH estimation and the two hypothesis tests: a conventional Gaussian test
// on S and a memory-robust binomial bound on the number of wins.

#pragma once

#include "bellsim/quantum.hpp"
#include "bellsim/readout.hpp"
#include "bellsim/trial_log.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bellsim {

class StatisticsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Local-realist bound on S.
inline constexpr double chsh_local_bound = 2.0;

/// Sign of each setting pair in S = E00 + E01 + E10 - E11.
inline constexpr int chsh_sign(int a, int b) { return (a & b) ? -1 : 1; }

struct SettingCell {
    int a = 0;
    int b = 0;
    std::uint64_t n = 0;
    std::uint64_t same = 0;  // x y = +1
    std::uint64_t diff = 0;  // x y = -1
    double correlation = 0;
    double std_error = 0;
};

struct CorrelationTable {
    std::array<SettingCell, 4> cells;  // index 2a + b

    const SettingCell& at(int a, int b) const { return cells[static_cast<std::size_t>(2 * a + b)]; }
    std::uint64_t total() const { return cells[0].n + cells[1].n + cells[2].n + cells[3].n; }
};

struct ChshEstimate {
    CorrelationTable table;
    double s = 0;
    double sigma_s = 0;
};

inline CorrelationTable correlation_table(std::span<const TrialRecord> trials) {
    CorrelationTable t;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            auto& c = t.cells[static_cast<std::size_t>(2 * a + b)];
            c.a = a;
            c.b = b;
        }
    for (const auto& r : trials) {
        if ((r.a != 0 && r.a != 1) || (r.b != 0 && r.b != 1)) throw StatisticsError("trial inputs must be 0 or 1");
        if ((r.x != 1 && r.x != -1) || (r.y != 1 && r.y != -1)) throw StatisticsError("trial outputs must be +1 or -1");
        auto& c = t.cells[static_cast<std::size_t>(2 * r.a + r.b)];
        ++c.n;
        if (r.x * r.y == 1)
            ++c.same;
        else
            ++c.diff;
    }
    for (auto& c : t.cells) {
        if (c.n == 0) continue;
        const double n = static_cast<double>(c.n);
        c.correlation = (static_cast<double>(c.same) - static_cast<double>(c.diff)) / n;
        c.std_error = std::sqrt(std::max(0.0, 1.0 - c.correlation * c.correlation) / n);
    }
    return t;
}

/// S from the per-setting correlations with a root-sum-square error.
inline ChshEstimate chsh_estimate(std::span<const TrialRecord> trials) {
    ChshEstimate est{correlation_table(trials)};
    std::string missing;
    for (const auto& c : est.table.cells)
        if (c.n == 0) missing += (missing.empty() ? "" : ", ") + ("(" + std::to_string(c.a) + "," + std::to_string(c.b) + ")");
    if (!missing.empty()) throw StatisticsError("S undefined: no trials for setting(s) " + missing);
    double var = 0;
    for (const auto& c : est.table.cells) {
        est.s += chsh_sign(c.a, c.b) * c.correlation;
        var += c.std_error * c.std_error;
    }
    est.sigma_s = std::sqrt(var);
    return est;
}

inline std::uint64_t count_wins(std::span<const TrialRecord> trials) {
    std::uint64_t k = 0;
    for (const auto& r : trials) k += r.win() ? 1 : 0;
    return k;
}

/// I = 8 (k/n - 1/2), evaluated as (8k - 4n)/n with one rounding.
inline double i_statistic(std::uint64_t k, std::uint64_t n) {
    if (n == 0) throw StatisticsError("I statistic needs n >= 1");
    if (k > n) throw StatisticsError("wins k cannot exceed n");
    if (n > (std::uint64_t{1} << 50)) return 8.0 * (static_cast<double>(k) / static_cast<double>(n) - 0.5);
    const auto num = 8 * static_cast<std::int64_t>(k) - 4 * static_cast<std::int64_t>(n);
    return static_cast<double>(num) / static_cast<double>(n);
}

/// One-sided Gaussian tail P(Z >= (S - 2)/sigma).
inline double conventional_pvalue(double s, double sigma_s) {
    if (!(sigma_s > 0)) throw StatisticsError("conventional p-value needs sigma_S > 0");
    const double z = (s - chsh_local_bound) / sigma_s;
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

/// Per-trial win probability allowed to a local-realist adversary with
/// setting predictability tau: 3/4 + c_adj * tau.
struct PredictabilityAdjustment {
    double c_adj = 3.0;
};

using high_precision = boost::multiprecision::cpp_bin_float_50;

/// P(Binomial(n, q) >= k), summed in 50-digit arithmetic.
inline double binomial_upper_tail(std::uint64_t k, std::uint64_t n, const high_precision& q) {
    if (k > n) throw StatisticsError("wins k cannot exceed n");
    if (q >= 1) return 1.0;
    if (q <= 0) return k == 0 ? 1.0 : 0.0;
    if (k == 0) return 1.0;
    const high_precision one_minus = 1 - q;
    // first term C(n,k) q^k (1-q)^(n-k)
    high_precision term = 1;
    {
        const std::uint64_t kk = std::min(k, n - k);
        for (std::uint64_t i = 0; i < kk; ++i) {
            term *= high_precision(n - i);
            term /= high_precision(i + 1);
        }
    }
    term *= boost::multiprecision::pow(q, static_cast<long>(k)) * boost::multiprecision::pow(one_minus, static_cast<long>(n - k));
    high_precision sum = 0;
    const high_precision ratio = q / one_minus;
    for (std::uint64_t j = k; j <= n; ++j) {
        sum += term;
        if (j < n) term *= high_precision(n - j) / high_precision(j + 1) * ratio;
    }
    return std::clamp(static_cast<double>(sum), 0.0, 1.0);
}

inline high_precision win_probability_bound(double tau, const PredictabilityAdjustment& adj = {}) {
    return high_precision(3) / 4 + high_precision(adj.c_adj) * high_precision(tau);
}

/// Memory-robust p-value bound: under local realism with settings of excess
/// predictability at most tau, each trial is won with probability at most
/// q = 3/4 + c_adj tau whatever the history, so the number of wins is
/// stochastically dominated by Binomial(n, q).
inline double complete_pvalue(std::uint64_t k, std::uint64_t n, double tau, const PredictabilityAdjustment& adj = {}) {
    if (n == 0) throw StatisticsError("complete p-value needs n >= 1");
    if (k > n) throw StatisticsError("wins k cannot exceed n");
    if (!(tau >= 0.0 && tau < 0.25)) throw StatisticsError("predictability tau must lie in [0, 1/4)");
    if (!(adj.c_adj >= 0.0)) throw StatisticsError("predictability adjustment must be >= 0");
    return binomial_upper_tail(k, n, win_probability_bound(tau, adj));
}

struct CurveRow {
    std::uint64_t k;
    double i;
    double p_complete;
    double p_conventional;
};

/// Conventional p-value for a given I assuming balanced settings, where each
/// |E| = I/4 and sigma_S = 4 sqrt((1 - I^2/16) / n).
inline double conventional_pvalue_for_i(double i, std::uint64_t n) {
    const double e = i / 4.0;
    const double sigma = 4.0 * std::sqrt(std::max(0.0, 1.0 - e * e) / static_cast<double>(n));
    if (sigma > 0) return conventional_pvalue(i, sigma);
    if (i > chsh_local_bound) return 0.0;
    return i < chsh_local_bound ? 1.0 : 0.5;
}

inline std::vector<CurveRow> p_vs_i_curve(std::uint64_t n, double tau, std::span<const std::uint64_t> ks,
                                          const PredictabilityAdjustment& adj = {}) {
    std::vector<CurveRow> rows;
    rows.reserve(ks.size());
    for (auto k : ks) {
        const double i = i_statistic(k, n);
        rows.push_back({k, i, complete_pvalue(k, n, tau, adj), conventional_pvalue_for_i(i, n)});
    }
    return rows;
}

/// Every k from 0 to n.
inline std::vector<CurveRow> p_vs_i_curve(std::uint64_t n, double tau, const PredictabilityAdjustment& adj = {}) {
    std::vector<std::uint64_t> ks(n + 1);
    for (std::uint64_t k = 0; k <= n; ++k) ks[k] = k;
    return p_vs_i_curve(n, tau, ks, adj);
}

struct AnalysisResult {
    CorrelationTable table;
    double s = 0;
    double sigma_s = 0;
    double i = 0;
    std::uint64_t k = 0;
    std::uint64_t n = 0;
    double p_conventional = 1;
    double p_complete = 1;
    double tau = 0;
};

inline AnalysisResult analyze(std::span<const TrialRecord> trials, double tau, const PredictabilityAdjustment& adj = {}) {
    const auto est = chsh_estimate(trials);
    AnalysisResult r;
    r.table = est.table;
    r.s = est.s;
    r.sigma_s = est.sigma_s;
    r.n = trials.size();
    r.k = count_wins(trials);
    r.i = i_statistic(r.k, r.n);
    r.tau = tau;
    r.p_complete = complete_pvalue(r.k, r.n, tau, adj);
    // a cell with E = +-1 everywhere has zero spread; treat the violation as certain
    r.p_conventional = est.sigma_s > 0 ? conventional_pvalue(est.s, est.sigma_s)
                                       : (est.s > chsh_local_bound ? 0.0 : (est.s < chsh_local_bound ? 1.0 : 0.5));
    return r;
}

/// Predicted <x y> per setting, index 2a + b, for a two-spin state read out
/// with noisy detectors at the given angles.
inline std::array<double, 4> expected_correlations(const QuantumState& spins, const ReadoutFidelities& fa,
                                                   const ReadoutFidelities& fb, const ReadoutBasisSet& basis) {
    basis.validate();
    std::array<double, 4> e{};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            e[static_cast<std::size_t>(2 * a + b)] =
                expectation(spins, Observable(outcome_operator(fa, basis.angle_a(a))),
                            Observable(outcome_operator(fb, basis.angle_b(b))));
    return e;
}

inline double chsh_combination(const std::array<double, 4>& e) { return e[0] + e[1] + e[2] - e[3]; }

}  // namespace bellsim
