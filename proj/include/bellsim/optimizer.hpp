// optimizer.hpp
// Readout-angle selection: coarse grid scan followed by a shrinking-step
// coordinate descent, maximizing the expected CHSH value (or the expected
// significance of the memory-robust test).

#pragma once

#include "bellsim/quantum.hpp"
#include "bellsim/readout.hpp"
#include "bellsim/statistics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bellsim {

class OptimizerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Correlation tensor T_ij = Tr(rho sigma_i (x) sigma_j) over {I, Z, X}; lets
/// the noisy correlation at any Z-X-plane angles be evaluated in closed form.
class CorrelationModel {
public:
    CorrelationModel(const QuantumState& spins, const ReadoutFidelities& fa, const ReadoutFidelities& fb) : fa_(fa), fb_(fb) {
        if (spins.dim() != 4) throw OptimizerError("correlation model needs a two-qubit state");
        const std::array<Matrix, 3> ops{Matrix(Matrix::Identity(2, 2)), pauli_z(), pauli_x()};
        const Matrix rho = spins.density();
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) t_[i][j] = (rho * detail::kron(ops[i], ops[j])).trace().real();
    }

    double correlation(double theta_a, double theta_b) const {
        const std::array<double, 3> ca{fa_.plus - fa_.minus, (fa_.plus + fa_.minus - 1) * std::cos(theta_a),
                                       (fa_.plus + fa_.minus - 1) * std::sin(theta_a)};
        const std::array<double, 3> cb{fb_.plus - fb_.minus, (fb_.plus + fb_.minus - 1) * std::cos(theta_b),
                                       (fb_.plus + fb_.minus - 1) * std::sin(theta_b)};
        double e = 0;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) e += ca[i] * cb[j] * t_[i][j];
        return e;
    }

    double chsh(const ReadoutBasisSet& s) const {
        return correlation(s.a0, s.b0) + correlation(s.a0, s.b1) + correlation(s.a1, s.b0) - correlation(s.a1, s.b1);
    }

private:
    ReadoutFidelities fa_, fb_;
    std::array<std::array<double, 3>, 3> t_{};
};

/// S predicted for a state and readout at the given angles, via Tr(rho O_A (x) O_B).
inline double expected_S(const QuantumState& spins, const ReadoutFidelities& fa, const ReadoutFidelities& fb,
                         const ReadoutBasisSet& angles) {
    return chsh_combination(expected_correlations(spins, fa, fb, angles));
}

enum class Objective { expected_s, expected_complete_significance };
enum class FreeParameters { epsilon, all_angles };

struct OptimizationSpec {
    Objective objective = Objective::expected_s;
    FreeParameters parameters = FreeParameters::epsilon;
    // offsets from the canonical angles (0, pi/2, -3pi/4, 3pi/4); epsilon tilts b0, b1 outward
    double lower = -std::numbers::pi / 8;
    double upper = std::numbers::pi / 8;
    double tolerance = 1e-4;  // polish resolution is the finer of this and step_floor
    int grid_points = 64;
    double step_floor = 1e-5;
    // only used by the significance objective
    std::uint64_t trials = 245;
    double tau = 0.0;
    PredictabilityAdjustment adjustment{};

    void validate() const {
        if (!(std::isfinite(lower) && std::isfinite(upper) && lower < upper))
            throw OptimizerError("search bounds must be finite with lower < upper");
        if (!(tolerance > 0)) throw OptimizerError("tolerance must be > 0");
        if (grid_points < 2) throw OptimizerError("grid needs at least 2 points per parameter");
        if (!(step_floor > 0)) throw OptimizerError("step floor must be > 0");
    }
};

struct OptimizationResult {
    ReadoutBasisSet angles;
    std::vector<double> parameters;
    double objective = 0;
    double expected_s = 0;
    bool degenerate = false;
    std::uint64_t evaluations = 0;
};

inline ReadoutBasisSet angles_from(FreeParameters p, const std::vector<double>& x) {
    if (p == FreeParameters::epsilon) return ReadoutBasisSet::with_tilt(x.at(0));
    ReadoutBasisSet s;
    s.a0 += x.at(0);
    s.a1 += x.at(1);
    s.b0 -= x.at(2);
    s.b1 += x.at(3);
    return s;
}

/// Binary KL divergence D(w || q) in nats.
inline double binary_kl(double w, double q) {
    auto term = [](double a, double b) { return a > 0 ? a * std::log(a / b) : 0.0; };
    return term(w, q) + term(1 - w, 1 - q);
}

/// log10 of the Chernoff bound on the complete-test p-value at the expected
/// win fraction 1/2 + S/8; zero when no violation is expected.
inline double expected_significance(double s, std::uint64_t n, double tau, const PredictabilityAdjustment& adj) {
    const double w = 0.5 + s / 8.0;
    const double q = 0.75 + adj.c_adj * tau;
    if (q >= 1 || w <= q) return 0.0;
    return static_cast<double>(n) * binary_kl(std::min(w, 1.0), q) / std::numbers::ln10;
}

namespace detail {

inline std::string describe(const std::vector<double>& x) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << "]";
    return os.str();
}

inline double squared_norm(const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v * v;
    return s;
}

}  // namespace detail

struct SearchResult {
    std::vector<double> x;
    double value;
    bool degenerate;
    std::uint64_t evaluations;
};

/// Maximizes f over the box [lower, upper]^dims: full grid with
/// `grid_points` per axis, then coordinate descent starting from the grid
/// spacing and halving down to `step_floor`. Ties go to the point closest to
/// the origin.
inline SearchResult grid_then_polish(const std::function<double(const std::vector<double>&)>& f, std::size_t dims,
                                     double lower, double upper, int grid_points, double step_floor) {
    std::uint64_t evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        const double v = f(x);
        if (!std::isfinite(v)) throw OptimizerError("objective is not finite at " + detail::describe(x));
        return v;
    };
    const double spacing = (upper - lower) / (grid_points - 1);
    constexpr double tie = 1e-12;

    std::vector<double> best(dims, 0.0), x(dims);
    double best_val = eval(best);  // origin, the canonical angles
    double worst_val = best_val;
    std::vector<int> idx(dims, 0);
    while (true) {
        for (std::size_t d = 0; d < dims; ++d) x[d] = lower + spacing * idx[d];
        const double v = eval(x);
        worst_val = std::min(worst_val, v);
        if (v > best_val + tie || (v > best_val - tie && detail::squared_norm(x) < detail::squared_norm(best))) {
            best_val = std::max(best_val, v);
            best = x;
        }
        std::size_t d = 0;
        while (d < dims && ++idx[d] == grid_points) idx[d++] = 0;
        if (d == dims) break;
    }

    const bool degenerate = best_val - worst_val <= 1e-9 * std::max(1.0, std::abs(best_val));
    if (degenerate) return {std::vector<double>(dims, 0.0), eval(std::vector<double>(dims, 0.0)), true, evals};

    for (double step = spacing; step >= step_floor; step *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (std::size_t d = 0; d < dims; ++d) {
                for (double dir : {-1.0, 1.0}) {
                    std::vector<double> trial = best;
                    trial[d] = std::clamp(trial[d] + dir * step, lower, upper);
                    const double v = eval(trial);
                    if (v > best_val + 1e-15 * std::max(1.0, std::abs(best_val))) {
                        best = std::move(trial);
                        best_val = v;
                        moved = true;
                    }
                }
            }
        }
    }
    return {best, best_val, false, evals};
}

/// Chooses readout angles for a characterized state and readout model.
inline OptimizationResult optimize(const OptimizationSpec& spec, const QuantumState& spins, const ReadoutFidelities& fa,
                                   const ReadoutFidelities& fb) {
    spec.validate();
    const CorrelationModel model(spins, fa, fb);
    const std::size_t dims = spec.parameters == FreeParameters::epsilon ? 1 : 4;
    auto objective = [&](const std::vector<double>& x) {
        const double s = model.chsh(angles_from(spec.parameters, x));
        if (spec.objective == Objective::expected_s) return s;
        return expected_significance(s, spec.trials, spec.tau, spec.adjustment);
    };
    const auto found = grid_then_polish(objective, dims, spec.lower, spec.upper, spec.grid_points,
                                        std::min(spec.tolerance, spec.step_floor));
    OptimizationResult r;
    r.parameters = found.x;
    r.angles = angles_from(spec.parameters, found.x);
    r.objective = found.value;
    r.expected_s = expected_S(spins, fa, fb, r.angles);
    r.degenerate = found.degenerate;
    r.evaluations = found.evaluations;
    return r;
}

}  // namespace bellsim
