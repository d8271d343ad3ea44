// readout.hpp
// Single-shot spin readout by spin-dependent fluorescence: outcome +1 when at
// least one photon is counted in the readout window, -1 otherwise.
// Convention: +1 == bright == m_s = 0 == |up> (basis index 0).

#pragma once

#include "bellsim/quantum.hpp"
#include "bellsim/randomness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace bellsim {

class ReadoutError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ReadoutFidelities {
    double plus;   // P(+1 | m_s = 0)
    double minus;  // P(-1 | m_s = +-1)
    double average() const { return 0.5 * (plus + minus); }
};

/// Photon-arrival model of the readout. The bright state emits detected
/// photons at `bright_rate` until it leaves the cycling transition at
/// `flip_rate`; background counts arrive at `dark_rate` for either state.
/// Rates are per microsecond, durations in microseconds.
struct ReadoutModel {
    double bright_rate = 1.5;
    double dark_rate = 0.0;
    double flip_rate = 0.0;
    double duration_us = 3.7;

    void validate() const {
        if (!(bright_rate >= 0 && dark_rate >= 0 && flip_rate >= 0))
            throw ReadoutError("readout rates must be >= 0");
        if (!(duration_us > 0)) throw ReadoutError("readout duration must be > 0");
    }

    ReadoutFidelities fidelities_at(double t_us) const {
        if (!(t_us >= 0)) throw ReadoutError("readout duration must be >= 0");
        const double total = bright_rate + flip_rate;
        // P(no bright-state photon by t) for a source that switches off at flip_rate
        double no_bright = 1.0;
        if (total > 0) no_bright = (flip_rate + bright_rate * std::exp(-total * t_us)) / total;
        const double no_dark = std::exp(-dark_rate * t_us);
        return {1.0 - no_dark * no_bright, no_dark};
    }

    ReadoutFidelities fidelities() const {
        validate();
        return fidelities_at(duration_us);
    }
};

struct FidelityPoint {
    double plus;
    double minus;
    double average;
};

inline FidelityPoint fidelity_vs_duration(const ReadoutModel& model, double t_us) {
    const auto f = model.fidelities_at(t_us);
    return {f.plus, f.minus, f.average()};
}

/// Picks dark and flip rates so that F_minus(duration) = `minus_target` and
/// F_avg(duration) = `average_target` for the given bright rate. The flip
/// rate is found by bisection; F_plus is monotone decreasing in it.
inline ReadoutModel calibrate_readout(double average_target, double duration_us, double bright_rate,
                                      double minus_target) {
    if (!(average_target > 0.5 && average_target < 1.0)) throw ReadoutError("average fidelity target must lie in (0.5, 1)");
    if (!(minus_target > 0.0 && minus_target <= 1.0)) throw ReadoutError("F_minus target must lie in (0, 1]");
    ReadoutModel m;
    m.bright_rate = bright_rate;
    m.duration_us = duration_us;
    m.dark_rate = -std::log(minus_target) / duration_us;
    const double plus_target = 2.0 * average_target - minus_target;
    m.flip_rate = 0.0;
    if (m.fidelities().plus < plus_target) throw ReadoutError("bright rate too low to reach the fidelity target");
    double lo = 0.0, hi = 1.0;
    m.flip_rate = hi;
    while (m.fidelities().plus > plus_target) {
        hi *= 2.0;
        m.flip_rate = hi;
        if (hi > 1e9) throw ReadoutError("calibration did not bracket the target");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        m.flip_rate = 0.5 * (lo + hi);
        if (m.fidelities().plus > plus_target)
            lo = m.flip_rate;
        else
            hi = m.flip_rate;
    }
    m.flip_rate = 0.5 * (lo + hi);
    return m;
}

/// Two-outcome POVM for a Z readout with the given fidelities.
struct Povm {
    Matrix plus;
    Matrix minus;
};

inline Povm readout_povm(const ReadoutFidelities& f) {
    if (!(f.plus >= 0 && f.plus <= 1 && f.minus >= 0 && f.minus <= 1))
        throw ReadoutError("readout fidelities must lie in [0,1]");
    Matrix plus = Matrix::Zero(2, 2);
    plus(0, 0) = f.plus;
    plus(1, 1) = 1.0 - f.minus;
    return {plus, Matrix::Identity(2, 2) - plus};
}

inline Povm readout_channel(const ReadoutModel& model) { return readout_povm(model.fidelities()); }

/// Projector onto the +1 eigenvector of cos(theta) Z + sin(theta) X.
inline Matrix rotated_projector(double theta, int sign) {
    return 0.5 * (Matrix::Identity(2, 2) + static_cast<double>(sign) * bloch_observable(theta).matrix());
}

/// POVM of "rotate the spin, then read out along Z" for readout angle theta.
inline Povm rotated_povm(const ReadoutFidelities& f, double theta) {
    const Matrix up = rotated_projector(theta, +1), down = rotated_projector(theta, -1);
    Matrix plus = f.plus * up + (1.0 - f.minus) * down;
    return {plus, Matrix::Identity(2, 2) - plus};
}

/// E_plus - E_minus for the rotated noisy readout:
/// (F+ - F-) I + (F+ + F- - 1) sigma_theta.
inline Matrix outcome_operator(const ReadoutFidelities& f, double theta) {
    return (f.plus - f.minus) * Matrix::Identity(2, 2) + (f.plus + f.minus - 1.0) * bloch_observable(theta).matrix();
}

struct MeasurementResult {
    int outcome;         // +1 or -1 as reported by the detector
    QuantumState after;  // state after the projective spin measurement
};

/// Measures the named spin subsystem along angle theta. The spin is projected
/// onto the rotated eigenbasis and the detector then reports the outcome
/// through the readout confusion matrix.
inline MeasurementResult measure_in_basis(const QuantumState& state, std::string_view subsystem, double theta,
                                          const ReadoutFidelities& f, RngStream& rng) {
    const auto idx = state.index_of(subsystem);
    if (state.subsystems()[idx].dim != 2) throw QuantumError("measure_in_basis: subsystem is not a spin");
    const Matrix up = embed(rotated_projector(theta, +1), state.subsystems(), idx);
    const Matrix rho = state.density();
    Matrix rho_up = up * rho * up.adjoint();
    const double p_up = std::clamp(rho_up.trace().real(), 0.0, 1.0);
    const bool spin_up = rng.uniform() < p_up;
    const bool reported_plus = spin_up ? rng.bernoulli(f.plus) : !rng.bernoulli(f.minus);

    Matrix post;
    if (spin_up) {
        post = rho_up / p_up;
    } else {
        const Matrix down = embed(rotated_projector(theta, -1), state.subsystems(), idx);
        post = down * rho * down.adjoint() / (1.0 - p_up);
    }
    post = 0.5 * (post + post.adjoint());
    return {reported_plus ? +1 : -1, QuantumState::mixed(std::move(post), state.subsystems())};
}

inline MeasurementResult measure_in_basis(const QuantumState& state, std::string_view subsystem, double theta,
                                          const ReadoutModel& model, RngStream& rng) {
    return measure_in_basis(state, subsystem, theta, model.fidelities(), rng);
}

/// Readout angles in the Z-X plane for the two inputs on each side.
struct ReadoutBasisSet {
    double a0 = 0.0;
    double a1 = std::numbers::pi / 2;
    double b0 = -3.0 * std::numbers::pi / 4;
    double b1 = 3.0 * std::numbers::pi / 4;
    double epsilon = 0.0;

    /// 0, pi/2, -3pi/4 - eps, 3pi/4 + eps
    static ReadoutBasisSet with_tilt(double eps) {
        ReadoutBasisSet s;
        s.epsilon = eps;
        s.b0 = -3.0 * std::numbers::pi / 4 - eps;
        s.b1 = 3.0 * std::numbers::pi / 4 + eps;
        return s;
    }

    double angle_a(int a) const { return a == 0 ? a0 : a1; }
    double angle_b(int b) const { return b == 0 ? b0 : b1; }

    void validate() const {
        for (double t : {a0, a1, b0, b1, epsilon})
            if (!std::isfinite(t)) throw ReadoutError("readout angles must be finite");
    }
};

}  // namespace bellsim
