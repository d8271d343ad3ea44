// photonics.hpp
// Mode-level model of time-bin spin-photon entanglement, two-photon
// interference on a 50:50 beam splitter and the herald projection that leaves
// the two remote spins entangled.
//
// Partial distinguishability: every photon from source X is written as
//   alpha |shared> + beta |private_X>,   alpha^2 = sqrt(V), beta^2 = 1 - sqrt(V)
// so that |<photon_A|photon_B>|^2 = V and the two-photon coincidence contrast
// equals the visibility V.

#pragma once

#include "bellsim/quantum.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace bellsim {

class PhotonicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a detection pattern has zero probability for the given input.
class UnheraldableError : public PhotonicsError {
public:
    using PhotonicsError::PhotonicsError;
};

enum class Side { A, B };
enum class Port : std::uint8_t { A_in, B_in, C_out1, C_out2 };
enum class TimeBin : std::uint8_t { early, late };
enum class Sector : std::uint8_t { shared, private_a, private_b };

inline const char* to_string(Side s) { return s == Side::A ? "A" : "B"; }
inline const char* to_string(TimeBin t) { return t == TimeBin::early ? "early" : "late"; }
inline const char* to_string(Port p) {
    switch (p) {
    case Port::A_in: return "A-in";
    case Port::B_in: return "B-in";
    case Port::C_out1: return "C-out-1";
    case Port::C_out2: return "C-out-2";
    }
    return "?";
}

/// Occupation-number basis over a fixed set of modes, truncated at a total
/// photon number.
class FockSpace {
public:
    using Occupation = std::vector<std::uint8_t>;

    FockSpace(std::size_t modes, std::size_t max_photons) : modes_(modes), max_photons_(max_photons) {
        Occupation occ(modes, 0);
        enumerate(occ, 0, max_photons);
        for (std::size_t i = 0; i < basis_.size(); ++i) index_.emplace(basis_[i], i);
    }

    std::size_t dim() const { return basis_.size(); }
    std::size_t modes() const { return modes_; }
    std::size_t max_photons() const { return max_photons_; }
    const Occupation& occupation(std::size_t i) const { return basis_.at(i); }

    std::size_t index(const Occupation& occ) const {
        auto it = index_.find(occ);
        if (it == index_.end()) throw PhotonicsError("occupation outside the truncated Fock space");
        return it->second;
    }

    static std::size_t photons(const Occupation& occ) {
        std::size_t n = 0;
        for (auto o : occ) n += o;
        return n;
    }

    Vector vacuum() const {
        Vector v = Vector::Zero(static_cast<Eigen::Index>(dim()));
        v(static_cast<Eigen::Index>(index(Occupation(modes_, 0)))) = 1.0;
        return v;
    }

    /// Applies sum_j amp_j a_j^dagger to a Fock vector.
    Vector create(const Vector& in, const std::vector<std::pair<std::size_t, cplx>>& op) const {
        Vector out = Vector::Zero(in.size());
        for (std::size_t i = 0; i < dim(); ++i) {
            const cplx c = in(static_cast<Eigen::Index>(i));
            if (c == cplx(0.0)) continue;
            for (const auto& [mode, amp] : op) {
                Occupation occ = basis_[i];
                ++occ[mode];
                const auto it = index_.find(occ);
                if (it == index_.end()) throw PhotonicsError("photon number exceeds the Fock-space cutoff");
                out(static_cast<Eigen::Index>(it->second)) += amp * c * std::sqrt(static_cast<double>(occ[mode]));
            }
        }
        return out;
    }

    /// Fock-space operator induced by a linear map of creation operators,
    /// a_m^dagger -> sum_j u(j, m) a_j^dagger. Unitary when u is.
    Matrix transform(const Matrix& u) const {
        if (static_cast<std::size_t>(u.rows()) != modes_ || u.cols() != u.rows())
            throw PhotonicsError("mode transform has wrong size");
        const auto n = static_cast<Eigen::Index>(dim());
        Matrix w = Matrix::Zero(n, n);
        std::vector<std::size_t> photon_modes;
        Occupation target(modes_, 0);
        for (std::size_t col = 0; col < dim(); ++col) {
            const auto& occ = basis_[col];
            photon_modes.clear();
            double norm = 1.0;
            for (std::size_t m = 0; m < modes_; ++m) {
                for (std::uint8_t k = 0; k < occ[m]; ++k) photon_modes.push_back(m);
                norm *= factorial(occ[m]);
            }
            std::fill(target.begin(), target.end(), 0);
            expand(u, photon_modes, 0, cplx(1.0 / std::sqrt(norm)), target, w, col);
        }
        return w;
    }

private:
    static double factorial(std::size_t k) {
        double f = 1.0;
        for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
        return f;
    }

    void enumerate(Occupation& occ, std::size_t mode, std::size_t remaining) {
        if (mode == modes_) {
            basis_.push_back(occ);
            return;
        }
        for (std::size_t k = 0; k <= remaining; ++k) {
            occ[mode] = static_cast<std::uint8_t>(k);
            enumerate(occ, mode + 1, remaining - k);
        }
        occ[mode] = 0;
    }

    void expand(const Matrix& u, const std::vector<std::size_t>& photon_modes, std::size_t k, cplx amp,
                Occupation& target, Matrix& w, std::size_t col) const {
        if (k == photon_modes.size()) {
            double norm = 1.0;
            for (auto t : target) norm *= factorial(t);
            w(static_cast<Eigen::Index>(index(target)), static_cast<Eigen::Index>(col)) += amp * std::sqrt(norm);
            return;
        }
        const std::size_t m = photon_modes[k];
        for (std::size_t j = 0; j < modes_; ++j) {
            const cplx ujm = u(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m));
            if (ujm == cplx(0.0)) continue;
            ++target[j];
            expand(u, photon_modes, k + 1, amp * ujm, target, w, col);
            --target[j];
        }
    }

    std::size_t modes_;
    std::size_t max_photons_;
    std::vector<Occupation> basis_;
    std::map<Occupation, std::size_t> index_;
};

/// Modes (port, time bin, distinguishability sector) with an occupation cutoff
/// applied to the total photon number.
class PhotonicModeSpace {
public:
    static constexpr std::size_t ports = 4;
    static constexpr std::size_t bins = 2;
    static constexpr std::size_t sectors = 3;
    static constexpr std::size_t mode_count = ports * bins * sectors;
    static constexpr const char* subsystem_name = "photons";

    explicit PhotonicModeSpace(std::size_t cutoff = 2) : fock_(mode_count, cutoff) {
        if (cutoff < 2) throw PhotonicsError("occupation cutoff must be >= 2");
        bs_ = fock_.transform(beam_splitter_modes());
    }

    static std::size_t mode(Port p, TimeBin t, Sector s) {
        return (static_cast<std::size_t>(p) * bins + static_cast<std::size_t>(t)) * sectors +
               static_cast<std::size_t>(s);
    }

    const FockSpace& fock() const { return fock_; }
    std::size_t dim() const { return fock_.dim(); }
    std::size_t cutoff() const { return fock_.max_photons(); }
    Subsystem subsystem() const { return {subsystem_name, dim()}; }

    /// Fock-space unitary of the 50:50 beam splitter at C, applied per time
    /// bin and per sector. Input ports map to output ports and vice versa.
    const Matrix& beam_splitter_unitary() const { return bs_; }

    /// Detected photon counts for (C-out-1 early, C-out-1 late, C-out-2 early,
    /// C-out-2 late), summed over sectors.
    using ClickCounts = std::array<std::uint8_t, 4>;

    static std::size_t slot(Port p, TimeBin t) {
        if (p != Port::C_out1 && p != Port::C_out2) throw PhotonicsError("detectors sit on the output ports only");
        return (p == Port::C_out1 ? 0 : 2) + static_cast<std::size_t>(t);
    }

    ClickCounts clicks(std::size_t basis_index) const {
        ClickCounts c{};
        const auto& occ = fock_.occupation(basis_index);
        for (auto p : {Port::C_out1, Port::C_out2})
            for (auto t : {TimeBin::early, TimeBin::late})
                for (auto s : {Sector::shared, Sector::private_a, Sector::private_b})
                    c[slot(p, t)] = static_cast<std::uint8_t>(c[slot(p, t)] + occ[mode(p, t, s)]);
        return c;
    }

    /// Photons still sitting in the input ports (zero after the beam splitter).
    std::size_t input_photons(std::size_t basis_index) const {
        const auto& occ = fock_.occupation(basis_index);
        std::size_t n = 0;
        for (auto p : {Port::A_in, Port::B_in})
            for (auto t : {TimeBin::early, TimeBin::late})
                for (auto s : {Sector::shared, Sector::private_a, Sector::private_b}) n += occ[mode(p, t, s)];
        return n;
    }

    /// Creation operator for a photon from `side` in time bin `t`, with the
    /// sector split fixed by the visibility.
    static std::vector<std::pair<std::size_t, cplx>> source_photon(Side side, TimeBin t, double visibility) {
        const double alpha = std::sqrt(std::sqrt(visibility));
        const double beta = std::sqrt(std::max(0.0, 1.0 - std::sqrt(visibility)));
        const Port port = side == Side::A ? Port::A_in : Port::B_in;
        const Sector priv = side == Side::A ? Sector::private_a : Sector::private_b;
        std::vector<std::pair<std::size_t, cplx>> op;
        if (alpha > 0) op.emplace_back(mode(port, t, Sector::shared), alpha);
        if (beta > 0) op.emplace_back(mode(port, t, priv), beta);
        return op;
    }

private:
    static Matrix beam_splitter_modes() {
        const double r = std::numbers::sqrt2 / 2;
        Matrix u = Matrix::Zero(mode_count, mode_count);
        for (auto t : {TimeBin::early, TimeBin::late}) {
            for (auto s : {Sector::shared, Sector::private_a, Sector::private_b}) {
                auto m = [&](Port p) { return static_cast<Eigen::Index>(mode(p, t, s)); };
                u(m(Port::C_out1), m(Port::A_in)) = r;
                u(m(Port::C_out2), m(Port::A_in)) = r;
                u(m(Port::C_out1), m(Port::B_in)) = r;
                u(m(Port::C_out2), m(Port::B_in)) = -r;
                u(m(Port::A_in), m(Port::C_out1)) = r;
                u(m(Port::B_in), m(Port::C_out1)) = r;
                u(m(Port::A_in), m(Port::C_out2)) = r;
                u(m(Port::B_in), m(Port::C_out2)) = -r;
            }
        }
        return u;
    }

    FockSpace fock_;
    Matrix bs_;
};

inline void check_unit_interval(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw PhotonicsError(std::string(what) + " must lie in [0,1]");
}

struct InterferenceModel {
    double visibility = 0.90;
    double efficiency_out1 = 1.0;
    double efficiency_out2 = 1.0;
    double dark_count_probability = 0.0;  // per detection window
    double laser_leakage_probability = 0.0;

    void validate() const {
        check_unit_interval(visibility, "visibility");
        check_unit_interval(efficiency_out1, "detector efficiency (out-1)");
        check_unit_interval(efficiency_out2, "detector efficiency (out-2)");
        check_unit_interval(dark_count_probability, "dark count probability");
        check_unit_interval(laser_leakage_probability, "laser leakage probability");
    }

    double efficiency(Port p) const { return p == Port::C_out1 ? efficiency_out1 : efficiency_out2; }
};

/// Probability that the spin is flipped given the photon's time bin.
struct SpinPhotonErrorModel {
    double a_early = 0.014;
    double a_late = 0.008;
    double b_early = 0.016;
    double b_late = 0.007;

    static SpinPhotonErrorModel none() { return {0, 0, 0, 0}; }

    void validate() const {
        for (double e : {a_early, a_late, b_early, b_late})
            if (!(e >= 0.0 && e <= 0.5)) throw PhotonicsError("spin-photon error probability must lie in [0, 0.5]");
    }

    double early(Side s) const { return s == Side::A ? a_early : b_early; }
    double late(Side s) const { return s == Side::A ? a_late : b_late; }
};

/// One accepted detection configuration: exactly one click in each listed slot
/// and nothing elsewhere.
struct DetectionConfig {
    std::array<std::pair<TimeBin, Port>, 2> clicks;
    bool z_correction_on_b = false;  // maps psi+ onto psi- for same-port configurations

    PhotonicModeSpace::ClickCounts counts() const {
        PhotonicModeSpace::ClickCounts c{};
        for (const auto& [t, p] : clicks) ++c[PhotonicModeSpace::slot(p, t)];
        return c;
    }
};

struct HeraldPattern {
    std::vector<DetectionConfig> configs;

    /// One early and one late photon in different output ports (both port assignments).
    static HeraldPattern psi_minus() {
        return {{DetectionConfig{{{{TimeBin::early, Port::C_out1}, {TimeBin::late, Port::C_out2}}}},
                 DetectionConfig{{{{TimeBin::early, Port::C_out2}, {TimeBin::late, Port::C_out1}}}}}};
    }

    /// Early and late photon in the same output port (heralds psi+).
    static HeraldPattern psi_plus(bool corrected = false) {
        return {{DetectionConfig{{{{TimeBin::early, Port::C_out1}, {TimeBin::late, Port::C_out1}}}, corrected},
                 DetectionConfig{{{{TimeBin::early, Port::C_out2}, {TimeBin::late, Port::C_out2}}}, corrected}}};
    }

    static HeraldPattern single(TimeBin t1, Port p1, TimeBin t2, Port p2) {
        return {{DetectionConfig{{{{t1, p1}, {t2, p2}}}}}};
    }

    /// psi- configurations plus Z-corrected psi+ configurations.
    static HeraldPattern psi_minus_and_corrected_plus() {
        auto p = psi_minus();
        for (const auto& c : psi_plus(true).configs) p.configs.push_back(c);
        return p;
    }

    void validate() const {
        if (configs.empty()) throw PhotonicsError("herald pattern has no detection configuration");
        for (const auto& c : configs) {
            if (c.clicks[0].first == c.clicks[1].first)
                throw PhotonicsError("herald configuration needs exactly one early and one late detection");
        }
    }
};

/// Spin (x) time-bin state of one source, (|up,early> + |down,late>)/sqrt(2),
/// followed by a spin flip with probability err(bin) conditioned on the bin.
/// Subsystems: spin_<side>, bin_<side>; bin index 0 = early, 1 = late.
inline QuantumState spin_photon_state(Side side, const SpinPhotonErrorModel& err) {
    err.validate();
    const std::string s = to_string(side);
    std::vector<Subsystem> labels{{"spin_" + s, 2}, {"bin_" + s, 2}};
    Vector ideal = Vector::Zero(4);
    ideal(0) = std::numbers::sqrt2 / 2;  // |up, early>
    ideal(3) = std::numbers::sqrt2 / 2;  // |down, late>
    const double ee = err.early(side), el = err.late(side);
    if (ee == 0.0 && el == 0.0) return QuantumState::pure(ideal, labels);

    Matrix pe = Matrix::Zero(2, 2), pl = Matrix::Zero(2, 2);
    pe(0, 0) = 1.0;
    pl(1, 1) = 1.0;
    const Matrix id = Matrix::Identity(2, 2);
    const std::vector<Matrix> kraus{
        std::sqrt(1 - ee) * detail::kron(id, pe) + std::sqrt(1 - el) * detail::kron(id, pl),
        std::sqrt(ee) * detail::kron(pauli_x(), pe),
        std::sqrt(el) * detail::kron(pauli_x(), pl),
    };
    const Matrix rho0 = ideal * ideal.adjoint();
    Matrix rho = Matrix::Zero(4, 4);
    for (const auto& k : kraus) rho += k * rho0 * k.adjoint();
    return QuantumState::mixed(rho, labels);
}

/// Applies the beam splitter to the "photons" subsystem of a state.
inline QuantumState beam_splitter(const QuantumState& state, const PhotonicModeSpace& space) {
    const auto idx = state.index_of(PhotonicModeSpace::subsystem_name);
    const auto& subs = state.subsystems();
    if (subs[idx].dim != space.dim()) throw PhotonicsError("photonic subsystem does not match the mode space");

    std::size_t left = 1, right = 1;
    for (std::size_t i = 0; i < idx; ++i) left *= subs[i].dim;
    for (std::size_t i = idx + 1; i < subs.size(); ++i) right *= subs[i].dim;
    const std::size_t f = space.dim();

    auto check_support = [&](auto&& weight_of) {
        for (std::size_t l = 0; l < left; ++l)
            for (std::size_t k = 0; k < f; ++k)
                for (std::size_t r = 0; r < right; ++r)
                    if (weight_of((l * f + k) * right + r) > 1e-14 && FockSpace::photons(space.fock().occupation(k)) > 2)
                        throw PhotonicsError("beam splitter input holds more than 2 photons");
    };

    const Matrix& w = space.beam_splitter_unitary();
    if (state.is_pure()) {
        const auto& v = state.amplitudes();
        check_support([&](std::size_t i) { return std::norm(v(static_cast<Eigen::Index>(i))); });
        Vector out = Vector::Zero(v.size());
        Vector fiber(static_cast<Eigen::Index>(f));
        for (std::size_t l = 0; l < left; ++l)
            for (std::size_t r = 0; r < right; ++r) {
                for (std::size_t k = 0; k < f; ++k)
                    fiber(static_cast<Eigen::Index>(k)) = v(static_cast<Eigen::Index>((l * f + k) * right + r));
                const Vector mapped = w * fiber;
                for (std::size_t k = 0; k < f; ++k)
                    out(static_cast<Eigen::Index>((l * f + k) * right + r)) = mapped(static_cast<Eigen::Index>(k));
            }
        out /= out.norm();
        return QuantumState::pure(std::move(out), subs);
    }
    const Matrix rho = state.density();
    check_support([&](std::size_t i) { return rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real(); });
    const Matrix big = embed(w, subs, idx);
    Matrix out = big * rho * big.adjoint();
    out = 0.5 * (out + out.adjoint());
    return QuantumState::mixed(std::move(out), subs);
}

/// Photon-only state of two single photons, one per input port, with the
/// given time bins and visibility.
inline QuantumState two_photon_input(TimeBin bin_a, TimeBin bin_b, double visibility, const PhotonicModeSpace& space) {
    check_unit_interval(visibility, "visibility");
    const auto& fock = space.fock();
    Vector v = fock.create(fock.vacuum(), PhotonicModeSpace::source_photon(Side::A, bin_a, visibility));
    v = fock.create(v, PhotonicModeSpace::source_photon(Side::B, bin_b, visibility));
    v /= v.norm();
    return QuantumState::pure(std::move(v), {space.subsystem()});
}

/// Probability of exactly one click in C-out-1 and one in C-out-2 (any bins).
inline double coincidence_probability(const QuantumState& photons, const PhotonicModeSpace& space) {
    const Matrix rho = partial_trace(photons, {PhotonicModeSpace::subsystem_name}).density();
    double p = 0.0;
    for (std::size_t i = 0; i < space.dim(); ++i) {
        const auto c = space.clicks(i);
        if (c[0] + c[1] == 1 && c[2] + c[3] == 1) p += rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    }
    return p;
}

struct HeraldResult {
    double probability;
    QuantumState spins;  // subsystems A, B
    double fidelity;     // to psi-
};

struct DetectionOutcome {
    PhotonicModeSpace::ClickCounts counts;
    double probability;
};

namespace detail {

// Maps (spin_A, bin_A, spin_B, bin_B) basis vectors into (spin_A, spin_B) (x) Fock.
// Rows are ordered spin-major: index = (sA * 2 + sB) * F + fock.
inline Matrix source_isometry(const PhotonicModeSpace& space, double visibility) {
    const auto& fock = space.fock();
    const auto f = static_cast<Eigen::Index>(fock.dim());
    Matrix iso = Matrix::Zero(4 * f, 16);
    const Vector vac = fock.vacuum();
    for (int sa = 0; sa < 2; ++sa)
        for (int ta = 0; ta < 2; ++ta)
            for (int sb = 0; sb < 2; ++sb)
                for (int tb = 0; tb < 2; ++tb) {
                    Vector v = fock.create(vac, PhotonicModeSpace::source_photon(Side::A, TimeBin(ta), visibility));
                    v = fock.create(v, PhotonicModeSpace::source_photon(Side::B, TimeBin(tb), visibility));
                    const int col = ((sa * 2 + ta) * 2 + sb) * 2 + tb;
                    iso.block((sa * 2 + sb) * f, col, f, 1) = v;
                }
    return iso;
}

inline void check_source_state(const QuantumState& s) {
    const auto& subs = s.subsystems();
    const bool ok = subs.size() == 4 && subs[0].name == "spin_A" && subs[1].name == "bin_A" &&
                    subs[2].name == "spin_B" && subs[3].name == "bin_B";
    if (!ok || s.dim() != 16)
        throw PhotonicsError("herald expects a (spin_A, bin_A, spin_B, bin_B) state");
}

/// Ensemble decomposition of the source state propagated through the beam
/// splitter: columns are sqrt(weight) * output vectors.
inline Matrix propagate_sources(const QuantumState& sources, const PhotonicModeSpace& space, double visibility) {
    check_source_state(sources);
    const Matrix iso = source_isometry(space, visibility);
    Matrix ensemble;
    if (sources.is_pure()) {
        ensemble = sources.amplitudes();
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> es(sources.density());
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()(i) > 1e-15) keep.push_back(i);
        ensemble.resize(16, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j)
            ensemble.col(static_cast<Eigen::Index>(j)) = std::sqrt(es.eigenvalues()(keep[j])) * es.eigenvectors().col(keep[j]);
    }
    Matrix out = iso * ensemble;
    const auto f = static_cast<Eigen::Index>(space.dim());
    const Matrix& w = space.beam_splitter_unitary();
    for (Eigen::Index c = 0; c < out.cols(); ++c)
        for (Eigen::Index s = 0; s < 4; ++s) out.block(s * f, c, f, 1) = w * out.block(s * f, c, f, 1);
    return out;
}

}  // namespace detail

/// Full distribution of detected click patterns at C for unit-efficiency,
/// noiseless detectors. Probabilities sum to one.
inline std::vector<DetectionOutcome> detection_distribution(const QuantumState& sources, const InterferenceModel& model,
                                                            const PhotonicModeSpace& space = PhotonicModeSpace()) {
    model.validate();
    const Matrix out = detail::propagate_sources(sources, space, model.visibility);
    const auto f = static_cast<Eigen::Index>(space.dim());
    std::map<PhotonicModeSpace::ClickCounts, double> dist;
    for (Eigen::Index k = 0; k < f; ++k) {
        double p = 0.0;
        for (Eigen::Index s = 0; s < 4; ++s) p += out.row(s * f + k).squaredNorm();
        if (p > 0.0) dist[space.clicks(static_cast<std::size_t>(k))] += p;
    }
    std::vector<DetectionOutcome> result;
    for (const auto& [c, p] : dist) result.push_back({c, p});
    return result;
}

/// Conditions the two spins on a herald pattern at C. Detector efficiency
/// scales true coincidences; dark counts and laser leakage add independent
/// false clicks whose heralds leave the spins in their unheralded mixture.
inline HeraldResult herald(const QuantumState& sources, const InterferenceModel& model, const HeraldPattern& pattern,
                           const PhotonicModeSpace& space = PhotonicModeSpace()) {
    model.validate();
    pattern.validate();
    const Matrix out = detail::propagate_sources(sources, space, model.visibility);
    const auto f = static_cast<Eigen::Index>(space.dim());

    // marginal probability that each detector slot sees a real photon
    std::array<double, 4> real_click{};
    for (Eigen::Index k = 0; k < f; ++k) {
        const auto c = space.clicks(static_cast<std::size_t>(k));
        double p = 0.0;
        for (Eigen::Index s = 0; s < 4; ++s) p += out.row(s * f + k).squaredNorm();
        for (std::size_t sl = 0; sl < 4; ++sl)
            if (c[sl] > 0) real_click[sl] += p;
    }

    Matrix z_b = detail::kron(Matrix(Matrix::Identity(2, 2)), pauli_z());
    Matrix rho_true = Matrix::Zero(4, 4);
    double p_true = 0.0, p_false = 0.0;
    const double false_click = std::min(1.0, model.dark_count_probability + model.laser_leakage_probability);

    for (const auto& cfg : pattern.configs) {
        const auto want = cfg.counts();
        const double eta = model.efficiency(cfg.clicks[0].second) * model.efficiency(cfg.clicks[1].second);
        // spin-major reshaped amplitudes restricted to matching Fock states
        Matrix spins = Matrix::Zero(4, 4);
        for (Eigen::Index k = 0; k < f; ++k) {
            if (space.clicks(static_cast<std::size_t>(k)) != want) continue;
            Matrix block(4, out.cols());
            for (Eigen::Index s = 0; s < 4; ++s) block.row(s) = out.row(s * f + k);
            spins += block * block.adjoint();
        }
        if (cfg.z_correction_on_b) spins = z_b * spins * z_b;
        rho_true += eta * spins;
        p_true += eta * spins.trace().real();

        if (false_click > 0.0) {
            double m = 0.0;
            for (const auto& [t, p] : cfg.clicks)
                m += model.efficiency(p) * real_click[PhotonicModeSpace::slot(p, t)];
            p_false += false_click * m + false_click * false_click;
        }
    }

    const double total = p_true + p_false;
    if (!(total > 1e-300)) throw UnheraldableError("herald pattern has zero probability for this input");

    Matrix rho = rho_true;
    if (p_false > 0.0) {
        const Matrix mix = partial_trace(sources, {"spin_A", "spin_B"}).density();
        rho += p_false * mix;
    }
    rho /= total;
    rho = 0.5 * (rho + rho.adjoint());
    auto spins = QuantumState::mixed(rho, {{"A", 2}, {"B", 2}});
    const double fid = spins.fidelity(singlet_vector());
    return {total, std::move(spins), fid};
}

/// Heralded spin-spin state for the given error bundle.
inline HeraldResult heralded_state(const SpinPhotonErrorModel& errors, const InterferenceModel& model,
                                   const HeraldPattern& pattern = HeraldPattern::psi_minus(),
                                   const PhotonicModeSpace& space = PhotonicModeSpace()) {
    return herald(tensor(spin_photon_state(Side::A, errors), spin_photon_state(Side::B, errors)), model, pattern, space);
}

struct VisibilityEstimate {
    double visibility;
    double sigma;
};

/// V = 1 - N_ind / N_dist with binomial propagation on the ratio.
inline VisibilityEstimate hom_visibility(std::uint64_t n_indistinguishable, std::uint64_t n_distinguishable) {
    if (n_distinguishable == 0) throw PhotonicsError("visibility undefined: no distinguishable-photon coincidences");
    const double r = static_cast<double>(n_indistinguishable) / static_cast<double>(n_distinguishable);
    const double var = r * std::max(0.0, 1.0 - r) / static_cast<double>(n_distinguishable);
    return {1.0 - r, std::sqrt(var)};
}

}  // namespace bellsim
