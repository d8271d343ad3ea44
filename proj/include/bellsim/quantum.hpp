// quantum.hpp
// Dense states, observables and channels on small tensor-product Hilbert spaces.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace bellsim {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

namespace tolerance {
inline constexpr double validity = 1e-10;
inline constexpr double psd_floor = -1e-9;
inline constexpr double closed_form = 1e-12;
}  // namespace tolerance

inline constexpr std::size_t default_dimension_cap = 4096;

class QuantumError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CapacityError : public QuantumError {
public:
    using QuantumError::QuantumError;
};

struct Subsystem {
    std::string name;
    std::size_t dim = 2;

    friend bool operator==(const Subsystem&, const Subsystem&) = default;
};

namespace detail {

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

inline std::size_t product_dim(const std::vector<Subsystem>& subs) {
    std::size_t d = 1;
    for (const auto& s : subs) d *= s.dim;
    return d;
}

inline double hermiticity_defect(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline double min_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace detail

/// A normalized state on a labelled tensor product space, stored either as an
/// amplitude vector or as a density matrix. Constructors validate the state
/// invariants and throw QuantumError on violation.
class QuantumState {
public:
    static QuantumState pure(Vector amplitudes, std::vector<Subsystem> labels,
                             std::size_t cap = default_dimension_cap) {
        check_labels(labels, static_cast<std::size_t>(amplitudes.size()), cap);
        const double norm = amplitudes.norm();
        if (std::abs(norm - 1.0) > tolerance::validity)
            throw QuantumError("amplitude vector is not normalized (norm " + std::to_string(norm) + ")");
        return QuantumState(std::move(amplitudes), std::move(labels));
    }

    static QuantumState mixed(Matrix rho, std::vector<Subsystem> labels,
                              std::size_t cap = default_dimension_cap) {
        if (rho.rows() != rho.cols()) throw QuantumError("density matrix must be square");
        check_labels(labels, static_cast<std::size_t>(rho.rows()), cap);
        if (detail::hermiticity_defect(rho) > tolerance::validity)
            throw QuantumError("density matrix is not Hermitian");
        const double tr = rho.trace().real();
        if (std::abs(tr - 1.0) > tolerance::validity)
            throw QuantumError("density matrix trace is " + std::to_string(tr));
        if (detail::min_eigenvalue(rho) < tolerance::psd_floor)
            throw QuantumError("density matrix has a negative eigenvalue");
        return QuantumState(std::move(rho), std::move(labels));
    }

    static QuantumState basis(std::vector<Subsystem> labels, std::size_t index) {
        const std::size_t d = detail::product_dim(labels);
        if (index >= d) throw QuantumError("basis index out of range");
        Vector v = Vector::Zero(static_cast<Eigen::Index>(d));
        v(static_cast<Eigen::Index>(index)) = 1.0;
        return pure(std::move(v), std::move(labels));
    }

    static QuantumState maximally_mixed(std::vector<Subsystem> labels) {
        const auto d = static_cast<Eigen::Index>(detail::product_dim(labels));
        Matrix rho = Matrix::Identity(d, d) / static_cast<double>(d);
        return mixed(std::move(rho), std::move(labels));
    }

    std::size_t dim() const { return dim_; }
    bool is_pure() const { return std::holds_alternative<Vector>(repr_); }
    const std::vector<Subsystem>& subsystems() const { return labels_; }

    const Vector& amplitudes() const {
        if (!is_pure()) throw QuantumError("state is stored as a density matrix");
        return std::get<Vector>(repr_);
    }

    Matrix density() const {
        if (is_pure()) {
            const auto& v = std::get<Vector>(repr_);
            return v * v.adjoint();
        }
        return std::get<Matrix>(repr_);
    }

    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i].name == name) return i;
        throw QuantumError("unknown subsystem '" + std::string(name) + "'");
    }

    /// <psi| rho |psi> for a normalized target vector.
    double fidelity(const Vector& target) const {
        if (static_cast<std::size_t>(target.size()) != dim_) throw QuantumError("fidelity: dimension mismatch");
        if (is_pure()) return std::norm(target.dot(std::get<Vector>(repr_)));
        return (target.adjoint() * std::get<Matrix>(repr_) * target)(0, 0).real();
    }

private:
    QuantumState(Vector v, std::vector<Subsystem> labels)
        : dim_(static_cast<std::size_t>(v.size())), labels_(std::move(labels)), repr_(std::move(v)) {}
    QuantumState(Matrix m, std::vector<Subsystem> labels)
        : dim_(static_cast<std::size_t>(m.rows())), labels_(std::move(labels)), repr_(std::move(m)) {}

    static void check_labels(const std::vector<Subsystem>& labels, std::size_t dim, std::size_t cap) {
        if (dim == 0) throw QuantumError("state dimension must be positive");
        if (dim > cap)
            throw CapacityError("state dimension " + std::to_string(dim) + " exceeds cap " + std::to_string(cap));
        if (labels.empty()) throw QuantumError("state needs at least one subsystem label");
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i].dim == 0) throw QuantumError("subsystem '" + labels[i].name + "' has dimension 0");
            for (std::size_t j = i + 1; j < labels.size(); ++j)
                if (labels[i].name == labels[j].name)
                    throw QuantumError("duplicate subsystem label '" + labels[i].name + "'");
        }
        if (detail::product_dim(labels) != dim)
            throw QuantumError("product of subsystem dimensions does not match state dimension");
    }

    std::size_t dim_;
    std::vector<Subsystem> labels_;
    std::variant<Vector, Matrix> repr_;
};

// Spin convention: index 0 is |up> (m_s = 0), index 1 is |down> (m_s = -1).
inline QuantumState spin_up(std::string name = "spin") {
    return QuantumState::basis({{std::move(name), 2}}, 0);
}

inline QuantumState spin_down(std::string name = "spin") {
    return QuantumState::basis({{std::move(name), 2}}, 1);
}

/// (|up,down> - |down,up>)/sqrt(2)
inline Vector singlet_vector() {
    Vector v = Vector::Zero(4);
    v(1) = std::numbers::sqrt2 / 2;
    v(2) = -std::numbers::sqrt2 / 2;
    return v;
}

inline QuantumState singlet(std::string a = "A", std::string b = "B") {
    return QuantumState::pure(singlet_vector(), {{std::move(a), 2}, {std::move(b), 2}});
}

class Observable {
public:
    explicit Observable(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw QuantumError("observable must be square");
        if (detail::hermiticity_defect(m_) > tolerance::validity) throw QuantumError("observable is not Hermitian");
    }

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    const Matrix& matrix() const { return m_; }

private:
    Matrix m_;
};

inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

/// Spin observable along cos(theta) Z + sin(theta) X.
inline Observable bloch_observable(double theta) {
    if (!std::isfinite(theta)) throw QuantumError("bloch_observable: angle must be finite");
    return Observable(std::cos(theta) * pauli_z() + std::sin(theta) * pauli_x());
}

/// Kraus representation of a CPTP map on one subsystem dimension.
class Channel {
public:
    explicit Channel(std::vector<Matrix> kraus) : kraus_(std::move(kraus)) {
        if (kraus_.empty()) throw QuantumError("channel needs at least one Kraus operator");
        const auto d = kraus_.front().cols();
        Matrix sum = Matrix::Zero(d, d);
        for (const auto& k : kraus_) {
            if (k.rows() != d || k.cols() != d) throw QuantumError("Kraus operators must be square and equal-sized");
            sum += k.adjoint() * k;
        }
        if ((sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > tolerance::validity)
            throw QuantumError("Kraus operators do not satisfy completeness (map is not trace preserving)");
    }

    std::size_t dim() const { return static_cast<std::size_t>(kraus_.front().rows()); }
    const std::vector<Matrix>& kraus() const { return kraus_; }

    static Channel identity(std::size_t d = 2) {
        const auto n = static_cast<Eigen::Index>(d);
        return Channel({Matrix::Identity(n, n)});
    }

    static Channel bit_flip(double p) {
        check_probability(p);
        return Channel({std::sqrt(1 - p) * Matrix::Identity(2, 2), std::sqrt(p) * pauli_x()});
    }

    static Channel phase_flip(double p) {
        check_probability(p);
        return Channel({std::sqrt(1 - p) * Matrix::Identity(2, 2), std::sqrt(p) * pauli_z()});
    }

    /// rho -> (1-p) rho + p I/2
    static Channel depolarizing(double p) {
        check_probability(p);
        Matrix y(2, 2);
        y << 0, cplx(0, -1), cplx(0, 1), 0;
        const double s = std::sqrt(p / 4);
        return Channel({std::sqrt(1 - 3 * p / 4) * Matrix::Identity(2, 2), s * pauli_x(), s * y, s * pauli_z()});
    }

private:
    static void check_probability(double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw QuantumError("channel probability must lie in [0,1]");
    }

    std::vector<Matrix> kraus_;
};

/// I (x) ... (x) op (x) ... (x) I with op on subsystem `index`.
inline Matrix embed(const Matrix& op, const std::vector<Subsystem>& subs, std::size_t index) {
    if (index >= subs.size() || static_cast<std::size_t>(op.rows()) != subs[index].dim)
        throw QuantumError("embed: operator does not match subsystem");
    std::size_t left = 1, right = 1;
    for (std::size_t i = 0; i < index; ++i) left *= subs[i].dim;
    for (std::size_t i = index + 1; i < subs.size(); ++i) right *= subs[i].dim;
    const auto l = static_cast<Eigen::Index>(left), r = static_cast<Eigen::Index>(right);
    return detail::kron(detail::kron(Matrix::Identity(l, l), op), Matrix::Identity(r, r));
}

inline QuantumState tensor(const QuantumState& s1, const QuantumState& s2,
                           std::size_t cap = default_dimension_cap) {
    if (s1.dim() > cap / s2.dim() || s1.dim() * s2.dim() > cap)
        throw CapacityError("tensor product dimension " + std::to_string(s1.dim()) + "x" +
                            std::to_string(s2.dim()) + " exceeds cap " + std::to_string(cap));
    auto labels = s1.subsystems();
    labels.insert(labels.end(), s2.subsystems().begin(), s2.subsystems().end());
    if (s1.is_pure() && s2.is_pure())
        return QuantumState::pure(detail::kron(s1.amplitudes(), s2.amplitudes()), std::move(labels), cap);
    return QuantumState::mixed(detail::kron(s1.density(), s2.density()), std::move(labels), cap);
}

inline QuantumState apply_channel(const QuantumState& state, const Channel& channel, std::string_view subsystem) {
    const auto idx = state.index_of(subsystem);
    if (state.subsystems()[idx].dim != channel.dim())
        throw QuantumError("channel dimension does not match subsystem '" + std::string(subsystem) + "'");
    const Matrix rho = state.density();
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (const auto& k : channel.kraus()) {
        const Matrix big = embed(k, state.subsystems(), idx);
        out.noalias() += big * rho * big.adjoint();
    }
    out = 0.5 * (out + out.adjoint());
    return QuantumState::mixed(std::move(out), state.subsystems());
}

/// Reduced state on the named subsystems. Kept subsystems retain their
/// original order in the state.
inline QuantumState partial_trace(const QuantumState& state, const std::vector<std::string>& keep) {
    const auto& subs = state.subsystems();
    std::vector<bool> kept(subs.size(), false);
    for (const auto& name : keep) kept[state.index_of(name)] = true;

    std::vector<Subsystem> kept_labels;
    std::size_t dk = 1, dt = 1;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (kept[i]) {
            kept_labels.push_back(subs[i]);
            dk *= subs[i].dim;
        } else {
            dt *= subs[i].dim;
        }
    }
    if (kept_labels.empty()) throw QuantumError("partial_trace: nothing to keep");

    // map each full index onto (kept index, traced index)
    const std::size_t d = state.dim();
    std::vector<std::size_t> ki(d), ti(d);
    for (std::size_t full = 0; full < d; ++full) {
        std::size_t rem = full, k = 0, t = 0, kmul = 1, tmul = 1;
        for (std::size_t i = subs.size(); i-- > 0;) {
            const std::size_t digit = rem % subs[i].dim;
            rem /= subs[i].dim;
            if (kept[i]) {
                k += digit * kmul;
                kmul *= subs[i].dim;
            } else {
                t += digit * tmul;
                tmul *= subs[i].dim;
            }
        }
        ki[full] = k;
        ti[full] = t;
    }

    const auto n = static_cast<Eigen::Index>(dk);
    Matrix out = Matrix::Zero(n, n);
    if (state.is_pure()) {
        Matrix reshaped = Matrix::Zero(n, static_cast<Eigen::Index>(dt));
        const auto& amp = state.amplitudes();
        for (std::size_t full = 0; full < d; ++full)
            reshaped(static_cast<Eigen::Index>(ki[full]), static_cast<Eigen::Index>(ti[full])) =
                amp(static_cast<Eigen::Index>(full));
        out = reshaped * reshaped.adjoint();
    } else {
        const Matrix rho = state.density();
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c)
                if (ti[r] == ti[c])
                    out(static_cast<Eigen::Index>(ki[r]), static_cast<Eigen::Index>(ki[c])) +=
                        rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    out = 0.5 * (out + out.adjoint());
    return QuantumState::mixed(std::move(out), std::move(kept_labels));
}

/// Tr(rho O) for an observable on the full space.
inline double expectation(const QuantumState& state, const Observable& obs) {
    if (obs.dim() != state.dim()) throw QuantumError("expectation: dimension mismatch");
    if (state.is_pure()) {
        const auto& v = state.amplitudes();
        return v.dot(obs.matrix() * v).real();
    }
    return (state.density() * obs.matrix()).trace().real();
}

/// Tr(rho (A (x) B)) on a two-qubit state.
inline double expectation(const QuantumState& state, const Observable& a, const Observable& b) {
    if (state.subsystems().size() != 2 || state.dim() != 4 || a.dim() != 2 || b.dim() != 2)
        throw QuantumError("expectation: expected a two-qubit state and single-qubit observables");
    return expectation(state, Observable(detail::kron(a.matrix(), b.matrix())));
}

}  // namespace bellsim
