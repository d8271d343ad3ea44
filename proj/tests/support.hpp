// Independent reference calculations used by the tests. None of these call
// into the library code they check.

#pragma once

#include <gmpxx.h>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

/// P(Binomial(n, q) >= k) in exact rational arithmetic, q = num/den.
inline double binomial_tail_exact(unsigned long k, unsigned long n, unsigned long q_num, unsigned long q_den) {
    const mpq_class q(q_num, q_den);
    const mpq_class r = 1 - q;
    mpq_class sum = 0;
    for (unsigned long j = k; j <= n; ++j) {
        mpz_class c;
        mpz_bin_uiui(c.get_mpz_t(), n, j);
        mpz_class qn, qd, rn, rd;
        mpz_pow_ui(qn.get_mpz_t(), q.get_num_mpz_t(), j);
        mpz_pow_ui(qd.get_mpz_t(), q.get_den_mpz_t(), j);
        mpz_pow_ui(rn.get_mpz_t(), r.get_num_mpz_t(), n - j);
        mpz_pow_ui(rd.get_mpz_t(), r.get_den_mpz_t(), n - j);
        sum += mpq_class(c * qn * rn, qd * rd);
    }
    sum.canonicalize();
    return sum.get_d();
}

/// Two-spin density matrix in the |A B> basis (index 2 sA + sB, 0 = up).
using Spin2 = Eigen::Matrix4cd;

struct HeraldOracle {
    double probability = 0;
    Spin2 rho = Spin2::Zero();  // normalized
    double fidelity = 0;        // to (|ud> - |du>)/sqrt 2
};

/// First-quantized enumeration of the entanglement swap. Each source emits
/// (|up,early> + |down,late>)/sqrt 2, a spin flip then happens with a
/// probability conditioned on the bin, and the photon carries an internal
/// label: shared with amplitude V^(1/4), own private label otherwise. The
/// beam splitter sends A to (o1 + o2)/sqrt 2 and B to (o1 - o2)/sqrt 2. The
/// herald is one early and one late click in different output ports; the
/// internal labels are traced out.
inline HeraldOracle herald_enumeration(double visibility, std::array<double, 4> flips = {0, 0, 0, 0}) {
    const double alpha = std::pow(visibility, 0.25);
    const double beta = std::sqrt(1 - std::sqrt(visibility));
    // internal labels: 0 shared, 1 private A, 2 private B
    struct Leg {
        int port;
        int label;
        cplx amp;
    };
    auto legs = [&](int side) {
        std::vector<Leg> out;
        const double sgn = side == 0 ? 1.0 : -1.0;
        for (int port = 1; port <= 2; ++port) {
            const double pa = port == 1 ? 1.0 : sgn;
            out.push_back({port, 0, pa / std::sqrt(2.0) * alpha});
            out.push_back({port, 1 + side, pa / std::sqrt(2.0) * beta});
        }
        return out;
    };

    // Kraus branches per side: (weight, flip spin?) for each emitted bin
    struct Branch {
        double w_early, w_late;
        bool flip;
    };
    auto branches = [&](int side) {
        const double fe = flips[static_cast<std::size_t>(2 * side)];
        const double fl = flips[static_cast<std::size_t>(2 * side + 1)];
        return std::vector<Branch>{{std::sqrt(1 - fe), std::sqrt(1 - fl), false},
                                   {std::sqrt(fe), 0.0, true},
                                   {0.0, std::sqrt(fl), true}};
    };

    HeraldOracle out;
    Spin2 rho = Spin2::Zero();
    for (const auto& ba : branches(0))
        for (const auto& bb : branches(1)) {
            // outcome key: (early port, early label, late port, late label) -> spin amplitudes
            std::map<std::tuple<int, int, int, int>, Eigen::Vector4cd> outcomes;
            for (int sa = 0; sa < 2; ++sa)
                for (int sb = 0; sb < 2; ++sb) {
                    const int ta = sa, tb = sb;  // up -> early (0), down -> late (1)
                    if (ta == tb) continue;      // same bin: cannot give one early and one late click
                    const double wa = (ta == 0 ? ba.w_early : ba.w_late);
                    const double wb = (tb == 0 ? bb.w_early : bb.w_late);
                    if (wa == 0 || wb == 0) continue;
                    const int fa = ba.flip ? 1 - sa : sa;
                    const int fb = bb.flip ? 1 - sb : sb;
                    for (const auto& la : legs(0))
                        for (const auto& lb : legs(1)) {
                            if (la.port == lb.port) continue;
                            const auto key = ta == 0 ? std::make_tuple(la.port, la.label, lb.port, lb.label)
                                                     : std::make_tuple(lb.port, lb.label, la.port, la.label);
                            auto [it, fresh] = outcomes.try_emplace(key, Eigen::Vector4cd::Zero());
                            it->second(2 * fa + fb) += 0.5 * wa * wb * la.amp * lb.amp;
                        }
                }
            for (const auto& [key, v] : outcomes) rho += v * v.adjoint();
        }
    out.probability = rho.trace().real();
    out.rho = rho / out.probability;
    Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
    psi(1) = 1 / std::sqrt(2.0);
    psi(2) = -1 / std::sqrt(2.0);
    out.fidelity = (psi.adjoint() * out.rho * psi)(0, 0).real();
    return out;
}

/// Probability of one click in each output port for two photons entering
/// A-in and B-in in the same time bin with the given visibility.
inline double hom_coincidence(double visibility) {
    const double alpha = std::pow(visibility, 0.25);
    const double beta = std::sqrt(1 - std::sqrt(visibility));
    // labels 0 shared, 1 private A, 2 private B; modes (port, label)
    std::map<std::pair<std::pair<int, int>, std::pair<int, int>>, cplx> amp;
    const std::array<std::pair<int, double>, 2> la{{{0, alpha}, {1, beta}}};
    const std::array<std::pair<int, double>, 2> lb{{{0, alpha}, {2, beta}}};
    for (int pa = 1; pa <= 2; ++pa)
        for (int pb = 1; pb <= 2; ++pb)
            for (auto [xa, ca] : la)
                for (auto [xb, cb] : lb) {
                    if (pa == pb) continue;
                    const double sa = 1 / std::sqrt(2.0);
                    const double sb = (pb == 1 ? 1.0 : -1.0) / std::sqrt(2.0);
                    auto m1 = std::make_pair(pa, xa), m2 = std::make_pair(pb, xb);
                    if (m2 < m1) std::swap(m1, m2);
                    amp[{m1, m2}] += sa * sb * ca * cb;
                }
    double p = 0;
    for (const auto& [k, a] : amp) p += std::norm(a);
    return p;
}

/// Random density matrix (Ginibre) of dimension d.
inline Eigen::MatrixXcd random_density(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = cplx(g(rng), g(rng));
    Eigen::MatrixXcd rho = m * m.adjoint();
    return rho / rho.trace().real();
}

/// Random pure state of dimension d.
inline Eigen::VectorXcd random_pure(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXcd v(d);
    for (int i = 0; i < d; ++i) v(i) = cplx(g(rng), g(rng));
    return v / v.norm();
}

/// Haar-ish random unitary from the QR of a complex Gaussian matrix.
inline Eigen::MatrixXcd random_unitary(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
    return qr.householderQ();
}

/// Largest CHSH value reachable by any projective qubit measurements on a
/// two-qubit state: 2 sqrt(t1^2 + t2^2) over the top singular values of the
/// Pauli correlation matrix.
inline double max_chsh(const Eigen::MatrixXcd& rho) {
    std::array<Eigen::Matrix2cd, 3> p;
    p[0] << 0, 1, 1, 0;
    p[1] << 0, cplx(0, -1), cplx(0, 1), 0;
    p[2] << 1, 0, 0, -1;
    Eigen::Matrix3d t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Eigen::Matrix4cd op;
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) op.block<2, 2>(2 * r, 2 * c) = p[static_cast<std::size_t>(i)](r, c) * p[static_cast<std::size_t>(j)];
            t(i, j) = (rho * op).trace().real();
        }
    const Eigen::Vector3d sv = t.jacobiSvd().singularValues();
    return 2 * std::sqrt(sv(0) * sv(0) + sv(1) * sv(1));
}

/// Singlet correlation <sigma_a (x) sigma_b> for Z-X plane angles.
inline double singlet_correlation(double ta, double tb) { return -std::cos(ta - tb); }

}  // namespace oracle
