#include "bellsim/photonics.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bellsim;

namespace {

const PhotonicModeSpace& space() {
    static const PhotonicModeSpace s;
    return s;
}

QuantumState sources(const SpinPhotonErrorModel& err = SpinPhotonErrorModel::none()) {
    return tensor(spin_photon_state(Side::A, err), spin_photon_state(Side::B, err));
}

InterferenceModel ideal(double v = 1.0) {
    InterferenceModel m;
    m.visibility = v;
    return m;
}

}  // namespace

TEST(SpinPhotonState, IdealIsBellStateWithPerfectCorrelation) {
    const auto s = spin_photon_state(Side::A, SpinPhotonErrorModel::none());
    ASSERT_TRUE(s.is_pure());
    EXPECT_NEAR(std::norm(s.amplitudes()(0)), 0.5, 1e-15);  // up, early
    EXPECT_NEAR(std::norm(s.amplitudes()(3)), 0.5, 1e-15);  // down, late
    EXPECT_EQ(s.subsystems()[0].name, "spin_A");
    EXPECT_EQ(s.subsystems()[1].name, "bin_A");
}

TEST(SpinPhotonState, ConditionalErrorsPerBin) {
    SpinPhotonErrorModel err{0.014, 0.016, 0.0, 0.0};
    const Matrix rho = spin_photon_state(Side::A, err).density();
    // index = 2 * spin + bin
    const double p_early = rho(0, 0).real() + rho(2, 2).real();
    const double p_late = rho(1, 1).real() + rho(3, 3).real();
    EXPECT_NEAR(rho(2, 2).real() / p_early, 0.014, 1e-12);  // down given early
    EXPECT_NEAR(rho(1, 1).real() / p_late, 0.016, 1e-12);   // up given late
}

TEST(SpinPhotonState, HalfErrorDecorrelates) {
    SpinPhotonErrorModel err{0.5, 0.5, 0.5, 0.5};
    const Matrix rho = spin_photon_state(Side::B, err).density();
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(rho(i, i).real(), 0.25, 1e-12);
}

TEST(SpinPhotonState, RejectsOutOfRangeErrors) {
    EXPECT_THROW(spin_photon_state(Side::A, SpinPhotonErrorModel{0.6, 0, 0, 0}), PhotonicsError);
}

TEST(BeamSplitter, SinglePhotonSplitsEvenly) {
    const auto& fock = space().fock();
    Vector v = fock.create(fock.vacuum(), {{PhotonicModeSpace::mode(Port::A_in, TimeBin::early, Sector::shared), 1.0}});
    const auto out = beam_splitter(QuantumState::pure(v, {space().subsystem()}), space());
    FockSpace::Occupation o1(PhotonicModeSpace::mode_count, 0), o2 = o1;
    o1[PhotonicModeSpace::mode(Port::C_out1, TimeBin::early, Sector::shared)] = 1;
    o2[PhotonicModeSpace::mode(Port::C_out2, TimeBin::early, Sector::shared)] = 1;
    EXPECT_NEAR(std::norm(out.amplitudes()(static_cast<Eigen::Index>(fock.index(o1)))), 0.5, 1e-12);
    EXPECT_NEAR(std::norm(out.amplitudes()(static_cast<Eigen::Index>(fock.index(o2)))), 0.5, 1e-12);
}

TEST(BeamSplitter, HongOuMandelDip) {
    const auto in = two_photon_input(TimeBin::early, TimeBin::early, 1.0, space());
    EXPECT_NEAR(coincidence_probability(beam_splitter(in, space()), space()), 0.0, 1e-12);
}

TEST(BeamSplitter, DistinguishablePhotonsHalfCoincidence) {
    const auto in = two_photon_input(TimeBin::early, TimeBin::early, 0.0, space());
    EXPECT_NEAR(coincidence_probability(beam_splitter(in, space()), space()), 0.5, 1e-12);
}

TEST(BeamSplitter, CoincidenceMatchesFirstQuantizedOracle) {
    for (double v : {0.0, 0.1, 0.3, 0.5, 0.9, 0.95, 1.0}) {
        const auto in = two_photon_input(TimeBin::early, TimeBin::early, v, space());
        const double p = coincidence_probability(beam_splitter(in, space()), space());
        EXPECT_NEAR(p, oracle::hom_coincidence(v), 1e-12) << v;
        EXPECT_NEAR(p, (1 - v) / 2, 1e-12) << v;
    }
}

TEST(BeamSplitter, UnitaryOnRandomInputs) {
    const Matrix& w = space().beam_splitter_unitary();
    const auto n = static_cast<Eigen::Index>(space().dim());
    EXPECT_LT((w.adjoint() * w - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        const Vector v = oracle::random_pure(static_cast<int>(n), rng);
        EXPECT_NEAR((w * v).norm(), 1.0, 1e-10);
    }
}

TEST(BeamSplitter, RejectsTooManyPhotons) {
    const PhotonicModeSpace wide(3);
    const auto& fock = wide.fock();
    const auto m = PhotonicModeSpace::mode(Port::A_in, TimeBin::early, Sector::shared);
    Vector v = fock.create(fock.create(fock.create(fock.vacuum(), {{m, 1.0}}), {{m, 1.0}}), {{m, 1.0}});
    v /= v.norm();
    EXPECT_THROW(beam_splitter(QuantumState::pure(v, {wide.subsystem()}), wide), PhotonicsError);
    EXPECT_THROW(PhotonicModeSpace(1), PhotonicsError);
}

TEST(Herald, IdealGivesQuarterAndSinglet) {
    const auto h = herald(sources(), ideal(), HeraldPattern::psi_minus(), space());
    EXPECT_NEAR(h.probability, 0.25, 1e-10);
    EXPECT_NEAR(h.fidelity, 1.0, 1e-10);
}

TEST(Herald, FidelityLawAgainstEnumeration) {
    for (double v : {0.0, 0.1, 0.2, 0.5, 0.9, 1.0}) {
        const auto h = herald(sources(), ideal(v), HeraldPattern::psi_minus(), space());
        const auto ref = oracle::herald_enumeration(v);
        EXPECT_NEAR(h.fidelity, (1 + v) / 2, 1e-9) << v;
        EXPECT_NEAR(h.fidelity, ref.fidelity, 1e-9) << v;
        EXPECT_NEAR(h.probability, ref.probability, 1e-9) << v;
        Matrix ref_rho = ref.rho;
        EXPECT_LT((h.spins.density() - ref_rho).cwiseAbs().maxCoeff(), 1e-9) << v;
    }
}

TEST(Herald, SpinPhotonErrorsAgainstEnumeration) {
    const SpinPhotonErrorModel err{0.014, 0.008, 0.016, 0.007};
    const auto h = herald(sources(err), ideal(0.9), HeraldPattern::psi_minus(), space());
    const auto ref = oracle::herald_enumeration(0.9, {0.014, 0.008, 0.016, 0.007});
    EXPECT_NEAR(h.fidelity, ref.fidelity, 1e-9);
    EXPECT_NEAR(h.probability, ref.probability, 1e-9);
    EXPECT_NEAR(h.fidelity, 0.92, 0.03);
}

TEST(Herald, DistinguishableLimitIsClassicalMixture) {
    const auto h = herald(sources(), ideal(0.0), HeraldPattern::psi_minus(), space());
    const Matrix rho = h.spins.density();
    EXPECT_NEAR(rho(1, 1).real(), 0.5, 1e-10);
    EXPECT_NEAR(rho(2, 2).real(), 0.5, 1e-10);
    EXPECT_NEAR(std::abs(rho(1, 2)), 0.0, 1e-10);
}

TEST(Herald, FidelityMonotoneInVisibility) {
    double last = -1;
    for (int i = 0; i <= 10; ++i) {
        const double f = herald(sources(), ideal(i / 10.0), HeraldPattern::psi_minus(), space()).fidelity;
        EXPECT_GE(f, last - 1e-12);
        last = f;
    }
}

TEST(Herald, PortSwappedPatternsGiveSameState) {
    const auto p1 = HeraldPattern::single(TimeBin::early, Port::C_out1, TimeBin::late, Port::C_out2);
    const auto p2 = HeraldPattern::single(TimeBin::early, Port::C_out2, TimeBin::late, Port::C_out1);
    const auto src = sources(SpinPhotonErrorModel{});
    const auto h1 = herald(src, ideal(0.9), p1, space());
    const auto h2 = herald(src, ideal(0.9), p2, space());
    EXPECT_NEAR(h1.probability, h2.probability, 1e-12);
    EXPECT_LT((h1.spins.density() - h2.spins.density()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Herald, AllDetectionPatternsSumToOne) {
    for (double v : {0.0, 0.5, 1.0}) {
        const auto dist = detection_distribution(sources(SpinPhotonErrorModel{}), ideal(v), space());
        double total = 0;
        for (const auto& d : dist) total += d.probability;
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Herald, SamePortPatternHeraldsPsiPlusAndCorrectionRestoresSinglet) {
    const auto plus = herald(sources(), ideal(), HeraldPattern::psi_plus(false), space());
    EXPECT_NEAR(plus.probability, 0.25, 1e-10);
    EXPECT_NEAR(plus.fidelity, 0.0, 1e-10);
    const auto corrected = herald(sources(), ideal(), HeraldPattern::psi_plus(true), space());
    EXPECT_NEAR(corrected.fidelity, 1.0, 1e-10);
    const auto both = herald(sources(), ideal(), HeraldPattern::psi_minus_and_corrected_plus(), space());
    EXPECT_NEAR(both.probability, 0.5, 1e-10);
}

TEST(Herald, DetectorEfficiencyScalesProbabilityOnly) {
    InterferenceModel m = ideal(0.9);
    m.efficiency_out1 = 0.5;
    m.efficiency_out2 = 0.4;
    const auto h = herald(sources(), m, HeraldPattern::psi_minus(), space());
    const auto ref = herald(sources(), ideal(0.9), HeraldPattern::psi_minus(), space());
    EXPECT_NEAR(h.probability, 0.2 * ref.probability, 1e-12);
    EXPECT_NEAR(h.fidelity, ref.fidelity, 1e-10);
}

TEST(Herald, FalseClicksDegradeFidelity) {
    InterferenceModel m = ideal(1.0);
    m.dark_count_probability = 0.01;
    const auto h = herald(sources(), m, HeraldPattern::psi_minus(), space());
    EXPECT_GT(h.probability, 0.25);
    EXPECT_LT(h.fidelity, 1.0);
}

TEST(Herald, ZeroProbabilityIsUnheraldable) {
    InterferenceModel m = ideal(1.0);
    m.efficiency_out1 = 0.0;
    EXPECT_THROW(herald(sources(), m, HeraldPattern::psi_minus(), space()), UnheraldableError);
}

TEST(Herald, PatternNeedsEarlyAndLate) {
    const auto bad = HeraldPattern::single(TimeBin::early, Port::C_out1, TimeBin::early, Port::C_out2);
    EXPECT_THROW(herald(sources(), ideal(), bad, space()), PhotonicsError);
}

TEST(HomVisibility, FigureCounts) {
    const auto v = hom_visibility(3, 28);
    EXPECT_NEAR(v.visibility, 0.8928571428571429, 1e-12);
    EXPECT_NEAR(v.sigma, 0.05845122059892653, 1e-12);
}

TEST(HomVisibility, Limits) {
    EXPECT_DOUBLE_EQ(hom_visibility(0, 40).visibility, 1.0);
    EXPECT_DOUBLE_EQ(hom_visibility(40, 40).visibility, 0.0);
    EXPECT_THROW(hom_visibility(3, 0), PhotonicsError);
}
