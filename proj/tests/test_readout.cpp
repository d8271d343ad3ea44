#include "bellsim/config.hpp"
#include "bellsim/readout.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace bellsim;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(FidelityCurve, ZeroDuration) {
    const auto p = fidelity_vs_duration(default_readout_a(), 0.0);
    EXPECT_DOUBLE_EQ(p.plus, 0.0);
    EXPECT_DOUBLE_EQ(p.minus, 1.0);
    EXPECT_DOUBLE_EQ(p.average, 0.5);
}

TEST(FidelityCurve, LongWindowWithoutNoiseIsPerfect) {
    const ReadoutModel m{1.5, 0.0, 0.0, 3.7};
    const auto p = fidelity_vs_duration(m, 1e3);
    EXPECT_NEAR(p.plus, 1.0, 1e-12);
    EXPECT_NEAR(p.minus, 1.0, 1e-12);
    EXPECT_NEAR(p.average, 1.0, 1e-12);
}

TEST(FidelityCurve, CalibratedAnchors) {
    EXPECT_NEAR(default_readout_a().fidelities().average(), 0.971, 1e-9);
    EXPECT_NEAR(default_readout_b().fidelities().average(), 0.963, 1e-9);
    EXPECT_GT(default_readout_a().fidelities().minus, 0.98);
    EXPECT_GT(default_readout_b().fidelities().minus, 0.98);
}

TEST(FidelityCurve, CalibrationReproducesDefaults) {
    const auto a = calibrate_readout(0.971, 3.7, 1.5, 0.99);
    EXPECT_NEAR(a.dark_rate, default_readout_a().dark_rate, 1e-9);
    EXPECT_NEAR(a.flip_rate, default_readout_a().flip_rate, 1e-7);
    const auto b = calibrate_readout(0.963, 3.7, 1.5, 0.99);
    EXPECT_NEAR(b.flip_rate, default_readout_b().flip_rate, 1e-7);
}

TEST(FidelityCurve, Monotone) {
    const auto m = default_readout_a();
    double fp = -1, fm = 2;
    for (int i = 0; i <= 400; ++i) {
        const auto p = fidelity_vs_duration(m, i * 0.05);
        EXPECT_GE(p.plus, fp - 1e-15);
        EXPECT_LE(p.minus, fm + 1e-15);
        fp = p.plus;
        fm = p.minus;
    }
}

TEST(FidelityCurve, UniqueInteriorMaximum) {
    const auto m = default_readout_b();
    std::vector<double> avg;
    for (int i = 0; i <= 2000; ++i) avg.push_back(fidelity_vs_duration(m, i * 0.02).average);
    const auto best = std::max_element(avg.begin(), avg.end()) - avg.begin();
    EXPECT_GT(best, 0);
    EXPECT_LT(best, static_cast<long>(avg.size()) - 1);
    for (long i = 1; i <= best; ++i) EXPECT_GE(avg[static_cast<std::size_t>(i)], avg[static_cast<std::size_t>(i - 1)]);
    for (long i = best + 1; i < static_cast<long>(avg.size()); ++i)
        EXPECT_LE(avg[static_cast<std::size_t>(i)], avg[static_cast<std::size_t>(i - 1)]);
}

TEST(Povm, CompletenessAndPositivity) {
    for (double fp = 0; fp <= 1.0; fp += 0.05)
        for (double fm = 0; fm <= 1.0; fm += 0.05) {
            const auto p = readout_povm({fp, fm});
            EXPECT_LT((p.plus + p.minus - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_GE(detail::min_eigenvalue(p.plus), -1e-12);
            EXPECT_GE(detail::min_eigenvalue(p.minus), -1e-12);
            for (double t : {0.0, 0.3, pi / 2, -3 * pi / 4}) {
                const auto r = rotated_povm({fp, fm}, t);
                EXPECT_LT((r.plus + r.minus - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
            }
        }
}

TEST(Povm, Examples) {
    const auto perfect = readout_povm({1.0, 1.0});
    EXPECT_NEAR(perfect.plus(0, 0).real(), 1.0, 1e-15);
    EXPECT_NEAR(perfect.plus(1, 1).real(), 0.0, 1e-15);
    const auto a = readout_povm({0.971, 0.99});
    EXPECT_NEAR(expectation(spin_up(), Observable(a.plus)), 0.971, 1e-12);
    const auto flat = readout_povm({0.5, 0.5});
    EXPECT_NEAR(expectation(spin_up(), Observable(flat.plus)), 0.5, 1e-12);
    EXPECT_NEAR(expectation(spin_down(), Observable(flat.plus)), 0.5, 1e-12);
}

TEST(MeasureInBasis, SingletAnticorrelationAfterFirstOutcome) {
    const ReadoutFidelities perfect{1.0, 1.0};
    RngStream rng(9);
    for (int i = 0; i < 200; ++i) {
        const auto ma = measure_in_basis(singlet(), "A", 0.0, perfect, rng);
        const auto mb = measure_in_basis(ma.after, "B", 0.0, perfect, rng);
        EXPECT_EQ(ma.outcome * mb.outcome, -1);
    }
}

TEST(MeasureInBasis, UpAlongXIsFair) {
    const ReadoutFidelities perfect{1.0, 1.0};
    RngStream rng(10);
    const int n = 100000;
    int plus = 0;
    for (int i = 0; i < n; ++i) plus += measure_in_basis(spin_up(), "spin", pi / 2, perfect, rng).outcome == 1;
    const double sigma = std::sqrt(0.25 / n);
    EXPECT_NEAR(plus / double(n), 0.5, 4 * sigma);
}

TEST(MeasureInBasis, BornFrequenciesChiSquare) {
    // noisy readout of a tilted state; 1 degree of freedom, 99.9 % quantile 10.83
    const ReadoutFidelities f{0.952, 0.99};
    Vector v(2);
    v << std::cos(0.4), std::sin(0.4);
    const auto s = QuantumState::pure(v, {{"q", 2}});
    const double theta = 0.3;
    const double p_plus = expectation(s, Observable(rotated_povm(f, theta).plus));
    RngStream rng(12);
    const int n = 100000;
    int plus = 0;
    for (int i = 0; i < n; ++i) plus += measure_in_basis(s, "q", theta, f, rng).outcome == 1;
    const double e1 = n * p_plus, e0 = n * (1 - p_plus);
    const double chi2 = (plus - e1) * (plus - e1) / e1 + ((n - plus) - e0) * ((n - plus) - e0) / e0;
    EXPECT_LT(chi2, 10.83);
}

TEST(MeasureInBasis, JointSamplingReachesTsirelson) {
    const ReadoutFidelities perfect{1.0, 1.0};
    const auto basis = ReadoutBasisSet::with_tilt(0.0);
    RngStream rng(13);
    const int per_cell = 250000;  // 10^6 trials in total
    double s = 0, var = 0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            long sum = 0;
            for (int i = 0; i < per_cell; ++i) {
                const auto ma = measure_in_basis(singlet(), "A", basis.angle_a(a), perfect, rng);
                const auto mb = measure_in_basis(ma.after, "B", basis.angle_b(b), perfect, rng);
                sum += ma.outcome * mb.outcome;
            }
            const double e = double(sum) / per_cell;
            s += (a & b) ? -e : e;
            var += (1 - e * e) / per_cell;
        }
    EXPECT_NEAR(s, 2 * std::sqrt(2.0), 3 * std::sqrt(var));
}

TEST(MeasureInBasis, UnknownSubsystem) {
    RngStream rng(1);
    EXPECT_THROW(measure_in_basis(singlet(), "C", 0.0, ReadoutFidelities{1, 1}, rng), QuantumError);
}

TEST(BasisSet, DefaultAngles) {
    const auto s = ReadoutBasisSet::with_tilt(0.026 * pi);
    EXPECT_DOUBLE_EQ(s.a0, 0.0);
    EXPECT_DOUBLE_EQ(s.a1, pi / 2);
    EXPECT_DOUBLE_EQ(s.b0, -3 * pi / 4 - 0.026 * pi);
    EXPECT_DOUBLE_EQ(s.b1, 3 * pi / 4 + 0.026 * pi);
}

TEST(ReadoutModel, RejectsBadRates) {
    EXPECT_THROW((ReadoutModel{-1, 0, 0, 3.7}.validate()), ReadoutError);
    EXPECT_THROW((ReadoutModel{1, 0, 0, 0}.validate()), ReadoutError);
}
