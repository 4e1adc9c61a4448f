#include "pueguard/detector.hpp"
#include "pueguard/radio.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace pueguard;

namespace {

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Thresholds example() { return Thresholds(10.0, 20.0, 30.0); }

}  // namespace

TEST(Thresholds, EnforceOrdering) {
    EXPECT_THROW(Thresholds(2.0, 1.0, 3.0), OrderingViolation);
    EXPECT_THROW(Thresholds(1.0, 3.0, 3.0), OrderingViolation);
    EXPECT_THROW(Thresholds(1.0, 2.0, std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST(ClassifyEnergy, BandsAndBoundaries) {
    const auto t = example();
    EXPECT_EQ(classify_energy(0.0, t), LocalDecision::NoSignal);
    EXPECT_EQ(classify_energy(10.0, t), LocalDecision::NoSignal);
    EXPECT_EQ(classify_energy(std::nextafter(10.0, 11.0), t), LocalDecision::PueAttack);
    EXPECT_EQ(classify_energy(15.0, t), LocalDecision::PueAttack);
    EXPECT_EQ(classify_energy(20.0, t), LocalDecision::CandidatePrimary);
    EXPECT_EQ(classify_energy(25.0, t), LocalDecision::CandidatePrimary);
    EXPECT_EQ(classify_energy(30.0, t), LocalDecision::CandidatePrimary);
    EXPECT_EQ(classify_energy(std::nextafter(30.0, 31.0), t), LocalDecision::PueAttack);
    EXPECT_EQ(classify_energy(60.0, t), LocalDecision::PueAttack);
}

TEST(Calibrate, EqualTailQuantiles) {
    const auto h0 = make_gaussian(12.0, 24.0);
    const auto h1 = make_gaussian(200.0, 400.0);
    const auto t = calibrate_thresholds(h0, h1, 0.05, 1e-3);
    EXPECT_NEAR(t.gamma0(), 12.0 + 1.6448536269514722 * std::sqrt(24.0), 1e-10);
    EXPECT_NEAR(t.gamma1(), 200.0 - 3.2905267314918945 * 20.0, 1e-10);
    EXPECT_NEAR(t.gamma2(), 200.0 + 3.2905267314918945 * 20.0, 1e-10);
    EXPECT_NEAR(phi((t.gamma1() - 200.0) / 20.0), 5e-4, 1e-9);
    EXPECT_NEAR(1.0 - phi((t.gamma2() - 200.0) / 20.0), 5e-4, 1e-9);
}

TEST(Calibrate, InfeasibleEqualTailThrows) {
    const auto h0 = make_gaussian(12.0, 24.0);
    const auto h1 = make_gaussian(24.0, 96.0);
    EXPECT_THROW(calibrate_thresholds(h0, h1, 0.05, 1e-3), OrderingViolation);
    EXPECT_THROW(calibrate_thresholds(h0, h1, 0.05, 0.5), OrderingViolation);
}

TEST(Calibrate, UpperFallbackCollapsesLowerBand) {
    const auto h0 = make_gaussian(12.0, 24.0);
    const auto h1 = make_gaussian(24.0, 96.0);
    const auto t = calibrate_thresholds(h0, h1, 0.05, 1e-3, TailSplit::EqualOrUpper);
    EXPECT_NEAR(t.gamma0(), 20.0581, 1e-4);
    EXPECT_EQ(t.gamma1(), std::nextafter(t.gamma0(), std::numeric_limits<double>::infinity()));
    EXPECT_NEAR(t.gamma2(), 24.0 + 3.0902323061678132 * std::sqrt(96.0), 1e-10);
    // the whole false-alarm budget sits above gamma2
    EXPECT_NEAR(attack_flag_probability(h1, t), 1e-3, 1e-9);
}

TEST(Calibrate, FallbackLeavesFeasibleCaseUnchanged) {
    const auto h0 = make_gaussian(12.0, 24.0);
    const auto h1 = make_gaussian(200.0, 400.0);
    EXPECT_EQ(calibrate_thresholds(h0, h1, 0.05, 1e-3), calibrate_thresholds(h0, h1, 0.05, 1e-3, TailSplit::EqualOrUpper));
}

TEST(Calibrate, RejectsBadProbabilities) {
    const auto h0 = make_gaussian(1.0, 1.0);
    const auto h1 = make_gaussian(100.0, 1.0);
    EXPECT_THROW(calibrate_thresholds(h0, h1, 0.0, 1e-3), std::invalid_argument);
    EXPECT_THROW(calibrate_thresholds(h0, h1, 0.05, 1.0), std::invalid_argument);
}

TEST(AttackFlagProbability, DegenerateLimits) {
    const auto t = example();
    EXPECT_NEAR(attack_flag_probability(make_gaussian(25.0, 1e-6), t), 0.0, 1e-12);
    EXPECT_NEAR(attack_flag_probability(make_gaussian(100.0, 1e-6), t), 1.0, 1e-12);
    EXPECT_NEAR(attack_flag_probability(make_gaussian(15.0, 1e-6), t), 1.0, 1e-12);
    EXPECT_NEAR(attack_flag_probability(make_gaussian(0.0, 1e-6), t), 0.0, 1e-12);
}

TEST(AttackFlagProbability, FalseAlarmBoundedByTruncationTerm) {
    const auto h0 = make_gaussian(12.0, 24.0);
    const auto h1 = make_gaussian(200.0, 400.0);
    const auto t = calibrate_thresholds(h0, h1, 0.05, 1e-3);
    const double pf = attack_flag_probability(h1, t);
    const double truncation = phi((t.gamma0() - 200.0) / 20.0);
    EXPECT_LE(pf - 1e-3, truncation + 1e-15);
    EXPECT_NEAR(pf, 1e-3, 1e-6);
}

TEST(AttackFlagProbability, GrowsAwayFromBand) {
    const auto t = example();
    double previous = attack_flag_probability(make_gaussian(25.0, 4.0), t);
    for (double mean = 26.0; mean <= 60.0; mean += 1.0) {
        const double p = attack_flag_probability(make_gaussian(mean, 4.0), t);
        EXPECT_GE(p, previous - 1e-15) << mean;
        previous = p;
    }
    previous = attack_flag_probability(make_gaussian(25.0, 4.0), t);
    for (double mean = 24.0; mean >= 15.0; mean -= 1.0) {
        const double p = attack_flag_probability(make_gaussian(mean, 4.0), t);
        EXPECT_GE(p, previous - 1e-15) << mean;
        previous = p;
    }
}

TEST(AttackFlagProbability, MatchesMonteCarloFrequency) {
    std::mt19937_64 rng(99);
    const auto t = example();
    for (const auto& dist : {make_gaussian(22.0, 16.0), make_gaussian(31.0, 9.0), make_gaussian(14.0, 25.0)}) {
        std::normal_distribution<double> draw(dist.mean, dist.stddev());
        const int trials = 200000;
        int flagged = 0;
        for (int k = 0; k < trials; ++k) flagged += classify_energy(draw(rng), t) == LocalDecision::PueAttack;
        EXPECT_NEAR(double(flagged) / trials, attack_flag_probability(dist, t), 0.005);
    }
}

TEST(AttackFlagProbability, ChiSquareEnergiesNearGaussianAtLargeN) {
    // With N_s = 200 the exact energy law is close to its Gaussian proxy.
    std::mt19937_64 rng(3);
    const std::size_t n = 200;
    const double noise = 1e-9, pu = 4e-9, attacker = 6e-9;
    const auto t = calibrate_thresholds(energy_stats(noise, n), energy_stats(pu, n), 0.05, 1e-2);
    const int trials = 20000;
    int flagged = 0;
    for (int k = 0; k < trials; ++k) {
        flagged += classify_energy(draw_energy_vector(attacker, n, rng).aggregate(), t) == LocalDecision::PueAttack;
    }
    EXPECT_NEAR(double(flagged) / trials, attack_flag_probability(energy_stats(attacker, n), t), 0.02);
}
