#include "pueguard/radio.hpp"
#include "pueguard/verifier.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace pueguard;

namespace {

// Direct product of scaled chi-square(1) densities, evaluated term by term.
double oracle_log_likelihood(const std::vector<double>& samples, double s) {
    double out = 0.0;
    for (double e : samples) out += std::log(std::exp(-e / (2.0 * s)) / std::sqrt(2.0 * std::numbers::pi * s * e));
    return out;
}

// Probability that the sum of n chi-square(1) draws scaled by s lands
// between the ML boundaries against the neighbouring powers.
double oracle_correct(const std::vector<double>& powers, std::size_t m, std::size_t n) {
    boost::math::chi_squared chi{double(n)};
    auto boundary = [&](double a, double b) {  // sum T where log-likelihoods tie
        return double(n) * std::log(b / a) / (1.0 / a - 1.0 / b);
    };
    const double s = powers[m];
    const double lo = m > 0 ? boundary(powers[m - 1], s) : 0.0;
    const double hi_cdf = m + 1 < powers.size() ? boost::math::cdf(chi, boundary(s, powers[m + 1]) / s) : 1.0;
    return hi_cdf - boost::math::cdf(chi, lo / s);
}

}  // namespace

TEST(LogScore, MatchesDirectDensityProduct) {
    const std::vector<double> xs = {0.3e-9, 1.7e-9, 2.2e-9, 0.05e-9};
    const FingerprintEntry entry{0, 1.1e-9, 0};
    EXPECT_NEAR(log_score(EnergyVector(xs), entry, 0.25), std::log(0.25) + oracle_log_likelihood(xs, 1.1e-9), 1e-9);
}

TEST(LogScore, PriorAndSymmetry) {
    const EnergyVector e(std::vector<double>{1.0, 2.0, 0.5});
    const FingerprintEntry a{0, 1.3, 0}, b{1, 1.3, 0};
    EXPECT_DOUBLE_EQ(log_score(e, a, 0.5), log_score(e, b, 0.5));
    EXPECT_NEAR(log_score(e, a, 0.5) - log_score(e, a, 0.25), std::log(2.0), 1e-12);
    EXPECT_THROW(log_score(e, a, 0.0), std::invalid_argument);
}

TEST(LogScore, ZeroSampleIsClampedAndFinite) {
    const EnergyVector e(std::vector<double>{0.0, 1.0});
    const double s = log_score(e, {0, 1.0, 0}, 1.0);
    EXPECT_TRUE(std::isfinite(s));
    const double clamped = std::log(1.0) + oracle_log_likelihood({1e-12, 1.0}, 1.0);
    EXPECT_NEAR(s, clamped, 1e-9);
}

TEST(LogScore, TrueEntryWinsOnAverage) {
    std::mt19937_64 rng(17);
    const FingerprintEntry a{0, 2.0, 0}, b{1, 3.0, 0};
    double margin = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const auto e = draw_energy_vector(2.0, 10, rng);
        margin += log_score(e, a, 0.5) - log_score(e, b, 0.5);
    }
    EXPECT_GT(margin / 10000, 0.0);
}

TEST(EstimateLocation, SingleHypothesisAlwaysZero) {
    std::mt19937_64 rng(1);
    const auto db = LocalDatabase::uniform({5.0});
    for (int t = 0; t < 50; ++t) EXPECT_EQ(estimate_location(draw_energy_vector(40.0, 8, rng), db), 0);
}

TEST(EstimateLocation, TieGoesToSmallestId) {
    const auto db = LocalDatabase::uniform({2.0, 1.0, 1.0});
    const EnergyVector e(std::vector<double>{1.0, 1.0, 1.0});
    EXPECT_EQ(estimate_location(e, db), 1);
}

TEST(EstimateLocation, EmptyOrZeroPriorDatabaseThrows) {
    const EnergyVector e(std::vector<double>{1.0});
    EXPECT_THROW(estimate_location(e, LocalDatabase{}), EmptyDatabase);
    LocalDatabase db({{0, 1.0, 0}, {1, 2.0, 0}}, {0.0, 1.0});
    EXPECT_EQ(estimate_location(e, db), 1);
}

TEST(EstimateLocation, InvariantToPriorScaling) {
    std::mt19937_64 rng(8);
    const LocalDatabase a({{0, 1.0, 0}, {1, 2.0, 0}, {2, 4.0, 0}}, {0.2, 0.3, 0.5});
    const LocalDatabase b({{0, 1.0, 0}, {1, 2.0, 0}, {2, 4.0, 0}}, {0.2 / 1.0, 0.3, 0.5});
    for (int t = 0; t < 200; ++t) {
        const auto e = draw_energy_vector(2.5, 16, rng);
        EXPECT_EQ(estimate_location(e, a), estimate_location(e, b));
    }
}

// 3 dB separation, N_s = 100: Monte Carlo accuracy per class agrees with
// the exact chi-square probability of landing between the ML boundaries.
TEST(EstimateLocation, AccuracyMatchesChiSquareOracle) {
    std::mt19937_64 rng(23);
    const std::vector<double> powers = {1.0, 2.0, 4.0, 8.0};
    const auto db = LocalDatabase::uniform(powers);
    const std::size_t n = 100;
    const int trials = 4000;
    for (std::size_t m = 0; m < powers.size(); ++m) {
        int correct = 0;
        for (int t = 0; t < trials; ++t) correct += estimate_location(draw_energy_vector(powers[m], n, rng), db) == int(m);
        const double freq = double(correct) / trials;
        const double expected = oracle_correct(powers, m, n);
        EXPECT_GE(freq, 0.9) << m;
        EXPECT_NEAR(freq, expected, 4.0 * std::sqrt(expected * (1 - expected) / trials) + 1e-3) << m;
    }
}

TEST(UpdateFingerprint, RateOneReplacesAndFixedPointHolds) {
    const EnergyVector e(std::vector<double>{1.0, 3.0});
    const auto full = update_fingerprint({2, 7.0, 4}, e, 1.0);
    EXPECT_DOUBLE_EQ(full.per_sample_power, 2.0);
    EXPECT_EQ(full.observation_count, 5u);
    EXPECT_EQ(full.location_id, 2);
    EXPECT_DOUBLE_EQ(update_fingerprint({0, 2.0, 0}, e, 0.3).per_sample_power, 2.0);
    EXPECT_THROW(update_fingerprint({0, 2.0, 0}, e, 0.0), std::invalid_argument);
    EXPECT_THROW(update_fingerprint({0, 2.0, 0}, e, 1.5), std::invalid_argument);
}

TEST(UpdateFingerprint, ConvergesToTruePower) {
    std::mt19937_64 rng(4);
    FingerprintEntry entry{0, 10.0, 0};
    for (int k = 0; k < 200; ++k) entry = update_fingerprint(entry, draw_energy_vector(3.0, 100, rng), 0.1);
    EXPECT_LT(std::abs(entry.per_sample_power - 3.0) / 3.0, 0.05);
    EXPECT_EQ(entry.observation_count, 200u);
}

TEST(UpdateFingerprint, AllZeroVectorKeepsPositivePower) {
    const EnergyVector zeros(std::vector<double>{0.0, 0.0});
    EXPECT_GT(update_fingerprint({0, 2.0, 0}, zeros, 1.0).per_sample_power, 0.0);
    EXPECT_DOUBLE_EQ(update_fingerprint({0, 2.0, 0}, zeros, 0.5).per_sample_power, 1.0);
}

TEST(LocalDatabase, ValidatesStructure) {
    EXPECT_THROW(LocalDatabase({{1, 1.0, 0}}, {1.0}), std::invalid_argument);
    EXPECT_THROW(LocalDatabase({{0, 1.0, 0}, {1, 1.0, 0}}, {0.5, 0.6}), std::invalid_argument);
    EXPECT_THROW(LocalDatabase({{0, 0.0, 0}}, {1.0}), std::invalid_argument);
    EXPECT_THROW(LocalDatabase({{0, 1.0, 0}}, {1.0, 0.0}), std::invalid_argument);
    auto db = LocalDatabase::uniform({1.0, 2.0});
    EXPECT_EQ(db.attacker_count(), 1);
    EXPECT_THROW(db.append({3, 1.0, 0}, {0.3, 0.3, 0.4}), std::invalid_argument);
    db.append({2, 4.0, 0}, {0.25, 0.25, 0.5});
    EXPECT_EQ(db.attacker_count(), 2);
    EXPECT_THROW(db.set_entry({5, 1.0, 0}), std::out_of_range);
}
