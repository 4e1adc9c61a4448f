#include "pueguard/markov.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace pueguard;

namespace {

double erlang_b(int n, double load) {
    double b = 1.0;
    for (int k = 1; k <= n; ++k) b = load * b / (k + load * b);
    return b;
}

CtmcModel solved(const CtmcParams& p) {
    auto m = build_generator(p);
    steady_state(m);
    return m;
}

}  // namespace

TEST(CtmcModel, IndexEnumeratesSimplex) {
    const CtmcModel m(CtmcParams{});
    EXPECT_EQ(m.size(), 28u);
    std::set<std::size_t> seen;
    for (const auto& s : m.states()) {
        const auto k = m.index_of(s.n_pu, s.n_eu);
        EXPECT_EQ(m.states()[k], s);
        seen.insert(k);
    }
    EXPECT_EQ(seen.size(), m.size());
    EXPECT_THROW(m.index_of(4, 3), std::out_of_range);
}

TEST(Generator, RowsSumToZeroWithNonNegativeOffDiagonals) {
    const auto m = build_generator(CtmcParams{});
    const auto& q = m.generator();
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
        EXPECT_NEAR(q.row(r).sum(), 0.0, 1e-14);
        for (Eigen::Index c = 0; c < q.cols(); ++c) {
            if (r != c) {
                EXPECT_GE(q(r, c), 0.0);
            }
        }
    }
}

TEST(Generator, PrimaryUserPreemptsAttackerAtSaturation) {
    const CtmcParams p;
    const auto m = build_generator(p);
    const auto from = Eigen::Index(m.index_of(2, 4));
    EXPECT_DOUBLE_EQ(m.generator()(from, Eigen::Index(m.index_of(3, 3))), p.lambda_pu);
    EXPECT_DOUBLE_EQ(m.generator()(Eigen::Index(m.index_of(6, 0)), Eigen::Index(m.index_of(5, 0))), 6 * p.mu_pu);
}

TEST(SteadyState, DistributionIsStationary) {
    const auto m = solved(CtmcParams{});
    const auto& pi = m.steady();
    EXPECT_NEAR(pi.sum(), 1.0, 1e-12);
    EXPECT_GE(pi.minCoeff(), 0.0);
    EXPECT_LE(stationarity_residual(m), 1e-12);
}

TEST(SteadyState, NoAttacksReducesToErlangLoss) {
    CtmcParams p;
    p.n_channels = 5;
    p.lambda_pu = 0.3;
    p.mu_pu = 0.1;
    p.p_miss = 0.0;
    const auto m = solved(p);
    EXPECT_NEAR(outage_probability(m), erlang_b(5, 3.0), 1e-12);
    // truncated Poisson marginal of the PU count
    double norm = 0.0, fact = 1.0;
    for (int i = 0; i <= 5; ++i) {
        if (i) fact *= i;
        norm += std::pow(3.0, i) / fact;
    }
    EXPECT_NEAR(m.probability(2, 0), 9.0 / 2.0 / norm, 1e-12);
    // only exit from (N, 0) is a PU departure
    EXPECT_NEAR(recovery_time(m), 1.0 / (5 * 0.1), 1e-12);
}

TEST(RecoveryTime, SingleChannelFirstPassage) {
    CtmcParams p;
    p.n_channels = 1;
    p.lambda_pu = 0.3;
    p.mu_pu = 0.5;
    p.lambda_eu = 0.7;
    p.mu_eu = 0.2;
    const auto m = solved(p);
    // (1,0) exits at rate mu_pu; (0,1) either leaves or is preempted into (1,0)
    const double t10 = 1.0 / p.mu_pu;
    const double t01 = 1.0 / (p.lambda_pu + p.mu_eu) + p.lambda_pu / (p.lambda_pu + p.mu_eu) * t10;
    const double expected = (p.lambda_pu * t10 + p.lambda_eu * t01) / (p.lambda_pu + p.lambda_eu);
    EXPECT_NEAR(recovery_time(m), expected, 1e-12);
}

TEST(OutageProbability, MonotoneInAttackRateAndMissProbability) {
    CtmcParams p;
    double previous = solve_outage_point(p, 0.0).outage_prob;
    for (double l = 0.1; l <= 1.5; l += 0.1) {
        const double o = solve_outage_point(p, l).outage_prob;
        EXPECT_GE(o, previous) << l;
        previous = o;
    }
    previous = 0.0;
    for (double miss = 0.0; miss <= 1.0; miss += 0.125) {
        p.p_miss = miss;
        const double o = outage_probability(solved(p));
        EXPECT_GE(o, previous) << miss;
        previous = o;
    }
}

TEST(OutageProbability, NearZeroWithoutAttacks) {
    const CtmcParams p;
    EXPECT_LT(solve_outage_point(p, 0.0).outage_prob, 0.1 * solve_outage_point(p, 0.4).outage_prob);
}

TEST(SimulateCtmc, AgreesWithAnalyticAtLongHorizon) {
    const CtmcParams p;
    const auto m = solved(p);
    const auto sim = simulate_ctmc(p, 1e6, 5);
    EXPECT_NEAR(sim.outage_probability / outage_probability(m), 1.0, 0.05);
    EXPECT_NEAR(sim.mean_recovery_time / recovery_time(m), 1.0, 0.05);
    double occ = 0.0;
    for (double o : sim.occupancy) occ += o;
    EXPECT_NEAR(occ, 1.0, 1e-9);
}

TEST(SimulateCtmc, DeterministicGivenSeed) {
    const CtmcParams p;
    const auto a = simulate_ctmc(p, 1e4, 9);
    const auto b = simulate_ctmc(p, 1e4, 9);
    EXPECT_EQ(a.outage_probability, b.outage_probability);
    EXPECT_EQ(a.outage_episodes, b.outage_episodes);
    EXPECT_EQ(a.occupancy, b.occupancy);
}

TEST(SimulateCtmc, NoAttacksAndRarePrimaryUsersNeverSaturate) {
    CtmcParams p;
    p.p_miss = 0.0;
    p.lambda_pu = 1e-9;
    EXPECT_EQ(simulate_ctmc(p, 1e4, 1).outage_probability, 0.0);
    EXPECT_THROW(simulate_ctmc(p, 0.0, 1), std::invalid_argument);
}

TEST(CtmcParams, Validation) {
    CtmcParams p;
    p.mu_eu = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.p_miss = 1.2;
    EXPECT_THROW(build_generator(p), std::invalid_argument);
}

TEST(OutageCsv, HeaderAndRows) {
    std::ostringstream os;
    write_outage_csv(os, {solve_outage_point(CtmcParams{}, 0.4)});
    const auto text = os.str();
    EXPECT_EQ(text.rfind("lambda_eu,mu_eu,outage_prob,recovery_time\n", 0), 0u);
    EXPECT_NE(text.find("0.4,0.1,"), std::string::npos);
}
