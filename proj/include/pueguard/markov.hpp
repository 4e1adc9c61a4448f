#pragma once

// Saturation/outage CTMC over (PU-held, attacker-held) channel counts.
//
// From state (i, j) with N channels:
//   PU arrival        lambda_pu            -> (i+1, j)    if i+j < N
//                                           -> (i+1, j-1)  if i+j = N, j > 0 (PU preempts an attacker)
//   successful attack lambda_eu * p_miss   -> (i, j+1)    if i+j < N
//   PU departure      i * mu_pu            -> (i-1, j)
//   attacker leaves   j * mu_eu            -> (i, j-1)
// Outage is i + j = N: no channel is left for the common control channel.

#include "pueguard/error.hpp"
#include "pueguard/numeric.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

namespace pueguard {

struct CtmcParams {
    int n_channels = 6;
    double lambda_pu = 0.02;
    double mu_pu = 0.2;
    double lambda_eu = 0.4;
    double mu_eu = 0.1;
    double p_miss = 1.0;

    void validate() const {
        if (n_channels < 1) throw std::invalid_argument("n_channels must be >= 1");
        if (!(lambda_pu > 0.0 && mu_pu > 0.0 && lambda_eu > 0.0 && mu_eu > 0.0)) {
            throw std::invalid_argument("CTMC rates must be > 0");
        }
        if (!(p_miss >= 0.0 && p_miss <= 1.0)) throw std::invalid_argument("p_miss must be in [0,1]");
    }

    double attack_rate() const { return lambda_eu * p_miss; }
};

struct CtmcState {
    int n_pu = 0;
    int n_eu = 0;

    friend bool operator==(const CtmcState&, const CtmcState&) = default;
};

class CtmcModel {
public:
    explicit CtmcModel(const CtmcParams& params) : params_(params) {
        params_.validate();
        const int n = params_.n_channels;
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; i + j <= n; ++j) states_.push_back({i, j});
        }
    }

    const CtmcParams& params() const { return params_; }
    const std::vector<CtmcState>& states() const { return states_; }
    std::size_t size() const { return states_.size(); }

    /// Index of (i, j) in the enumeration order (i outer, j inner).
    std::size_t index_of(int i, int j) const {
        const int n = params_.n_channels;
        if (i < 0 || j < 0 || i + j > n) throw std::out_of_range("CTMC state outside the simplex");
        // Rows for i' < i contribute (n - i' + 1) states each.
        return std::size_t(i * (n + 1) - i * (i - 1) / 2 + j);
    }

    bool is_outage(const CtmcState& s) const { return s.n_pu + s.n_eu == params_.n_channels; }

    const Eigen::MatrixXd& generator() const { return generator_; }
    bool solved() const { return steady_.has_value(); }
    const Eigen::VectorXd& steady() const {
        if (!steady_) throw std::logic_error("steady state has not been computed");
        return *steady_;
    }

    double probability(int i, int j) const { return steady()(Eigen::Index(index_of(i, j))); }

private:
    friend CtmcModel build_generator(const CtmcParams&);
    friend const Eigen::VectorXd& steady_state(CtmcModel&);

    CtmcParams params_;
    std::vector<CtmcState> states_;
    Eigen::MatrixXd generator_;
    std::optional<Eigen::VectorXd> steady_;
};

inline CtmcModel build_generator(const CtmcParams& params) {
    CtmcModel model(params);
    const int n = params.n_channels;
    const auto size = Eigen::Index(model.size());
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(size, size);
    for (const auto& s : model.states()) {
        const auto from = Eigen::Index(model.index_of(s.n_pu, s.n_eu));
        auto add = [&](int i, int j, double rate) {
            if (rate > 0.0) q(from, Eigen::Index(model.index_of(i, j))) += rate;
        };
        if (s.n_pu + s.n_eu < n) {
            add(s.n_pu + 1, s.n_eu, params.lambda_pu);
            add(s.n_pu, s.n_eu + 1, params.attack_rate());
        } else if (s.n_eu > 0) {
            add(s.n_pu + 1, s.n_eu - 1, params.lambda_pu);
        }
        if (s.n_pu > 0) add(s.n_pu - 1, s.n_eu, s.n_pu * params.mu_pu);
        if (s.n_eu > 0) add(s.n_pu, s.n_eu - 1, s.n_eu * params.mu_eu);
        q(from, from) = -q.row(from).sum();
    }
    model.generator_ = std::move(q);
    return model;
}

/// Solves pi Q = 0, sum(pi) = 1 by replacing one balance equation with the
/// normalization and running a full-pivot LU.
inline const Eigen::VectorXd& steady_state(CtmcModel& model) {
    const auto size = Eigen::Index(model.size());
    Eigen::MatrixXd a = model.generator().transpose();
    a.row(size - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(size);
    b(size - 1) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw SingularSystem("steady-state system is singular");
    Eigen::VectorXd pi = lu.solve(b);
    // Round-off can leave tiny negatives on unreachable states.
    for (Eigen::Index k = 0; k < size; ++k) {
        if (pi(k) < 0.0 && pi(k) > -1e-12) pi(k) = 0.0;
    }
    pi /= pi.sum();
    if (!pi.allFinite()) throw SingularSystem("steady-state solution is not finite");
    model.steady_ = std::move(pi);
    return *model.steady_;
}

inline double outage_probability(const CtmcModel& model) {
    const auto& pi = model.steady();
    double p = 0.0;
    for (const auto& s : model.states()) {
        if (model.is_outage(s)) p += pi(Eigen::Index(model.index_of(s.n_pu, s.n_eu)));
    }
    return p;
}

/// Mean time from entering the outage set until leaving it, with the entry
/// state weighted by the stationary probability flux into that state.
/// Preemptions (i, N-i) -> (i+1, N-i-1) stay inside the outage set, so the
/// exit time is a first-passage time solved over the outage block of Q.
inline double recovery_time(const CtmcModel& model) {
    const auto& pi = model.steady();
    const auto& q = model.generator();
    std::vector<Eigen::Index> outage;
    std::vector<Eigen::Index> normal;
    for (const auto& s : model.states()) {
        const auto k = Eigen::Index(model.index_of(s.n_pu, s.n_eu));
        (model.is_outage(s) ? outage : normal).push_back(k);
    }

    const auto n_out = Eigen::Index(outage.size());
    Eigen::VectorXd entry = Eigen::VectorXd::Zero(n_out);
    Eigen::MatrixXd block(n_out, n_out);
    for (Eigen::Index a = 0; a < n_out; ++a) {
        for (auto u : normal) entry(a) += pi(u) * q(u, outage[std::size_t(a)]);
        for (Eigen::Index b = 0; b < n_out; ++b) block(a, b) = -q(outage[std::size_t(a)], outage[std::size_t(b)]);
    }
    const double total = entry.sum();
    if (!(total > 0.0)) throw NoOutageFlux();

    const Eigen::VectorXd exit_time = block.fullPivLu().solve(Eigen::VectorXd::Ones(n_out));
    return entry.dot(exit_time) / total;
}

/// Max over j of |(pi Q)_j|.
inline double stationarity_residual(const CtmcModel& model) {
    return (model.steady().transpose() * model.generator()).cwiseAbs().maxCoeff();
}

struct SimulatedOutage {
    double outage_probability = 0.0;
    double mean_recovery_time = 0.0;
    std::uint64_t outage_episodes = 0;
    std::vector<double> occupancy;  // time fraction per state, model enumeration order
};

/// Gillespie simulation of the same chain; starts empty at t = 0. An episode
/// still open at the horizon counts toward the outage fraction but not toward
/// the episode statistics.
inline SimulatedOutage simulate_ctmc(const CtmcParams& params, double horizon, std::uint64_t seed) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    params.validate();
    const CtmcModel layout(params);
    const int n = params.n_channels;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> occupancy(layout.size(), 0.0);
    int i = 0, j = 0;
    double t = 0.0;
    double outage_time = 0.0;
    double episode_start = 0.0;
    double closed_episode_time = 0.0;
    std::uint64_t episodes = 0;

    while (t < horizon) {
        const bool full = i + j == n;
        const double r_pu_arrive = (!full || j > 0) ? params.lambda_pu : 0.0;
        const double r_eu_arrive = full ? 0.0 : params.attack_rate();
        const double r_pu_leave = i * params.mu_pu;
        const double r_eu_leave = j * params.mu_eu;
        const double total = r_pu_arrive + r_eu_arrive + r_pu_leave + r_eu_leave;

        double dt = horizon - t;
        if (total > 0.0) dt = std::min(dt, -std::log1p(-unit(rng)) / total);
        occupancy[layout.index_of(i, j)] += dt;
        if (full) outage_time += dt;
        t += dt;
        if (t >= horizon || total <= 0.0) break;

        double u = unit(rng) * total;
        if ((u -= r_pu_arrive) < 0.0) {
            if (full) --j;
            ++i;
        } else if ((u -= r_eu_arrive) < 0.0) {
            ++j;
        } else if ((u -= r_pu_leave) < 0.0) {
            --i;
        } else {
            --j;
        }

        const bool now_full = i + j == n;
        if (!full && now_full) {
            episode_start = t;
        } else if (full && !now_full) {
            closed_episode_time += t - episode_start;
            ++episodes;
        }
    }

    SimulatedOutage out;
    out.outage_probability = outage_time / horizon;
    out.outage_episodes = episodes;
    out.mean_recovery_time = episodes ? closed_episode_time / double(episodes) : 0.0;
    for (auto& o : occupancy) o /= horizon;
    out.occupancy = std::move(occupancy);
    return out;
}

struct OutagePoint {
    double lambda_eu = 0.0;
    double mu_eu = 0.0;
    double outage_prob = 0.0;
    double recovery_time = 0.0;
};

/// One solved point of the lambda_eu sweep. lambda_eu = 0 is represented by
/// p_miss = 0 since the rate itself must stay positive.
inline OutagePoint solve_outage_point(CtmcParams params, double lambda_eu) {
    OutagePoint pt{lambda_eu, params.mu_eu, 0.0, 0.0};
    if (lambda_eu <= 0.0) {
        params.p_miss = 0.0;
    } else {
        params.lambda_eu = lambda_eu;
    }
    auto model = build_generator(params);
    steady_state(model);
    pt.outage_prob = outage_probability(model);
    pt.recovery_time = recovery_time(model);
    return pt;
}

inline void write_outage_csv(std::ostream& os, const std::vector<OutagePoint>& points) {
    os << "lambda_eu,mu_eu,outage_prob,recovery_time\n";
    os.precision(12);
    for (const auto& p : points) {
        os << p.lambda_eu << ',' << p.mu_eu << ',' << p.outage_prob << ',' << p.recovery_time << '\n';
    }
}

}  // namespace pueguard
