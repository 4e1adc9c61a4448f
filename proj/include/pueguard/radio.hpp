#pragma once

// Propagation, noise and the signal pre-processing unit. A transmission (or
// its absence) becomes a vector of squared samples e[n] plus their aggregate.

#include "pueguard/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace pueguard {

struct Position {
    double x = 0.0;  // meters
    double y = 0.0;

    friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Log-distance path loss with optional log-normal shadowing.
struct Propagation {
    double ref_power_gain = 1.0;
    double ref_distance = 1.0;        // meters
    double path_loss_exponent = 3.0;
    double shadowing_sigma_db = 0.0;  // 0 disables shadowing
    double noise_power = 1e-9;        // watts

    void validate() const {
        if (!(ref_distance > 0.0)) throw std::invalid_argument("ref_distance must be > 0");
        if (!(noise_power > 0.0)) throw std::invalid_argument("noise_power must be > 0");
        if (!(path_loss_exponent >= 2.0)) throw std::invalid_argument("path_loss_exponent must be >= 2");
        if (!(ref_power_gain > 0.0)) throw std::invalid_argument("ref_power_gain must be > 0");
        if (!(shadowing_sigma_db >= 0.0)) throw std::invalid_argument("shadowing_sigma_db must be >= 0");
    }

    bool shadowing_enabled() const { return shadowing_sigma_db > 0.0; }
};

/// Who is transmitting: index 0 is the primary user, attackers are 1..M.
class SourceId {
public:
    static SourceId primary_user() { return SourceId(0); }
    static SourceId attacker(int index) {
        if (index < 1) throw std::invalid_argument("attacker index must be >= 1");
        return SourceId(index);
    }

    bool is_primary_user() const { return index_ == 0; }
    int index() const { return index_; }

    friend bool operator==(const SourceId&, const SourceId&) = default;

private:
    explicit SourceId(int index) : index_(index) {}
    int index_;
};

struct SourceSpec {
    Position position;
    double tx_power = 0.0;  // watts
    SourceId identity = SourceId::primary_user();
};

/// Squared samples of one sensing period and their aggregate.
class EnergyVector {
public:
    EnergyVector() = default;

    explicit EnergyVector(std::vector<double> samples) : samples_(std::move(samples)) {
        if (samples_.empty()) throw std::invalid_argument("energy vector needs at least one sample");
        for (double s : samples_) {
            if (!(s >= 0.0) || !std::isfinite(s)) {
                throw std::invalid_argument("energy samples must be finite and non-negative");
            }
        }
        aggregate_ = compensated_sum(samples_);
    }

    std::span<const double> samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    double aggregate() const { return aggregate_; }
    double sample_mean() const { return samples_.empty() ? 0.0 : aggregate_ / double(samples_.size()); }

private:
    std::vector<double> samples_;
    double aggregate_ = 0.0;
};

/// Received power in watts. Distance is clamped below at ref_distance.
inline double received_power(const Propagation& prop, double tx_power, double dist,
                             std::optional<double> shadow_draw = std::nullopt) {
    if (tx_power < 0.0) throw std::invalid_argument("tx_power must be >= 0");
    if (dist < 0.0) throw std::invalid_argument("distance must be >= 0");
    const double d = std::max(dist, prop.ref_distance);
    double p = tx_power * prop.ref_power_gain * std::pow(prop.ref_distance / d, prop.path_loss_exponent);
    if (shadow_draw && prop.shadowing_enabled()) {
        p *= std::pow(10.0, prop.shadowing_sigma_db * *shadow_draw / 10.0);
    }
    return p;
}

inline double received_power(const Propagation& prop, const SourceSpec& source, const Position& receiver,
                             std::optional<double> shadow_draw = std::nullopt) {
    return received_power(prop, source.tx_power, distance(source.position, receiver), shadow_draw);
}

/// Per-sample power P_r + noise seen at `receiver` without shadowing.
inline double per_sample_power(const Propagation& prop, const std::optional<SourceSpec>& source,
                               const Position& receiver) {
    const double pr = source ? received_power(prop, *source, receiver) : 0.0;
    return pr + prop.noise_power;
}

/// Samples r(t_n) are zero-mean Gaussian with variance P_r + noise, so each
/// e[n] = r^2 is a scaled chi-square with one degree of freedom.
template <class Urbg>
EnergyVector draw_energy_vector(const Propagation& prop, const std::optional<SourceSpec>& source,
                                const Position& receiver, std::size_t n_samples, Urbg& rng) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    double pr = 0.0;
    if (source) {
        std::optional<double> shadow;
        if (prop.shadowing_enabled()) {
            shadow = std::normal_distribution<double>(0.0, 1.0)(rng);
        }
        pr = received_power(prop, *source, receiver, shadow);
    }
    std::normal_distribution<double> amplitude(0.0, std::sqrt(pr + prop.noise_power));
    std::vector<double> samples(n_samples);
    for (auto& s : samples) {
        const double r = amplitude(rng);
        s = r * r;
    }
    return EnergyVector(std::move(samples));
}

/// Draws a vector of `n_samples` with a known per-sample power directly.
template <class Urbg>
EnergyVector draw_energy_vector(double sample_power, std::size_t n_samples, Urbg& rng) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    std::normal_distribution<double> amplitude(0.0, std::sqrt(sample_power));
    std::vector<double> samples(n_samples);
    for (auto& s : samples) {
        const double r = amplitude(rng);
        s = r * r;
    }
    return EnergyVector(std::move(samples));
}

/// Gaussian approximation of the aggregate E: mean N*P, variance 2*N*P^2.
inline GaussianStats energy_stats(double sample_power, std::size_t n_samples) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    const double n = double(n_samples);
    return make_gaussian(n * sample_power, 2.0 * n * sample_power * sample_power);
}

inline GaussianStats energy_stats(const Propagation& prop, const std::optional<SourceSpec>& source,
                                  const Position& receiver, std::size_t n_samples) {
    return energy_stats(per_sample_power(prop, source, receiver), n_samples);
}

}  // namespace pueguard
