#pragma once

// Fingerprint-based location verification. Each SU keeps, per candidate
// source location m (0 = true primary user, 1..M = known attackers), the
// per-sample power it expects to see, and picks the maximum a-posteriori
// location for an observed energy vector.

#include "pueguard/detector.hpp"
#include "pueguard/error.hpp"
#include "pueguard/radio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pueguard {

struct FingerprintEntry {
    int location_id = 0;
    double per_sample_power = 1.0;  // P_r + noise at this SU for a source at this location
    std::uint64_t observation_count = 0;

    friend bool operator==(const FingerprintEntry&, const FingerprintEntry&) = default;
};

/// Fingerprints for locations 0..M plus their priors.
class LocalDatabase {
public:
    LocalDatabase() = default;

    LocalDatabase(std::vector<FingerprintEntry> entries, std::vector<double> priors)
        : entries_(std::move(entries)), priors_(std::move(priors)) {
        validate();
    }

    /// Uniform priors over the given per-sample powers, ids assigned 0..M.
    static LocalDatabase uniform(const std::vector<double>& powers) {
        std::vector<FingerprintEntry> entries;
        entries.reserve(powers.size());
        for (std::size_t m = 0; m < powers.size(); ++m) {
            entries.push_back({int(m), powers[m], 0});
        }
        std::vector<double> priors(powers.size(), powers.empty() ? 0.0 : 1.0 / double(powers.size()));
        return LocalDatabase(std::move(entries), std::move(priors));
    }

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    /// Number of known attacker locations (M).
    int attacker_count() const { return entries_.empty() ? 0 : int(entries_.size()) - 1; }

    const std::vector<FingerprintEntry>& entries() const { return entries_; }
    const std::vector<double>& priors() const { return priors_; }
    const FingerprintEntry& entry(int location_id) const { return entries_.at(std::size_t(location_id)); }

    void set_entry(const FingerprintEntry& e) {
        if (e.location_id < 0 || std::size_t(e.location_id) >= entries_.size()) {
            throw std::out_of_range("fingerprint location id outside 0..M");
        }
        check_entry(e);
        entries_[std::size_t(e.location_id)] = e;
    }

    /// Appends location M+1 and installs new priors (size M+2).
    void append(const FingerprintEntry& e, std::vector<double> priors) {
        if (e.location_id != int(entries_.size())) {
            throw std::invalid_argument("appended fingerprint must take the next dense id");
        }
        entries_.push_back(e);
        priors_ = std::move(priors);
        validate();
    }

    void set_priors(std::vector<double> priors) {
        priors_ = std::move(priors);
        validate();
    }

    void validate() const {
        if (priors_.size() != entries_.size()) {
            throw std::invalid_argument("one prior per fingerprint entry is required");
        }
        double total = 0.0;
        for (std::size_t m = 0; m < entries_.size(); ++m) {
            if (entries_[m].location_id != int(m)) {
                throw std::invalid_argument("fingerprint ids must be dense 0..M");
            }
            check_entry(entries_[m]);
            if (!(priors_[m] >= 0.0)) throw std::invalid_argument("priors must be non-negative");
            total += priors_[m];
        }
        if (!entries_.empty() && std::abs(total - 1.0) > 1e-12) {
            throw std::invalid_argument("priors must sum to 1");
        }
    }

private:
    static void check_entry(const FingerprintEntry& e) {
        if (!(e.per_sample_power > 0.0) || !std::isfinite(e.per_sample_power)) {
            throw std::invalid_argument("fingerprint per_sample_power must be finite and > 0");
        }
    }

    std::vector<FingerprintEntry> entries_;
    std::vector<double> priors_;
};

struct LocalReport {
    int su_id = 0;
    std::optional<int> estimate;  // only for CandidatePrimary
    EnergyVector energy;
    LocalDecision decision = LocalDecision::NoSignal;
};

/// log(prior) + sum_n log f(e[n]) for the scaled chi-square(1) density
/// f(e) = exp(-e / 2s) / sqrt(2 pi s e), s = per_sample_power. Samples are
/// clamped below at 1e-12 * s.
inline double log_score(const EnergyVector& e, const FingerprintEntry& entry, double prior) {
    if (!(prior > 0.0)) throw std::invalid_argument("log_score requires prior > 0");
    const double s = entry.per_sample_power;
    const double floor = 1e-12 * s;
    const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi * s);
    double sum_energy = 0.0;
    double sum_log_energy = 0.0;
    for (double x : e.samples()) {
        const double v = std::max(x, floor);
        sum_energy += v;
        sum_log_energy += std::log(v);
    }
    const double n = double(e.size());
    return std::log(prior) - n * log_norm - 0.5 * sum_log_energy - sum_energy / (2.0 * s);
}

/// MAP location; ties go to the smallest id. Zero-prior locations are skipped.
inline int estimate_location(const EnergyVector& e, const LocalDatabase& db) {
    if (db.empty()) throw EmptyDatabase();
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < db.size(); ++m) {
        const double prior = db.priors()[m];
        if (prior <= 0.0) continue;
        const double score = log_score(e, db.entries()[m], prior);
        if (best < 0 || score > best_score) {
            best = int(m);
            best_score = score;
        }
    }
    if (best < 0) throw EmptyDatabase();
    return best;
}

/// Exponentially weighted update of the stored per-sample power.
inline FingerprintEntry update_fingerprint(const FingerprintEntry& entry, const EnergyVector& e,
                                           double learning_rate) {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw std::invalid_argument("learning_rate must be in (0,1]");
    }
    FingerprintEntry out = entry;
    const double updated = (1.0 - learning_rate) * entry.per_sample_power + learning_rate * e.sample_mean();
    // An all-zero vector at rate 1 would zero the entry; keep the old value then.
    if (updated > 0.0 && std::isfinite(updated)) out.per_sample_power = updated;
    ++out.observation_count;
    return out;
}

}  // namespace pueguard
