#pragma once

// Cognitive base-station side: fuses local reports into a global decision,
// keeps the global fingerprint database and attacker profiles, and produces
// the update messages sent back to the SUs.

#include "pueguard/detector.hpp"
#include "pueguard/error.hpp"
#include "pueguard/radio.hpp"
#include "pueguard/verifier.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

namespace pueguard {

class GlobalDecision {
public:
    enum class Kind { TruePu, KnownAttacker, NewAttacker };

    static GlobalDecision true_pu() { return GlobalDecision(Kind::TruePu, 0); }
    static GlobalDecision known_attacker(int location) {
        if (location < 1) throw std::invalid_argument("known attacker location must be >= 1");
        return GlobalDecision(Kind::KnownAttacker, location);
    }
    static GlobalDecision new_attacker(int location) {
        if (location < 1) throw std::invalid_argument("new attacker location must be >= 1");
        return GlobalDecision(Kind::NewAttacker, location);
    }

    Kind kind() const { return kind_; }
    int location() const { return location_; }
    bool is_attack() const { return kind_ != Kind::TruePu; }

    friend bool operator==(const GlobalDecision&, const GlobalDecision&) = default;

private:
    GlobalDecision(Kind k, int location) : kind_(k), location_(location) {}
    Kind kind_;
    int location_;
};

inline const char* to_string(GlobalDecision::Kind k) {
    switch (k) {
        case GlobalDecision::Kind::TruePu: return "true_pu";
        case GlobalDecision::Kind::KnownAttacker: return "known_attacker";
        case GlobalDecision::Kind::NewAttacker: return "new_attacker";
    }
    return "?";
}

struct AttackerRecord {
    double first_seen = 0.0;
    std::uint64_t attack_count = 0;

    friend bool operator==(const AttackerRecord&, const AttackerRecord&) = default;
};

struct LoggedDecision {
    double time = 0.0;
    GlobalDecision decision = GlobalDecision::true_pu();
};

/// Fingerprints for every (SU, location) pair. Location ids are dense 0..M
/// and every SU has an entry for every location.
class GlobalDatabase {
public:
    GlobalDatabase() = default;

    /// Starts with only the primary-user fingerprint (M = 0) at each SU.
    explicit GlobalDatabase(const std::vector<double>& pu_power_per_su) {
        for (double p : pu_power_per_su) {
            fingerprints_.push_back({FingerprintEntry{0, p, 0}});
        }
        priors_ = {1.0};
        validate();
    }

    /// Builds from per-SU local databases that share the same location set.
    explicit GlobalDatabase(const std::vector<LocalDatabase>& locals) {
        if (locals.empty()) throw std::invalid_argument("global database needs at least one SU");
        priors_ = locals.front().priors();
        for (const auto& local : locals) {
            if (local.size() != locals.front().size()) {
                throw std::invalid_argument("all SUs must cover the same location ids");
            }
            fingerprints_.push_back(local.entries());
        }
        validate();
    }

    std::size_t su_count() const { return fingerprints_.size(); }
    int attacker_count() const { return int(priors_.size()) - 1; }
    const std::vector<double>& priors() const { return priors_; }

    const FingerprintEntry& fingerprint(int su_id, int location_id) const {
        return fingerprints_.at(std::size_t(su_id)).at(std::size_t(location_id));
    }
    void set_fingerprint(int su_id, const FingerprintEntry& e) {
        fingerprints_.at(std::size_t(su_id)).at(std::size_t(e.location_id)) = e;
    }

    LocalDatabase local_view(int su_id) const {
        return LocalDatabase(fingerprints_.at(std::size_t(su_id)), priors_);
    }

    const std::map<int, AttackerRecord>& attacker_profiles() const { return profiles_; }
    const std::vector<LoggedDecision>& decision_log() const { return log_; }

    void validate() const {
        for (const auto& row : fingerprints_) {
            if (row.size() != priors_.size()) throw std::logic_error("SU fingerprint row does not cover 0..M");
            for (std::size_t m = 0; m < row.size(); ++m) {
                if (row[m].location_id != int(m)) throw std::logic_error("fingerprint ids must be dense");
            }
        }
        double total = 0.0;
        for (double p : priors_) total += p;
        if (!priors_.empty() && std::abs(total - 1.0) > 1e-12) throw std::logic_error("priors must sum to 1");
    }

private:
    friend int register_attacker(GlobalDatabase&, std::span<const LocalReport>, double);
    friend GlobalDecision fuse(GlobalDatabase&, std::span<const LocalReport>, double);
    friend class GlobalDatabaseAccess;

    std::vector<std::vector<FingerprintEntry>> fingerprints_;
    std::vector<double> priors_;
    std::map<int, AttackerRecord> profiles_;
    std::vector<LoggedDecision> log_;
};

/// Mutable access for persistence and bookkeeping code.
class GlobalDatabaseAccess {
public:
    static std::vector<std::vector<FingerprintEntry>>& fingerprints(GlobalDatabase& db) { return db.fingerprints_; }
    static std::vector<double>& priors(GlobalDatabase& db) { return db.priors_; }
    static std::map<int, AttackerRecord>& profiles(GlobalDatabase& db) { return db.profiles_; }
    static std::vector<LoggedDecision>& log(GlobalDatabase& db) { return db.log_; }
};

/// Unanimity rule: all 0 -> TruePu, all m >= 1 -> KnownAttacker(m), any
/// disagreement -> NewAttacker(M+1).
inline GlobalDecision fuse_reports(std::span<const LocalReport> reports, int attacker_count) {
    if (reports.empty()) throw NoReports();
    for (const auto& r : reports) {
        if (!r.estimate) throw std::invalid_argument("every fused report must carry a location estimate");
    }
    const int first = *reports.front().estimate;
    const bool unanimous = std::all_of(reports.begin(), reports.end(),
                                       [&](const LocalReport& r) { return *r.estimate == first; });
    if (!unanimous) return GlobalDecision::new_attacker(attacker_count + 1);
    if (first == 0) return GlobalDecision::true_pu();
    return GlobalDecision::known_attacker(first);
}

/// fuse_reports against the database's current M, appended to the decision log.
inline GlobalDecision fuse(GlobalDatabase& db, std::span<const LocalReport> reports, double time) {
    const GlobalDecision d = fuse_reports(reports, db.attacker_count());
    db.log_.push_back({time, d});
    return d;
}

/// Adds location M+1. Reporting SUs seed the entry from their vector's sample
/// mean; the others average their existing attacker entries (or copy the
/// primary-user entry when M was 0). Priors become uniform.
inline int register_attacker(GlobalDatabase& db, std::span<const LocalReport> reports, double time) {
    const int new_id = db.attacker_count() + 1;
    std::map<int, const LocalReport*> by_su;
    for (const auto& r : reports) by_su[r.su_id] = &r;

    for (std::size_t su = 0; su < db.fingerprints_.size(); ++su) {
        auto& row = db.fingerprints_[su];
        double power = 0.0;
        auto it = by_su.find(int(su));
        if (it != by_su.end() && it->second->energy.size() > 0 && it->second->energy.sample_mean() > 0.0) {
            power = it->second->energy.sample_mean();
        } else if (new_id > 1) {
            for (int m = 1; m < new_id; ++m) power += row[std::size_t(m)].per_sample_power;
            power /= double(new_id - 1);
        } else {
            power = row[0].per_sample_power;
        }
        row.push_back({new_id, power, it != by_su.end() ? 1u : 0u});
    }
    db.priors_.assign(std::size_t(new_id + 1), 1.0 / double(new_id + 1));
    db.profiles_[new_id] = AttackerRecord{time, 0};
    return new_id;
}

/// Runs the fast energy detector on the aggregate and, for candidate
/// primary-user signals, the location verifier on the full vector.
inline LocalReport verify_pipeline(const EnergyVector& e, const Thresholds& thr, const LocalDatabase& local_db,
                                   int su_id = 0) {
    LocalReport report;
    report.su_id = su_id;
    report.energy = e;
    report.decision = classify_energy(e.aggregate(), thr);
    if (report.decision == LocalDecision::CandidatePrimary) {
        report.estimate = estimate_location(e, local_db);
    }
    return report;
}

struct DatabaseDelta {
    int su_id = 0;
    std::vector<FingerprintEntry> upserts;
};

struct UpdateBroadcast {
    std::vector<DatabaseDelta> deltas;
    std::vector<double> priors;
    /// SUs re-run calibrate_thresholds from their refreshed primary-user entry.
    bool recalibrate_thresholds = false;
};

/// Applies the global decision to the database and builds the per-SU deltas.
inline UpdateBroadcast broadcast_update(GlobalDatabase& db, const GlobalDecision& decision,
                                        std::span<const LocalReport> reports, double learning_rate = 0.1,
                                        double time = 0.0) {
    UpdateBroadcast out;
    auto& fps = GlobalDatabaseAccess::fingerprints(db);
    auto& profiles = GlobalDatabaseAccess::profiles(db);

    auto ewma_at = [&](int location) {
        for (const auto& r : reports) {
            if (r.energy.size() == 0) continue;
            auto& entry = fps.at(std::size_t(r.su_id)).at(std::size_t(location));
            entry = update_fingerprint(entry, r.energy, learning_rate);
            out.deltas.push_back({r.su_id, {entry}});
        }
    };

    switch (decision.kind()) {
        case GlobalDecision::Kind::TruePu:
            ewma_at(0);
            break;
        case GlobalDecision::Kind::KnownAttacker:
            if (decision.location() > db.attacker_count()) {
                throw std::invalid_argument("known attacker id exceeds M");
            }
            ewma_at(decision.location());
            profiles[decision.location()].attack_count += 1;
            out.recalibrate_thresholds = true;
            break;
        case GlobalDecision::Kind::NewAttacker: {
            if (decision.location() != db.attacker_count() + 1) {
                throw std::invalid_argument("new attacker id must be M+1");
            }
            const int id = register_attacker(db, reports, time);
            profiles[id].attack_count += 1;
            for (std::size_t su = 0; su < fps.size(); ++su) {
                out.deltas.push_back({int(su), {fps[su].at(std::size_t(id))}});
            }
            out.recalibrate_thresholds = true;
            break;
        }
    }
    out.priors = db.priors();
    return out;
}

/// Brings an SU's local copy in line with one broadcast delta.
inline void apply_delta(LocalDatabase& local, const DatabaseDelta& delta, const std::vector<double>& priors) {
    for (const auto& e : delta.upserts) {
        if (std::size_t(e.location_id) < local.size()) {
            local.set_entry(e);
        } else {
            local.append(e, priors);
        }
    }
    if (local.priors() != priors) local.set_priors(priors);
}

/// Detector thresholds implied by a stored primary-user fingerprint.
inline Thresholds thresholds_from_fingerprint(const FingerprintEntry& pu_entry, double noise_power,
                                              std::size_t n_samples, double alpha0, double pf_target,
                                              TailSplit split = TailSplit::Equal) {
    return calibrate_thresholds(energy_stats(noise_power, n_samples),
                                energy_stats(pu_entry.per_sample_power, n_samples), alpha0, pf_target, split);
}

/// Static stand-in for the incumbent (regulatory) database.
struct IncumbentDatabase {
    Position primary_bs;
    std::vector<int> channels;

    Position primary_location() const { return primary_bs; }
    const std::vector<int>& available_channels() const { return channels; }
};

}  // namespace pueguard
