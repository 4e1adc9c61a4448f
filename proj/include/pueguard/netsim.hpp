#pragma once

// Discrete-event simulator of a single cognitive-radio cell: N channels shared
// by primary users, secondary-user services, a common control channel (CCC)
// and PUE attackers, with guard-channel admission control and the detection
// pipeline in the loop.

#include "pueguard/detector.hpp"
#include "pueguard/error.hpp"
#include "pueguard/fusion.hpp"
#include "pueguard/numeric.hpp"
#include "pueguard/radio.hpp"
#include "pueguard/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace pueguard {

enum class Motive { Selfish, Malicious };

struct AttackerProfile {
    Position position;
    Motive motive = Motive::Selfish;
    bool power_adaptive = false;
    double tx_power = 1.0;      // used when power-fixed
    double arrival_rate = 0.1;  // attacks per unit time
    double dwell_rate = 0.1;    // 1 / mean hold time of a successful attack
};

struct AbstractDetection {
    double p_d = 0.9;
    double p_f = 0.0;
};

/// Radio, detector, verifier and fusion center all run on each attack.
struct FullDetection {
    Propagation propagation;
    Position pu_position;
    double pu_tx_power = 1.0;
    std::size_t n_samples = 100;
    double alpha0 = 0.05;
    double pf_target = 1e-3;
    TailSplit split = TailSplit::EqualOrUpper;
    double learning_rate = 0.1;
    /// Explicit SU positions; when empty, n_sus positions are drawn uniformly
    /// in the field disc.
    std::vector<Position> su_positions;
};

using DetectionMode = std::variant<AbstractDetection, FullDetection>;

struct Scenario {
    int n_channels = 6;
    double pu_arrival_rate = 0.05;
    double pu_departure_rate = 0.1;
    double su_arrival_rate = 1.0;
    double su_departure_rate = 0.5;
    std::vector<AttackerProfile> attackers;
    int guard_count = 0;
    DetectionMode detection = AbstractDetection{};
    int n_sus = 0;
    double field_radius = 1000.0;
    double horizon = 1e4;
    double warmup = 0.0;
    std::uint64_t seed = 1;
    /// Re-check channel accounting after every event (tests).
    bool audit = false;

    void validate() const {
        auto fail = [](const std::string& what, const std::string& key) { throw ConfigError(what, key); };
        if (n_channels < 1) fail("n_channels must be >= 1", "network.channels");
        if (guard_count < 0 || guard_count >= n_channels) {
            fail("guard_count must satisfy 0 <= g < n_channels", "network.guard_channels");
        }
        if (!(pu_arrival_rate > 0.0)) fail("pu arrival rate must be > 0", "pu.arrival_rate");
        if (!(pu_departure_rate > 0.0)) fail("pu departure rate must be > 0", "pu.departure_rate");
        if (!(su_arrival_rate > 0.0)) fail("su arrival rate must be > 0", "su.arrival_rate");
        if (!(su_departure_rate > 0.0)) fail("su departure rate must be > 0", "su.departure_rate");
        for (const auto& a : attackers) {
            if (!(a.arrival_rate > 0.0)) fail("attacker arrival rate must be > 0", "attacker.arrival_rate");
            if (!(a.dwell_rate > 0.0)) fail("attacker dwell rate must be > 0", "attacker.dwell_rate");
            if (!a.power_adaptive && !(a.tx_power >= 0.0)) fail("attacker tx_power must be >= 0", "attacker.tx_power");
        }
        if (!(horizon > 0.0)) fail("horizon must be > 0", "run.horizon");
        if (!(warmup >= 0.0 && warmup < horizon)) fail("warmup must be in [0, horizon)", "run.warmup");
        if (!(field_radius > 0.0)) fail("field radius must be > 0", "field.radius");
        if (const auto* abs = std::get_if<AbstractDetection>(&detection)) {
            if (!(abs->p_d >= 0.0 && abs->p_d <= 1.0)) fail("p_d must be in [0,1]", "detection.p_d");
            if (!(abs->p_f >= 0.0 && abs->p_f <= 1.0)) fail("p_f must be in [0,1]", "detection.p_f");
        } else {
            const auto& full = std::get<FullDetection>(detection);
            if (n_sus < 1 && full.su_positions.empty()) fail("full detection needs at least one SU", "field.sus");
            if (full.n_samples < 1) fail("n_samples must be >= 1", "detection.n_samples");
            try {
                full.propagation.validate();
            } catch (const std::invalid_argument& e) {
                fail(e.what(), "radio");
            }
        }
    }
};

enum class Holder { Idle, Pu, Su, Ccc, Eu };

struct ChannelState {
    Holder holder = Holder::Idle;
    std::uint64_t owner = 0;  // session / attack id for Su, Pu and Eu

    friend bool operator==(const ChannelState&, const ChannelState&) = default;
};

class ChannelTable {
public:
    explicit ChannelTable(int n_channels) : channels_(std::size_t(n_channels)) {}

    std::size_t size() const { return channels_.size(); }
    const ChannelState& operator[](std::size_t c) const { return channels_[c]; }
    ChannelState& operator[](std::size_t c) { return channels_[c]; }

    std::vector<std::size_t> with(Holder h) const {
        std::vector<std::size_t> out;
        for (std::size_t c = 0; c < channels_.size(); ++c) {
            if (channels_[c].holder == h) out.push_back(c);
        }
        return out;
    }
    std::size_t count(Holder h) const {
        return std::size_t(std::count_if(channels_.begin(), channels_.end(),
                                         [h](const ChannelState& s) { return s.holder == h; }));
    }
    std::size_t idle_count() const { return count(Holder::Idle); }
    bool has_ccc() const { return count(Holder::Ccc) == 1; }

private:
    std::vector<ChannelState> channels_;
};

template <class Urbg>
std::size_t pick_uniform(const std::vector<std::size_t>& options, Urbg& rng) {
    return options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
}

enum class RequestKind { NewCall, Handoff };
enum class Admission { Admit, Deny };

/// Guard-channel rule: handoffs take any idle channel, new calls only when
/// more than g channels are idle.
inline Admission admit_request(RequestKind kind, std::size_t idle_count, int guard_count) {
    if (kind == RequestKind::Handoff) return idle_count >= 1 ? Admission::Admit : Admission::Deny;
    return idle_count > std::size_t(guard_count) ? Admission::Admit : Admission::Deny;
}

struct CccOutcome {
    std::optional<std::size_t> new_channel;
    std::optional<std::uint64_t> preempted_su;  // that SU must now request a handoff
    bool outage = false;
};

/// Relocates the CCC after it lost its channel: idle channel first, else the
/// channel of a random SU (which is displaced), else outage.
template <class Urbg>
CccOutcome maintain_ccc(ChannelTable& table, Urbg& rng) {
    CccOutcome out;
    if (auto idle = table.with(Holder::Idle); !idle.empty()) {
        const auto c = pick_uniform(idle, rng);
        table[c] = {Holder::Ccc, 0};
        out.new_channel = c;
    } else if (auto su = table.with(Holder::Su); !su.empty()) {
        const auto c = pick_uniform(su, rng);
        out.preempted_su = table[c].owner;
        table[c] = {Holder::Ccc, 0};
        out.new_channel = c;
    } else {
        out.outage = true;
    }
    return out;
}

struct AttackResolution {
    enum class Kind { Detected, Succeeded, Aborted };
    Kind kind = Kind::Aborted;
    std::optional<std::size_t> channel;  // target channel (also set for Detected)
};

/// Target selection (selfish: idle only; malicious: idle, SU or CCC) followed
/// by `detect()`, which returns true when the attack is caught. Does not
/// modify the table.
template <class Urbg, class Detect>
AttackResolution resolve_attack(const AttackerProfile& profile, const ChannelTable& table, Detect&& detect,
                                Urbg& rng) {
    std::vector<std::size_t> targets = table.with(Holder::Idle);
    if (profile.motive == Motive::Malicious) {
        for (std::size_t c = 0; c < table.size(); ++c) {
            if (table[c].holder == Holder::Su || table[c].holder == Holder::Ccc) targets.push_back(c);
        }
        std::sort(targets.begin(), targets.end());
    }
    if (targets.empty()) return {AttackResolution::Kind::Aborted, std::nullopt};
    const auto c = pick_uniform(targets, rng);
    if (detect()) return {AttackResolution::Kind::Detected, c};
    return {AttackResolution::Kind::Succeeded, c};
}

struct Metrics {
    std::uint64_t new_call_arrivals = 0;
    std::uint64_t new_call_admitted = 0;
    std::uint64_t new_call_blocked = 0;
    std::uint64_t handoff_requests = 0;
    std::uint64_t handoff_admitted = 0;
    std::uint64_t handoff_dropped = 0;
    std::uint64_t pu_arrivals = 0;
    std::uint64_t pu_blocked = 0;
    std::uint64_t pu_false_alarms = 0;
    std::uint64_t outage_episodes = 0;
    double outage_time = 0.0;
    double recovery_time_total = 0.0;
    std::uint64_t attacks_launched = 0;
    std::uint64_t attacks_detected = 0;
    std::uint64_t attacks_succeeded = 0;
    std::uint64_t attacks_aborted = 0;
    double bandwidth_waste = 0.0;  // channel-time held by attackers
    double observed_time = 0.0;

    double new_call_blocking_rate() const {
        return new_call_arrivals ? double(new_call_blocked) / double(new_call_arrivals) : 0.0;
    }
    /// Fraction of admitted services later dropped on a failed handoff.
    double handoff_dropping_rate() const {
        return new_call_admitted ? double(handoff_dropped) / double(new_call_admitted) : 0.0;
    }
    double drops_per_handoff_request() const {
        return handoff_requests ? double(handoff_dropped) / double(handoff_requests) : 0.0;
    }
    double mean_recovery_time() const {
        return outage_episodes ? recovery_time_total / double(outage_episodes) : 0.0;
    }
    double outage_fraction() const { return observed_time > 0.0 ? outage_time / observed_time : 0.0; }
    double attack_detection_rate() const {
        const auto resolved = attacks_detected + attacks_succeeded;
        return resolved ? double(attacks_detected) / double(resolved) : 0.0;
    }

    /// Sums counters of independent replications.
    Metrics& operator+=(const Metrics& o) {
        new_call_arrivals += o.new_call_arrivals;
        new_call_admitted += o.new_call_admitted;
        new_call_blocked += o.new_call_blocked;
        handoff_requests += o.handoff_requests;
        handoff_admitted += o.handoff_admitted;
        handoff_dropped += o.handoff_dropped;
        pu_arrivals += o.pu_arrivals;
        pu_blocked += o.pu_blocked;
        pu_false_alarms += o.pu_false_alarms;
        outage_episodes += o.outage_episodes;
        outage_time += o.outage_time;
        recovery_time_total += o.recovery_time_total;
        attacks_launched += o.attacks_launched;
        attacks_detected += o.attacks_detected;
        attacks_succeeded += o.attacks_succeeded;
        attacks_aborted += o.attacks_aborted;
        bandwidth_waste += o.bandwidth_waste;
        observed_time += o.observed_time;
        return *this;
    }

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Transmit power that makes a power-adaptive attacker's received power at
/// the field centroid equal the primary user's.
inline double adaptive_tx_power(const Propagation& prop, const Position& attacker, const Position& pu,
                                double pu_tx_power, const Position& centroid = {}) {
    const double target = received_power(prop, pu_tx_power, distance(pu, centroid));
    const double unit = received_power(prop, 1.0, distance(attacker, centroid));
    return target / unit;
}

/// Uniform points in a disc of the given radius around the origin.
template <class Urbg>
std::vector<Position> place_in_disc(std::size_t n, double radius, Urbg& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Position> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double r = radius * std::sqrt(unit(rng));
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        out.push_back({r * std::cos(theta), r * std::sin(theta)});
    }
    return out;
}

/// The sensing side of full detection: SUs with local databases and
/// thresholds, and the fusion center's global database.
class SensingNetwork {
public:
    SensingNetwork(const FullDetection& cfg, std::vector<Position> su_positions)
        : cfg_(cfg), positions_(std::move(su_positions)) {
        if (positions_.empty()) throw ConfigError("full detection needs at least one SU", "field.sus");
        const SourceSpec pu{cfg_.pu_position, cfg_.pu_tx_power, SourceId::primary_user()};
        std::vector<double> pu_power;
        for (const auto& p : positions_) pu_power.push_back(per_sample_power(cfg_.propagation, pu, p));
        global_ = GlobalDatabase(pu_power);
        for (std::size_t su = 0; su < positions_.size(); ++su) {
            locals_.push_back(global_.local_view(int(su)));
            try {
                thresholds_.push_back(threshold_for(int(su)));
            } catch (const OrderingViolation& e) {
                std::ostringstream os;
                os << "SU " << su << " cannot calibrate its detector: " << e.what();
                throw ConfigError(os.str(), "detection.pf_target");
            }
        }
    }

    struct Outcome {
        bool detected = false;
        bool flagged_by_energy = false;
        std::optional<GlobalDecision> decision;
    };

    /// One sensing epoch with `source` transmitting; updates the databases.
    template <class Urbg>
    Outcome sense(const SourceSpec& source, double time, Urbg& rng) {
        std::vector<LocalReport> candidates;
        Outcome out;
        for (std::size_t su = 0; su < positions_.size(); ++su) {
            auto e = draw_energy_vector(cfg_.propagation, std::optional<SourceSpec>(source), positions_[su],
                                        cfg_.n_samples, rng);
            auto report = verify_pipeline(e, thresholds_[su], locals_[su], int(su));
            if (report.decision == LocalDecision::PueAttack) out.flagged_by_energy = true;
            if (report.decision == LocalDecision::CandidatePrimary) candidates.push_back(std::move(report));
        }
        if (out.flagged_by_energy) {
            out.detected = true;
            return out;
        }
        if (candidates.empty()) return out;
        const GlobalDecision d = fuse(global_, candidates, time);
        const UpdateBroadcast update = broadcast_update(global_, d, candidates, cfg_.learning_rate, time);
        for (const auto& delta : update.deltas) {
            apply_delta(locals_[std::size_t(delta.su_id)], delta, update.priors);
        }
        for (auto& local : locals_) {
            if (local.priors() != update.priors) local.set_priors(update.priors);
        }
        if (update.recalibrate_thresholds) {
            for (std::size_t su = 0; su < positions_.size(); ++su) {
                try {
                    thresholds_[su] = threshold_for(int(su));
                } catch (const OrderingViolation&) {
                    // keep the previous thresholds
                }
            }
        }
        out.decision = d;
        out.detected = d.is_attack();
        return out;
    }

    /// Registers `source` as attacker location M+1 from `epochs` sensing
    /// periods observed at every SU. Returns the new location id.
    template <class Urbg>
    int enroll(const SourceSpec& source, double time, Urbg& rng, std::size_t epochs = 1) {
        if (epochs < 1) throw std::invalid_argument("enroll needs at least one epoch");
        std::vector<LocalReport> reports;
        for (std::size_t su = 0; su < positions_.size(); ++su) {
            auto e = draw_energy_vector(cfg_.propagation, std::optional<SourceSpec>(source), positions_[su],
                                        cfg_.n_samples * epochs, rng);
            reports.push_back({int(su), std::nullopt, std::move(e), LocalDecision::CandidatePrimary});
        }
        const int id = register_attacker(global_, reports, time);
        for (std::size_t su = 0; su < positions_.size(); ++su) locals_[su] = global_.local_view(int(su));
        return id;
    }

    SourceSpec attacker_source(const AttackerProfile& a, int index) const {
        const double tx = a.power_adaptive
                              ? adaptive_tx_power(cfg_.propagation, a.position, cfg_.pu_position, cfg_.pu_tx_power)
                              : a.tx_power;
        return {a.position, tx, SourceId::attacker(index)};
    }

    const GlobalDatabase& global() const { return global_; }
    const std::vector<LocalDatabase>& locals() const { return locals_; }
    const std::vector<Thresholds>& thresholds() const { return thresholds_; }
    const std::vector<Position>& positions() const { return positions_; }

private:
    Thresholds threshold_for(int su) const {
        return thresholds_from_fingerprint(locals_[std::size_t(su)].entry(0), cfg_.propagation.noise_power,
                                           cfg_.n_samples, cfg_.alpha0, cfg_.pf_target, cfg_.split);
    }

    FullDetection cfg_;
    std::vector<Position> positions_;
    GlobalDatabase global_;
    std::vector<LocalDatabase> locals_;
    std::vector<Thresholds> thresholds_;
};

namespace detail {

enum class EventType { PuArrival, PuDeparture, SuArrival, SuDeparture, AttackArrival, AttackDeparture };

struct Event {
    double time;
    std::uint64_t seq;
    EventType type;
    std::uint64_t id;  // session / attack id, or attacker profile index for arrivals

    bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

// Stream indices for derive_seed; one per source of randomness so that runs
// differing only in admission policy see identical traffic.
enum Stream : std::uint64_t { kPu = 1, kSu = 2, kSelect = 3, kPlacement = 4, kSensing = 5, kAttackBase = 100 };

class Simulator {
public:
    explicit Simulator(const Scenario& s)
        : sc_(s),
          table_(s.n_channels),
          pu_rng_(derive_seed(s.seed, kPu)),
          su_rng_(derive_seed(s.seed, kSu)),
          select_rng_(derive_seed(s.seed, kSelect)),
          sensing_rng_(derive_seed(s.seed, kSensing)) {
        sc_.validate();
        for (std::size_t a = 0; a < sc_.attackers.size(); ++a) {
            attack_rng_.emplace_back(derive_seed(s.seed, kAttackBase + 2 * a));
            detect_rng_.emplace_back(derive_seed(s.seed, kAttackBase + 2 * a + 1));
        }
        if (const auto* full = std::get_if<FullDetection>(&sc_.detection)) {
            std::vector<Position> pos = full->su_positions;
            if (pos.empty()) {
                std::mt19937_64 placement(derive_seed(s.seed, kPlacement));
                pos = place_in_disc(std::size_t(sc_.n_sus), sc_.field_radius, placement);
            }
            sensing_.emplace(*full, std::move(pos));
        }
        table_[0] = {Holder::Ccc, 0};
    }

    Metrics run() {
        schedule(exp_draw(sc_.pu_arrival_rate, pu_rng_), EventType::PuArrival, 0);
        schedule(exp_draw(sc_.su_arrival_rate, su_rng_), EventType::SuArrival, 0);
        for (std::size_t a = 0; a < sc_.attackers.size(); ++a) {
            schedule(exp_draw(sc_.attackers[a].arrival_rate, attack_rng_[a]), EventType::AttackArrival, a);
        }
        while (!queue_.empty()) {
            const Event ev = queue_.top();
            if (ev.time > sc_.horizon) break;
            queue_.pop();
            advance(ev.time);
            dispatch(ev);
            if (sc_.audit) audit();
        }
        advance(sc_.horizon);
        m_.observed_time = sc_.horizon - sc_.warmup;
        return m_;
    }

    const ChannelTable& table() const { return table_; }
    const std::optional<SensingNetwork>& sensing() const { return sensing_; }

private:
    template <class Urbg>
    static double exp_draw(double rate, Urbg& rng) {
        return std::exponential_distribution<double>(rate)(rng);
    }

    void schedule(double delay, EventType type, std::uint64_t id) {
        queue_.push({now_ + delay, seq_++, type, id});
    }

    bool counting() const { return now_ >= sc_.warmup; }

    void advance(double t) {
        const double lo = std::max(now_, sc_.warmup);
        if (t > lo) {
            const double dt = t - lo;
            m_.bandwidth_waste += dt * double(table_.count(Holder::Eu));
            if (in_outage_) m_.outage_time += dt;
        }
        now_ = t;
    }

    void dispatch(const Event& ev) {
        switch (ev.type) {
            case EventType::PuArrival: on_pu_arrival(); break;
            case EventType::PuDeparture: release(pu_channel_, ev.id); break;
            case EventType::SuArrival: on_su_arrival(); break;
            case EventType::SuDeparture: on_su_departure(ev.id); break;
            case EventType::AttackArrival: on_attack(ev.id); break;
            case EventType::AttackDeparture: release(eu_channel_, ev.id); break;
        }
    }

    void on_pu_arrival() {
        schedule(exp_draw(sc_.pu_arrival_rate, pu_rng_), EventType::PuArrival, 0);
        const double hold = exp_draw(sc_.pu_departure_rate, pu_rng_);
        if (counting()) ++m_.pu_arrivals;
        if (const auto* abs = std::get_if<AbstractDetection>(&sc_.detection); abs && abs->p_f > 0.0) {
            if (std::bernoulli_distribution(abs->p_f)(sensing_rng_) && counting()) ++m_.pu_false_alarms;
        }

        std::size_t c;
        if (auto idle = table_.with(Holder::Idle); !idle.empty()) {
            c = pick_uniform(idle, select_rng_);
        } else if (auto eu = table_.with(Holder::Eu); !eu.empty()) {
            c = pick_uniform(eu, select_rng_);
            eu_channel_.erase(table_[c].owner);
        } else if (auto su = table_.with(Holder::Su); !su.empty()) {
            c = pick_uniform(su, select_rng_);
        } else if (auto ccc = table_.with(Holder::Ccc); !ccc.empty()) {
            c = ccc.front();
        } else {
            if (counting()) ++m_.pu_blocked;
            return;
        }
        const ChannelState previous = table_[c];
        const std::uint64_t id = next_id_++;
        table_[c] = {Holder::Pu, id};
        pu_channel_[id] = c;
        schedule(hold, EventType::PuDeparture, id);
        displaced(previous);
    }

    void on_su_arrival() {
        schedule(exp_draw(sc_.su_arrival_rate, su_rng_), EventType::SuArrival, 0);
        const double hold = exp_draw(sc_.su_departure_rate, su_rng_);
        if (counting()) ++m_.new_call_arrivals;
        if (admit_request(RequestKind::NewCall, table_.idle_count(), sc_.guard_count) == Admission::Deny) {
            if (counting()) ++m_.new_call_blocked;
            return;
        }
        if (counting()) ++m_.new_call_admitted;
        const auto c = pick_uniform(table_.with(Holder::Idle), select_rng_);
        const std::uint64_t id = next_id_++;
        table_[c] = {Holder::Su, id};
        su_channel_[id] = c;
        schedule(hold, EventType::SuDeparture, id);
    }

    void on_su_departure(std::uint64_t id) {
        auto it = su_channel_.find(id);
        if (it == su_channel_.end()) return;  // dropped earlier
        table_[it->second] = {Holder::Idle, 0};
        su_channel_.erase(it);
    }

    void on_attack(std::uint64_t profile_index) {
        const auto& profile = sc_.attackers[profile_index];
        auto& rng = attack_rng_[profile_index];
        schedule(exp_draw(profile.arrival_rate, rng), EventType::AttackArrival, profile_index);
        const double dwell = exp_draw(profile.dwell_rate, rng);
        const bool count = counting();
        if (count) ++m_.attacks_launched;

        auto detect = [&]() -> bool {
            if (const auto* abs = std::get_if<AbstractDetection>(&sc_.detection)) {
                return std::bernoulli_distribution(abs->p_d)(detect_rng_[profile_index]);
            }
            const auto source = sensing_->attacker_source(profile, int(profile_index) + 1);
            return sensing_->sense(source, now_, sensing_rng_).detected;
        };
        const AttackResolution r = resolve_attack(profile, table_, detect, select_rng_);
        switch (r.kind) {
            case AttackResolution::Kind::Aborted:
                if (count) ++m_.attacks_aborted;
                return;
            case AttackResolution::Kind::Detected:
                if (count) ++m_.attacks_detected;
                return;
            case AttackResolution::Kind::Succeeded:
                break;
        }
        if (count) ++m_.attacks_succeeded;
        const auto c = *r.channel;
        const ChannelState previous = table_[c];
        const std::uint64_t id = next_id_++;
        table_[c] = {Holder::Eu, id};
        eu_channel_[id] = c;
        schedule(dwell, EventType::AttackDeparture, id);
        displaced(previous);
    }

    /// Follow-up for whatever held a channel just taken by a PU or attacker.
    void displaced(const ChannelState& previous) {
        if (previous.holder == Holder::Su) {
            su_channel_.erase(previous.owner);
            handoff(previous.owner);
        } else if (previous.holder == Holder::Ccc) {
            const CccOutcome o = maintain_ccc(table_, select_rng_);
            if (o.preempted_su) {
                su_channel_.erase(*o.preempted_su);
                handoff(*o.preempted_su);
            }
            if (o.outage) {
                in_outage_ = true;
                outage_start_ = now_;
            }
        }
    }

    void handoff(std::uint64_t su_id) {
        const bool count = counting();
        if (count) ++m_.handoff_requests;
        if (admit_request(RequestKind::Handoff, table_.idle_count(), sc_.guard_count) == Admission::Deny) {
            if (count) ++m_.handoff_dropped;
            return;
        }
        if (count) ++m_.handoff_admitted;
        const auto c = pick_uniform(table_.with(Holder::Idle), select_rng_);
        table_[c] = {Holder::Su, su_id};
        su_channel_[su_id] = c;
    }

    /// PU or attacker leaves; the CCC reclaims the channel if in outage.
    void release(std::unordered_map<std::uint64_t, std::size_t>& owners, std::uint64_t id) {
        auto it = owners.find(id);
        if (it == owners.end()) return;  // preempted earlier
        const auto c = it->second;
        owners.erase(it);
        if (in_outage_) {
            table_[c] = {Holder::Ccc, 0};
            in_outage_ = false;
            if (outage_start_ >= sc_.warmup) {
                ++m_.outage_episodes;
                m_.recovery_time_total += now_ - outage_start_;
            }
        } else {
            table_[c] = {Holder::Idle, 0};
        }
    }

    void audit() const {
        const auto ccc = table_.count(Holder::Ccc);
        if (in_outage_ ? ccc != 0 : ccc != 1) throw std::logic_error("CCC accounting broken");
        if (in_outage_ && (table_.count(Holder::Idle) || table_.count(Holder::Su))) {
            throw std::logic_error("outage with a usable channel");
        }
        std::size_t total = 0;
        for (Holder h : {Holder::Idle, Holder::Pu, Holder::Su, Holder::Ccc, Holder::Eu}) total += table_.count(h);
        if (total != table_.size()) throw std::logic_error("channel states do not sum to n_channels");
        if (table_.count(Holder::Su) != su_channel_.size() || table_.count(Holder::Pu) != pu_channel_.size() ||
            table_.count(Holder::Eu) != eu_channel_.size()) {
            throw std::logic_error("session maps out of sync with channel table");
        }
        if (m_.new_call_admitted + m_.new_call_blocked != m_.new_call_arrivals ||
            m_.handoff_admitted + m_.handoff_dropped != m_.handoff_requests ||
            m_.attacks_detected + m_.attacks_succeeded + m_.attacks_aborted != m_.attacks_launched) {
            throw std::logic_error("request conservation broken");
        }
    }

    Scenario sc_;
    ChannelTable table_;
    std::mt19937_64 pu_rng_, su_rng_, select_rng_, sensing_rng_;
    std::vector<std::mt19937_64> attack_rng_, detect_rng_;
    std::optional<SensingNetwork> sensing_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::unordered_map<std::uint64_t, std::size_t> pu_channel_, su_channel_, eu_channel_;
    Metrics m_;
    double now_ = 0.0;
    double outage_start_ = 0.0;
    bool in_outage_ = false;
    std::uint64_t seq_ = 0;
    std::uint64_t next_id_ = 1;
};

}  // namespace detail

/// Runs one replication to the horizon. Deterministic given scenario.seed.
inline Metrics run(const Scenario& scenario) {
    detail::Simulator sim(scenario);
    return sim.run();
}

}  // namespace pueguard
