#pragma once

// Scenario files for the network simulator. Example:
//
//   network.channels = 8
//   network.guard_channels = 1
//   pu.arrival_rate = 0.05
//   pu.departure_rate = 0.1
//   su.arrival_rate = 3
//   su.departure_rate = 1
//   attacker.1.motive = malicious      # selfish | malicious
//   attacker.1.power = fixed           # fixed | adaptive
//   attacker.1.tx_power = 1
//   attacker.1.position = 100, 0
//   attacker.1.arrival_rate = 0.8
//   attacker.1.dwell_rate = 1
//   detection.mode = abstract          # abstract | full
//   detection.p_d = 0.9
//   run.horizon = 200000
//   run.seed = 42

#include "pueguard/config.hpp"
#include "pueguard/detector.hpp"
#include "pueguard/netsim.hpp"
#include "pueguard/radio.hpp"

#include <string>
#include <vector>

namespace pueguard {

inline const std::vector<std::string>& scenario_keys() {
    static const std::vector<std::string> keys = {
        "network.channels",         "network.guard_channels",  "pu.arrival_rate",
        "pu.departure_rate",        "pu.position",             "pu.tx_power",
        "su.arrival_rate",          "su.departure_rate",       "attacker.*.position",
        "attacker.*.motive",        "attacker.*.power",        "attacker.*.tx_power",
        "attacker.*.arrival_rate",  "attacker.*.dwell_rate",   "detection.mode",
        "detection.p_d",            "detection.p_f",           "detection.n_samples",
        "detection.alpha0",         "detection.pf_target",     "detection.tail_split",
        "detection.learning_rate",  "radio.ref_power_gain",    "radio.ref_distance",
        "radio.path_loss_exponent", "radio.shadowing_sigma_db", "radio.noise_power",
        "field.radius",             "field.sus",               "su_site.*.position",
        "run.horizon",              "run.warmup",              "run.seed",
        "run.replications",
    };
    return keys;
}

inline Position position_from(const KeyValueConfig& cfg, const std::string& key, Position fallback = {}) {
    if (!cfg.has(key)) return fallback;
    const auto [x, y] = cfg.get_pair(key);
    if (!std::isfinite(x) || !std::isfinite(y)) throw ConfigError("key '" + key + "' must be finite", key);
    return {x, y};
}

inline Propagation propagation_from(const KeyValueConfig& cfg) {
    Propagation p;
    p.ref_power_gain = cfg.get_double("radio.ref_power_gain", p.ref_power_gain);
    p.ref_distance = cfg.get_double("radio.ref_distance", p.ref_distance);
    p.path_loss_exponent = cfg.get_double("radio.path_loss_exponent", p.path_loss_exponent);
    p.shadowing_sigma_db = cfg.get_double("radio.shadowing_sigma_db", p.shadowing_sigma_db);
    p.noise_power = cfg.get_double("radio.noise_power", p.noise_power);
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), "radio");
    }
    return p;
}

inline TailSplit tail_split_from(const KeyValueConfig& cfg, TailSplit fallback) {
    if (!cfg.has("detection.tail_split")) return fallback;
    const auto s = cfg.get_string("detection.tail_split");
    if (s == "equal") return TailSplit::Equal;
    if (s == "equal_or_upper") return TailSplit::EqualOrUpper;
    throw ConfigError("detection.tail_split must be 'equal' or 'equal_or_upper', got '" + s + "'",
                      "detection.tail_split");
}

inline std::vector<AttackerProfile> attackers_from(const KeyValueConfig& cfg) {
    std::vector<AttackerProfile> out;
    for (int idx : cfg.indices("attacker")) {
        const std::string k = "attacker." + std::to_string(idx) + ".";
        AttackerProfile a;
        a.position = position_from(cfg, k + "position");
        const auto motive = cfg.get_string(k + "motive", "selfish");
        if (motive == "selfish") {
            a.motive = Motive::Selfish;
        } else if (motive == "malicious") {
            a.motive = Motive::Malicious;
        } else {
            throw ConfigError(k + "motive must be 'selfish' or 'malicious'", k + "motive");
        }
        const auto power = cfg.get_string(k + "power", "fixed");
        if (power != "fixed" && power != "adaptive") {
            throw ConfigError(k + "power must be 'fixed' or 'adaptive'", k + "power");
        }
        a.power_adaptive = power == "adaptive";
        a.tx_power = cfg.get_double(k + "tx_power", a.tx_power);
        a.arrival_rate = cfg.get_double(k + "arrival_rate", a.arrival_rate);
        a.dwell_rate = cfg.get_double(k + "dwell_rate", a.dwell_rate);
        out.push_back(a);
    }
    return out;
}

/// Builds and validates a Scenario. Unknown keys are rejected unless
/// `extra_keys` lists them.
inline Scenario scenario_from_config(const KeyValueConfig& cfg, const std::vector<std::string>& extra_keys = {}) {
    auto allowed = scenario_keys();
    allowed.insert(allowed.end(), extra_keys.begin(), extra_keys.end());
    cfg.require_known(allowed);

    Scenario s;
    s.n_channels = int(cfg.get_int("network.channels", s.n_channels));
    s.guard_count = int(cfg.get_int("network.guard_channels", s.guard_count));
    s.pu_arrival_rate = cfg.get_double("pu.arrival_rate", s.pu_arrival_rate);
    s.pu_departure_rate = cfg.get_double("pu.departure_rate", s.pu_departure_rate);
    s.su_arrival_rate = cfg.get_double("su.arrival_rate", s.su_arrival_rate);
    s.su_departure_rate = cfg.get_double("su.departure_rate", s.su_departure_rate);
    s.attackers = attackers_from(cfg);
    s.n_sus = int(cfg.get_int("field.sus", s.n_sus));
    s.field_radius = cfg.get_double("field.radius", s.field_radius);
    s.horizon = cfg.get_double("run.horizon", s.horizon);
    s.warmup = cfg.get_double("run.warmup", s.warmup);
    s.seed = cfg.get_u64("run.seed", s.seed);

    const auto mode = cfg.get_string("detection.mode", "abstract");
    if (mode == "abstract") {
        AbstractDetection d;
        d.p_d = cfg.get_double("detection.p_d", d.p_d);
        d.p_f = cfg.get_double("detection.p_f", d.p_f);
        s.detection = d;
    } else if (mode == "full") {
        FullDetection d;
        d.propagation = propagation_from(cfg);
        d.pu_position = position_from(cfg, "pu.position");
        d.pu_tx_power = cfg.get_double("pu.tx_power", d.pu_tx_power);
        const auto n = cfg.get_int("detection.n_samples", (long long)d.n_samples);
        if (n < 1) throw ConfigError("detection.n_samples must be >= 1", "detection.n_samples");
        d.n_samples = std::size_t(n);
        d.alpha0 = cfg.get_double("detection.alpha0", d.alpha0);
        d.pf_target = cfg.get_double("detection.pf_target", d.pf_target);
        d.split = tail_split_from(cfg, d.split);
        d.learning_rate = cfg.get_double("detection.learning_rate", d.learning_rate);
        for (int idx : cfg.indices("su_site")) {
            d.su_positions.push_back(position_from(cfg, "su_site." + std::to_string(idx) + ".position"));
        }
        if (!(d.alpha0 > 0.0 && d.alpha0 < 1.0)) throw ConfigError("detection.alpha0 must be in (0,1)", "detection.alpha0");
        if (!(d.pf_target > 0.0 && d.pf_target < 1.0)) {
            throw ConfigError("detection.pf_target must be in (0,1)", "detection.pf_target");
        }
        if (!(d.learning_rate > 0.0 && d.learning_rate <= 1.0)) {
            throw ConfigError("detection.learning_rate must be in (0,1]", "detection.learning_rate");
        }
        s.detection = d;
    } else {
        throw ConfigError("detection.mode must be 'abstract' or 'full', got '" + mode + "'", "detection.mode");
    }
    s.validate();
    return s;
}

}  // namespace pueguard
