#pragma once

// Text persistence for fingerprint databases and the fusion decision log.
//
// Local database, one record per location id:
//   id=0 per_sample_power=1.2e-09 observation_count=4 prior=0.5
// Global database, fingerprint records carry su_id, attacker profiles follow:
//   su_id=0 id=1 per_sample_power=3.1e-09 observation_count=1 prior=0.5
//   attacker_id=1 first_seen=12.5 attack_count=3

#include "pueguard/error.hpp"
#include "pueguard/fusion.hpp"
#include "pueguard/verifier.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace pueguard {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, std::size_t(n));
}

inline std::map<std::string, std::string> parse_record(const std::string& line, int line_no) {
    std::map<std::string, std::string> out;
    std::istringstream in(line);
    std::string token;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("database line " + std::to_string(line_no) + ": malformed field '" + token + "'", token,
                              line_no);
        }
        out[token.substr(0, eq)] = token.substr(eq + 1);
    }
    return out;
}

template <class T>
T field(const std::map<std::string, std::string>& rec, const std::string& key, int line_no) {
    auto it = rec.find(key);
    if (it == rec.end()) {
        throw ConfigError("database line " + std::to_string(line_no) + ": missing field '" + key + "'", key, line_no);
    }
    T out{};
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw ConfigError("database line " + std::to_string(line_no) + ": bad value for '" + key + "'", key, line_no);
    }
    return out;
}

template <class F>
void for_each_record(std::istream& in, F&& f) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        f(parse_record(line, line_no), line_no);
    }
}

}  // namespace detail

inline void write_local_database(std::ostream& os, const LocalDatabase& db) {
    os << "# local fingerprint database\n";
    for (std::size_t m = 0; m < db.size(); ++m) {
        const auto& e = db.entries()[m];
        os << "id=" << e.location_id << " per_sample_power=" << detail::fmt_double(e.per_sample_power)
           << " observation_count=" << e.observation_count << " prior=" << detail::fmt_double(db.priors()[m]) << '\n';
    }
}

inline LocalDatabase read_local_database(std::istream& in) {
    std::map<int, std::pair<FingerprintEntry, double>> rows;
    detail::for_each_record(in, [&](const auto& rec, int line_no) {
        FingerprintEntry e;
        e.location_id = detail::field<int>(rec, "id", line_no);
        e.per_sample_power = detail::field<double>(rec, "per_sample_power", line_no);
        e.observation_count = detail::field<std::uint64_t>(rec, "observation_count", line_no);
        const double prior = detail::field<double>(rec, "prior", line_no);
        if (!rows.emplace(e.location_id, std::make_pair(e, prior)).second) {
            throw ConfigError("database line " + std::to_string(line_no) + ": duplicate id", "id", line_no);
        }
    });
    std::vector<FingerprintEntry> entries;
    std::vector<double> priors;
    for (auto& [id, row] : rows) {
        entries.push_back(row.first);
        priors.push_back(row.second);
    }
    try {
        return LocalDatabase(std::move(entries), std::move(priors));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid local database: ") + e.what());
    }
}

inline void write_global_database(std::ostream& os, const GlobalDatabase& db) {
    os << "# global fingerprint database\n";
    for (std::size_t su = 0; su < db.su_count(); ++su) {
        for (int m = 0; m <= db.attacker_count(); ++m) {
            const auto& e = db.fingerprint(int(su), m);
            os << "su_id=" << su << " id=" << m << " per_sample_power=" << detail::fmt_double(e.per_sample_power)
               << " observation_count=" << e.observation_count
               << " prior=" << detail::fmt_double(db.priors()[std::size_t(m)]) << '\n';
        }
    }
    for (const auto& [id, p] : db.attacker_profiles()) {
        os << "attacker_id=" << id << " first_seen=" << detail::fmt_double(p.first_seen)
           << " attack_count=" << p.attack_count << '\n';
    }
}

/// The decision log is not part of this format; see write_decision_log.
inline GlobalDatabase read_global_database(std::istream& in) {
    std::map<int, std::map<int, FingerprintEntry>> rows;
    std::map<int, double> priors;
    std::map<int, AttackerRecord> profiles;
    detail::for_each_record(in, [&](const auto& rec, int line_no) {
        if (rec.count("attacker_id")) {
            AttackerRecord p;
            p.first_seen = detail::field<double>(rec, "first_seen", line_no);
            p.attack_count = detail::field<std::uint64_t>(rec, "attack_count", line_no);
            profiles[detail::field<int>(rec, "attacker_id", line_no)] = p;
            return;
        }
        FingerprintEntry e;
        const int su = detail::field<int>(rec, "su_id", line_no);
        e.location_id = detail::field<int>(rec, "id", line_no);
        e.per_sample_power = detail::field<double>(rec, "per_sample_power", line_no);
        e.observation_count = detail::field<std::uint64_t>(rec, "observation_count", line_no);
        rows[su][e.location_id] = e;
        priors[e.location_id] = detail::field<double>(rec, "prior", line_no);
    });
    std::vector<LocalDatabase> locals;
    std::vector<double> prior_vec;
    for (const auto& [id, p] : priors) prior_vec.push_back(p);
    int expected_su = 0;
    for (const auto& [su, row] : rows) {
        if (su != expected_su++) throw ConfigError("global database su ids must be dense from 0", "su_id");
        std::vector<FingerprintEntry> entries;
        for (const auto& [id, e] : row) entries.push_back(e);
        try {
            locals.emplace_back(std::move(entries), prior_vec);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid global database: ") + e.what());
        }
    }
    GlobalDatabase db(locals);
    GlobalDatabaseAccess::profiles(db) = std::move(profiles);
    return db;
}

inline void write_decision_log(std::ostream& os, const GlobalDatabase& db) {
    os << "time,decision,location_id\n";
    for (const auto& d : db.decision_log()) {
        os << detail::fmt_double(d.time) << ',' << to_string(d.decision.kind()) << ',' << d.decision.location()
           << '\n';
    }
}

}  // namespace pueguard
