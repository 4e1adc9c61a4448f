#pragma once

// Multi-threshold fast energy detector.
//
//   E <= g0        -> NoSignal
//   g0 < E < g1    -> PueAttack   (too weak for the primary user)
//   g1 <= E <= g2  -> CandidatePrimary (handed to the location verifier)
//   E > g2         -> PueAttack   (too strong for the primary user)

#include "pueguard/error.hpp"
#include "pueguard/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pueguard {

class Thresholds {
public:
    Thresholds(double gamma0, double gamma1, double gamma2) : g0_(gamma0), g1_(gamma1), g2_(gamma2) {
        if (!std::isfinite(g0_) || !std::isfinite(g1_) || !std::isfinite(g2_)) {
            throw std::invalid_argument("thresholds must be finite");
        }
        if (!(g0_ < g1_ && g1_ < g2_)) {
            std::ostringstream os;
            os << "thresholds must satisfy gamma0 < gamma1 < gamma2, got " << g0_ << ", " << g1_ << ", " << g2_;
            throw OrderingViolation(os.str());
        }
    }

    double gamma0() const { return g0_; }
    double gamma1() const { return g1_; }
    double gamma2() const { return g2_; }

    friend bool operator==(const Thresholds&, const Thresholds&) = default;

private:
    double g0_, g1_, g2_;
};

enum class LocalDecision { NoSignal, PueAttack, CandidatePrimary };

inline const char* to_string(LocalDecision d) {
    switch (d) {
        case LocalDecision::NoSignal: return "no_signal";
        case LocalDecision::PueAttack: return "pue_attack";
        case LocalDecision::CandidatePrimary: return "candidate_primary";
    }
    return "?";
}

inline LocalDecision classify_energy(double energy, const Thresholds& thr) {
    if (energy <= thr.gamma0()) return LocalDecision::NoSignal;
    if (energy < thr.gamma1()) return LocalDecision::PueAttack;
    if (energy <= thr.gamma2()) return LocalDecision::CandidatePrimary;
    return LocalDecision::PueAttack;
}

/// How the false-alarm target is split between the two edges of the
/// primary-user band.
enum class TailSplit {
    /// pf/2 below gamma1 and pf/2 above gamma2. Infeasible calibrations throw.
    Equal,
    /// Equal split when it leaves gamma1 above gamma0; otherwise the lower
    /// attack band collapses to (gamma0, nextafter(gamma0)) and the whole
    /// target goes to the upper edge.
    EqualOrUpper,
};

/// gamma0 is the Neyman-Pearson point on H0 at level alpha0; gamma1/gamma2
/// bracket the H1 (true primary user) Gaussian.
inline Thresholds calibrate_thresholds(const GaussianStats& h0, const GaussianStats& h1, double alpha0,
                                       double pf_target, TailSplit split = TailSplit::Equal) {
    if (!(alpha0 > 0.0 && alpha0 < 1.0)) throw std::invalid_argument("alpha0 must be in (0,1)");
    if (!(pf_target > 0.0 && pf_target < 1.0)) throw std::invalid_argument("pf_target must be in (0,1)");

    const double g0 = h0.mean + q_inverse(alpha0) * h0.stddev();
    double g1 = h1.mean + normal_quantile(pf_target / 2.0) * h1.stddev();
    double g2 = h1.mean + q_inverse(pf_target / 2.0) * h1.stddev();

    if (g0 >= g1 && split == TailSplit::EqualOrUpper) {
        g1 = std::nextafter(g0, std::numeric_limits<double>::infinity());
        g2 = h1.mean + q_inverse(pf_target) * h1.stddev();
    }
    if (g0 >= g1 || g1 >= g2) {
        std::ostringstream os;
        os << "infeasible calibration: gamma0=" << g0 << " gamma1=" << g1 << " gamma2=" << g2
           << " (raise the sample count or relax alpha0/pf_target)";
        throw OrderingViolation(os.str());
    }
    return Thresholds(g0, g1, g2);
}

/// Pr{g0 < E < g1} + Pr{E > g2} under `dist`. With the attacker's stats this
/// is the detection probability; with the primary user's it is the false alarm.
inline double attack_flag_probability(const GaussianStats& dist, const Thresholds& thr) {
    const double s = dist.stddev();
    auto cdf = [&](double x) { return normal_cdf((x - dist.mean) / s); };
    auto upper = [&](double x) { return normal_cdf((dist.mean - x) / s); };
    const double lower_band = std::max(0.0, cdf(thr.gamma1()) - cdf(thr.gamma0()));
    const double p = lower_band + upper(thr.gamma2());
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace pueguard
