#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>

namespace pueguard {

/// Mean and variance of a Gaussian (CLT approximation of aggregated energy).
struct GaussianStats {
    double mean = 0.0;
    double variance = 1.0;

    double stddev() const { return std::sqrt(variance); }
};

inline GaussianStats make_gaussian(double mean, double variance) {
    if (!(variance > 0.0) || !std::isfinite(mean) || !std::isfinite(variance)) {
        throw std::invalid_argument("GaussianStats requires finite mean and variance > 0");
    }
    return {mean, variance};
}

/// Standard normal CDF.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Standard normal quantile, p in (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile requires p in (0,1)");
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Upper-tail inverse: Q^-1(p) = Phi^-1(1-p), computed without cancellation.
inline double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("q_inverse requires p in (0,1)");
    }
    return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Neumaier-compensated sum.
inline double compensated_sum(std::span<const double> values) {
    double sum = 0.0;
    double carry = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    return sum + carry;
}

/// splitmix64 finalizer; used to derive independent per-point seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix_seed(mix_seed(master) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

}  // namespace pueguard
