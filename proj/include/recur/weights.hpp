#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "recur/error.hpp"

namespace recur {

/// Gaussian weight measure G(z) = Phi((z - mu) / sigma) calibrated on the
/// pairwise distances of one sample.
///
/// The density is normalized to unit mass, so 1 - G is a proper survival
/// function. The mass left on (-inf, 0) is harmless: every integrand built
/// from recurrence rates vanishes there.
struct GaussianWeight {
    double mu = 0.0;
    double sigma = 1.0;

    [[nodiscard]] double cdf(double z) const noexcept {
        if (z == std::numeric_limits<double>::infinity()) return 1.0;
        if (z == -std::numeric_limits<double>::infinity()) return 0.0;
        // erfc keeps full relative accuracy in the lower tail.
        return 0.5 * std::erfc(-(z - mu) / (sigma * std::numbers::sqrt2));
    }

    [[nodiscard]] double survival(double z) const noexcept {
        if (z == std::numeric_limits<double>::infinity()) return 0.0;
        if (z == -std::numeric_limits<double>::infinity()) return 1.0;
        return 0.5 * std::erfc((z - mu) / (sigma * std::numbers::sqrt2));
    }

    /// Normalized density g(z) = phi((z - mu) / sigma) / sigma.
    [[nodiscard]] double density(double z) const noexcept {
        const double u = (z - mu) / sigma;
        return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    }
};

/// Mean and population standard deviation of a distance multiset.
inline GaussianWeight estimate_weight(std::span<const double> distances) {
    if (distances.empty()) throw InvalidInput("cannot calibrate a weight on an empty distance list");
    const auto count = static_cast<double>(distances.size());
    double mean = 0.0;
    for (double d : distances) mean += d;
    mean /= count;
    double ss = 0.0;
    for (double d : distances) ss += (d - mean) * (d - mean);
    const double sigma = std::sqrt(ss / count);
    // Identical values can leave a round-off residue of order eps * mean.
    if (!(sigma > 0.0) || sigma <= 1e-13 * std::abs(mean)) {
        throw DegenerateWeight("all pairwise distances are identical; the sample cannot be tested");
    }
    return {mean, sigma};
}

inline double weight_cdf(const GaussianWeight& w, double z) noexcept { return w.cdf(z); }

}  // namespace recur
