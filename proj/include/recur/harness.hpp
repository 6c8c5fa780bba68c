#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "recur/error.hpp"
#include "recur/inference.hpp"
#include "recur/parallel.hpp"
#include "recur/rng.hpp"
#include "recur/simulate.hpp"
#include "recur/stats_core.hpp"

namespace recur {

/// One Monte-Carlo power study: `reps` simulated samples, each tested with
/// every statistic in `specs` using m permutations.
struct PowerStudySpec {
    ScenarioConfig scenario;
    std::vector<StatisticSpec> specs;
    std::size_t reps = 200;
    std::size_t m = 100;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

struct SpecPower {
    StatisticSpec spec;
    std::size_t rejections = 0;
    double rate = 0.0;
    double se = 0.0;       // sqrt(rate (1 - rate) / reps)
    double seconds = 0.0;  // summed test time over replications
    std::vector<double> p_values;  // per replication

    /// Rejection rate at another level, from the stored p-values.
    [[nodiscard]] double rate_at(double alpha) const {
        if (p_values.empty()) return 0.0;
        const auto hits = std::count_if(p_values.begin(), p_values.end(), [&](double p) { return p <= alpha; });
        return static_cast<double>(hits) / static_cast<double>(p_values.size());
    }
};

struct PowerResult {
    ScenarioConfig scenario;
    std::size_t reps = 0;
    std::size_t m = 0;
    double alpha = 0.0;
    std::vector<SpecPower> per_spec;
};

inline void validate(const PowerStudySpec& spec) {
    if (spec.reps < 1) throw InvalidInput("reps must be at least 1");
    if (spec.specs.empty()) throw InvalidInput("at least one statistic is required");
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
    if (spec.m < std::max<std::size_t>(1, minimal_permutations(spec.alpha))) {
        throw InvalidInput("alpha " + std::to_string(spec.alpha) + " needs at least " +
                           std::to_string(minimal_permutations(spec.alpha)) + " permutations");
    }
    if (spec.scenario.n < 3) throw InvalidInput("power studies need n >= 3");
    validate(spec.scenario);
}

/// Runs the study. Replication k simulates from stream (seed, Replication, k)
/// and permutes with stream (seed, Permutation, k), so results do not depend
/// on the thread count.
inline PowerResult run_power(const PowerStudySpec& spec) {
    validate(spec);
    const std::size_t reps = spec.reps;
    const std::size_t s_count = spec.specs.size();
    std::vector<double> p(reps * s_count, 1.0);
    std::vector<double> secs(reps * s_count, 0.0);

    parallel_for(reps, spec.threads, [&](std::size_t k) {
        ScenarioConfig cfg = spec.scenario;
        cfg.seed = derive_seed(spec.seed, StreamTask::Replication, k);
        const std::uint64_t perm_seed = derive_seed(spec.seed, StreamTask::Permutation, k);
        try {
            const auto [x, y] = gen_scenario(cfg);
            for (std::size_t s = 0; s < s_count; ++s) {
                const auto report = permutation_test(x, y, spec.specs[s], spec.m, perm_seed, 1);
                p[k * s_count + s] = report.p_value;
                secs[k * s_count + s] = std::chrono::duration<double>(report.elapsed).count();
            }
        } catch (const DegenerateWeight& e) {
            throw DegenerateWeight("replication " + std::to_string(k) + ": " + e.what());
        } catch (const InvalidInput& e) {
            throw InvalidInput("replication " + std::to_string(k) + ": " + e.what());
        } catch (const InternalError& e) {
            throw InternalError("replication " + std::to_string(k) + ": " + e.what());
        }
    });

    PowerResult out;
    out.scenario = spec.scenario;
    out.reps = reps;
    out.m = spec.m;
    out.alpha = spec.alpha;
    for (std::size_t s = 0; s < s_count; ++s) {
        SpecPower sp;
        sp.spec = spec.specs[s];
        sp.p_values.resize(reps);
        for (std::size_t k = 0; k < reps; ++k) {
            sp.p_values[k] = p[k * s_count + s];
            sp.seconds += secs[k * s_count + s];
        }
        sp.rate = sp.rate_at(spec.alpha);
        sp.rejections = static_cast<std::size_t>(std::llround(sp.rate * static_cast<double>(reps)));
        sp.se = std::sqrt(sp.rate * (1.0 - sp.rate) / static_cast<double>(reps));
        out.per_spec.push_back(std::move(sp));
    }
    return out;
}

/// Kolmogorov distance between the empirical CDF of p-values and Uniform(0, 1).
inline double uniform_ks_distance(std::vector<double> p_values) {
    if (p_values.empty()) return 0.0;
    std::sort(p_values.begin(), p_values.end());
    const auto count = static_cast<double>(p_values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < p_values.size(); ++i) {
        const double u = std::clamp(p_values[i], 0.0, 1.0);
        d = std::max({d, static_cast<double>(i + 1) / count - u, u - static_cast<double>(i) / count});
    }
    return d;
}

}  // namespace recur
