#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "recur/error.hpp"
#include "recur/metrics.hpp"
#include "recur/parallel.hpp"
#include "recur/rng.hpp"
#include "recur/stats_core.hpp"
#include "recur/weights.hpp"

namespace recur {

/// Outcome of one permutation test.
struct TestReport {
    StatisticSpec spec;
    std::size_t n = 0;
    double observed = 0.0;
    double p_value = 1.0;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    std::vector<double> perm_stats;  // in permutation order k = 0..m-1
    std::chrono::nanoseconds elapsed{0};

    [[nodiscard]] bool rejects(double alpha) const noexcept { return p_value <= alpha; }
};

/// Statistic evaluator for one paired sample under arbitrary re-pairings of Y.
///
/// The X side (distances, sort order, weight tables) and the Y side (distance
/// multiset, sort order, weight) are fixed by the data; a permutation of the
/// Y rows only changes which Y pair sits next to each X pair, so every
/// evaluation costs O(M) plus the kernel.
class PermutationEngine {
public:
    PermutationEngine(const Sample& x, const Sample& y, const StatisticSpec& spec) : spec_(spec), n_(x.n()) {
        if (x.n() != y.n()) {
            throw InvalidInput("sample size mismatch: x has " + std::to_string(x.n()) + " rows, y has " +
                               std::to_string(y.n()));
        }
        if (n_ < 2) throw InvalidInput("at least two observations are required");
        const auto dx = pairwise_distances(x, spec.metric_x);
        const auto dy = pairwise_distances(y, spec.metric_y);
        const std::size_t m = dx.size();

        std::optional<GaussianWeight> gx, gy;
        if (spec.needs_weights() && m > 1) {
            gx = estimate_weight(dx);
            gy = estimate_weight(dy);
        }

        x_pair_at_ = detail::stable_order(dx);
        const auto y_order = detail::stable_order(dy);
        y_rank_of_pair_.resize(m);
        std::vector<double> xs(m), ys(m);
        for (std::size_t p = 0; p < m; ++p) {
            xs[p] = dx[x_pair_at_[p]];
            ys[p] = dy[y_order[p]];
            y_rank_of_pair_[y_order[p]] = static_cast<std::uint32_t>(p);
        }
        x_ = AxisTables::build(std::move(xs), gx ? &*gx : nullptr);
        y_ = AxisTables::build(std::move(ys), gy ? &*gy : nullptr);

        // Row indices (i, j) of the X pair at each sorted position.
        std::vector<std::pair<std::uint32_t, std::uint32_t>> rows_of(m);
        std::size_t k = 0;
        for (std::uint32_t i = 0; i + 1 < n_; ++i)
            for (std::uint32_t j = i + 1; j < n_; ++j) rows_of[k++] = {i, j};
        x_rows_at_.resize(m);
        for (std::size_t p = 0; p < m; ++p) x_rows_at_[p] = rows_of[x_pair_at_[p]];
    }

    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] const StatisticSpec& spec() const noexcept { return spec_; }

    /// Statistic of the observed pairing.
    [[nodiscard]] double observed() const {
        std::vector<std::uint32_t> partner(x_pair_at_.size());
        for (std::size_t p = 0; p < partner.size(); ++p) partner[p] = y_rank_of_pair_[x_pair_at_[p]];
        return evaluate(partner);
    }

    /// Statistic of (x, y o perm): row i of x is paired with row perm[i] of y.
    [[nodiscard]] double permuted(std::span<const std::size_t> perm) const {
        if (perm.size() != n_) throw InvalidInput("permutation length does not match the sample size");
        std::vector<std::uint32_t> partner(x_rows_at_.size());
        for (std::size_t p = 0; p < partner.size(); ++p) {
            const auto [i, j] = x_rows_at_[p];
            partner[p] = y_rank_of_pair_[pair_index(perm[i], perm[j], n_)];
        }
        return evaluate(partner);
    }

private:
    [[nodiscard]] double evaluate(std::span<const std::uint32_t> partner) const {
        if (partner.size() < 2) return 0.0;
        return detail::dispatch(spec_.functional, x_, y_, partner, n_);
    }

    StatisticSpec spec_;
    std::size_t n_ = 0;
    AxisTables x_;
    AxisTables y_;
    std::vector<std::uint32_t> x_pair_at_;
    std::vector<std::uint32_t> y_rank_of_pair_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> x_rows_at_;
};

/// Uniform permutation of 0..n-1 drawn from stream (seed, Permutation, k).
inline std::vector<std::size_t> permutation_for(std::uint64_t seed, std::uint64_t k, std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    auto rng = Rng::stream(seed, StreamTask::Permutation, k);
    rng.shuffle(std::span<std::size_t>(perm));
    return perm;
}

/// Add-one permutation p-value: (1 + #{perm >= observed}) / (m + 1).
inline double permutation_p_value(double observed, std::span<const double> perm_stats) {
    const auto exceed = std::count_if(perm_stats.begin(), perm_stats.end(), [&](double v) { return v >= observed; });
    return static_cast<double>(1 + exceed) / static_cast<double>(perm_stats.size() + 1);
}

inline TestReport permutation_test(const Sample& x, const Sample& y, const StatisticSpec& spec, std::size_t m,
                                   std::uint64_t seed, unsigned threads = 0) {
    const auto start = std::chrono::steady_clock::now();
    if (m < 1) throw InvalidInput("permutation count must be at least 1");
    if (x.n() != y.n()) {
        throw InvalidInput("sample size mismatch: x has " + std::to_string(x.n()) + " rows, y has " +
                           std::to_string(y.n()));
    }
    if (x.n() < 3) throw InvalidInput("permutation test needs at least three observations");

    const PermutationEngine engine(x, y, spec);
    TestReport report;
    report.spec = spec;
    report.n = x.n();
    report.m = m;
    report.seed = seed;
    report.observed = engine.observed();
    report.perm_stats.assign(m, 0.0);
    parallel_for(m, threads, [&](std::size_t k) {
        const auto perm = permutation_for(seed, k, x.n());
        report.perm_stats[k] = engine.permuted(perm);
    });
    report.p_value = permutation_p_value(report.observed, report.perm_stats);
    report.elapsed = std::chrono::steady_clock::now() - start;
    return report;
}

/// Smallest permutation count for which the (1 - alpha) quantile exists.
inline std::size_t minimal_permutations(double alpha) {
    return static_cast<std::size_t>(std::max(0.0, std::ceil(1.0 / alpha - 1.0 - 1e-9)));
}

/// Finite-sample permutation quantiles: the ceil((1 - alpha)(m + 1))-th
/// order statistic of perm_stats for every requested alpha.
inline std::vector<double> critical_values(std::span<const double> perm_stats, std::span<const double> levels) {
    const std::size_t m = perm_stats.size();
    for (double alpha : levels) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("level " + std::to_string(alpha) + " is outside (0, 1)");
        if (m < minimal_permutations(alpha)) {
            throw InvalidInput("level " + std::to_string(alpha) + " needs at least " +
                               std::to_string(minimal_permutations(alpha)) + " permutations, got " + std::to_string(m));
        }
    }
    std::vector<double> sorted(perm_stats.begin(), perm_stats.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(levels.size());
    for (double alpha : levels) {
        const auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(m + 1) - 1e-9));
        out.push_back(sorted[std::clamp<std::size_t>(rank, 1, m) - 1]);
    }
    return out;
}

struct DependogramEntry {
    std::size_t first = 0;   // group indices, first < second
    std::size_t second = 0;
    TestReport report;
    std::vector<double> critical;  // one per level
    std::vector<bool> reject;      // observed > critical
};

struct Dependogram {
    std::vector<std::string> labels;
    std::vector<double> levels;
    std::vector<DependogramEntry> entries;
};

/// Pairwise permutation tests over all unordered group pairs. The first
/// group of each pair uses spec.metric_x, the second spec.metric_y.
inline Dependogram dependogram(const std::vector<Sample>& groups, const std::vector<std::string>& labels,
                               const StatisticSpec& spec, std::size_t m, std::uint64_t seed,
                               const std::vector<double>& levels, unsigned threads = 0) {
    if (groups.size() < 2) throw InvalidInput("a dependogram needs at least two groups");
    if (labels.size() != groups.size()) throw InvalidInput("one label per group is required");
    const std::size_t n = groups.front().n();
    for (const auto& g : groups) {
        if (g.n() != n) throw InvalidInput("all groups must share the same number of observations");
    }
    if (n < 3) throw InvalidInput("dependogram needs at least three observations");
    if (m < 1) throw InvalidInput("permutation count must be at least 1");
    for (double alpha : levels) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("level " + std::to_string(alpha) + " is outside (0, 1)");
        if (m < minimal_permutations(alpha)) {
            throw InvalidInput("level " + std::to_string(alpha) + " needs at least " +
                               std::to_string(minimal_permutations(alpha)) + " permutations, got " + std::to_string(m));
        }
    }

    Dependogram out;
    out.labels = labels;
    out.levels = levels;
    std::size_t pair = 0;
    for (std::size_t a = 0; a < groups.size(); ++a) {
        for (std::size_t b = a + 1; b < groups.size(); ++b, ++pair) {
            DependogramEntry e;
            e.first = a;
            e.second = b;
            e.report = permutation_test(groups[a], groups[b], spec, m, derive_seed(seed, StreamTask::PairTest, pair),
                                        threads);
            e.critical = critical_values(e.report.perm_stats, levels);
            for (double c : e.critical) e.reject.push_back(e.report.observed > c);
            out.entries.push_back(std::move(e));
        }
    }
    return out;
}

}  // namespace recur
