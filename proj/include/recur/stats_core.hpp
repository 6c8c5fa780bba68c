#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recur/detail/fenwick.hpp"
#include "recur/detail/kinetic_max_tree.hpp"
#include "recur/error.hpp"
#include "recur/metrics.hpp"
#include "recur/weights.hpp"

namespace recur {

// ---------------------------------------------------------------------------
// Statistic selection

/// T1: weighted L1 (Cramer-von Mises type) functional, T2: weighted L2,
/// Tsup: Kolmogorov-Smirnov supremum.
enum class Functional { T1, T2, Tsup };

inline std::string_view to_string(Functional f) noexcept {
    switch (f) {
        case Functional::T1: return "l1";
        case Functional::T2: return "l2";
        case Functional::Tsup: return "sup";
    }
    return "?";
}

inline Functional parse_functional(std::string_view name) {
    if (name == "l1" || name == "T1" || name == "1") return Functional::T1;
    if (name == "l2" || name == "T2" || name == "2") return Functional::T2;
    if (name == "sup" || name == "Tsup" || name == "inf") return Functional::Tsup;
    throw InvalidInput("unknown functional '" + std::string(name) + "' (expected l1, l2 or sup)");
}

struct StatisticSpec {
    Functional functional = Functional::T2;
    MetricKind metric_x = MetricKind::L2;
    MetricKind metric_y = MetricKind::L2;

    [[nodiscard]] bool needs_weights() const noexcept { return functional != Functional::Tsup; }
    friend bool operator==(const StatisticSpec&, const StatisticSpec&) = default;
};

/// Short label such as "T2(l1,l1)".
inline std::string label(const StatisticSpec& s) {
    std::string f = s.functional == Functional::T1 ? "T1" : s.functional == Functional::T2 ? "T2" : "Tsup";
    return f + "(" + std::string(to_string(s.metric_x)) + "," + std::string(to_string(s.metric_y)) + ")";
}

/// Parses "T2,l1,l1" or "l2,linf,linf" (functional, metric-x, metric-y).
inline StatisticSpec parse_spec(std::string_view text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ',' || c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    if (parts.size() == 2) parts.push_back(parts[1]);
    if (parts.size() != 3) throw InvalidInput("statistic spec '" + std::string(text) + "' must be functional,metric_x,metric_y");
    return {parse_functional(parts[0]), parse_metric(parts[1]), parse_metric(parts[2])};
}

// ---------------------------------------------------------------------------
// Recurrence rates

enum class Axis { X, Y };

/// Fraction of pairs whose distance on the chosen axis is strictly below radius.
inline double recurrence_rate(const PairedDistances& pd, Axis axis, double radius) {
    if (pd.zt.empty()) throw InvalidInput("no pairs");
    std::size_t hits = 0;
    for (const auto& r : pd.zt) hits += ((axis == Axis::X ? r.z : r.t) < radius);
    return static_cast<double>(hits) / static_cast<double>(pd.zt.size());
}

inline double joint_recurrence_rate(const PairedDistances& pd, double r, double s) {
    if (pd.zt.empty()) throw InvalidInput("no pairs");
    std::size_t hits = 0;
    for (const auto& rec : pd.zt) hits += (rec.z < r && rec.t < s);
    return static_cast<double>(hits) / static_cast<double>(pd.zt.size());
}

/// sqrt(n) * (RR_xy(r, s) - RR_x(r) * RR_y(s)).
inline double empirical_process(const PairedDistances& pd, double r, double s) {
    const double joint = joint_recurrence_rate(pd, r, s);
    const double rx = recurrence_rate(pd, Axis::X, r);
    const double ry = recurrence_rate(pd, Axis::Y, s);
    return std::sqrt(static_cast<double>(pd.n)) * (joint - rx * ry);
}

// ---------------------------------------------------------------------------
// Sorted pair structure

/// Pairs ordered by X-distance, with Y-distances carried along and their
/// ranks among the sorted Y-distances. Ties are broken by pair index.
struct SortedPairs {
    std::vector<double> z_sorted;
    std::vector<double> t_aligned;
    std::vector<double> t_sorted;
    std::vector<std::uint32_t> t_rank;  // 0-based position of t_aligned[p] in t_sorted
    std::vector<std::uint32_t> pair_at;  // original record index at Z-position p

    [[nodiscard]] std::size_t size() const noexcept { return z_sorted.size(); }
};

namespace detail {

inline std::vector<std::uint32_t> stable_order(std::span<const double> values) {
    std::vector<std::uint32_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
    return idx;
}

}  // namespace detail

inline SortedPairs sort_pairs(std::span<const ZT> records) {
    const std::size_t m = records.size();
    std::vector<double> z(m), t(m);
    for (std::size_t k = 0; k < m; ++k) {
        z[k] = records[k].z;
        t[k] = records[k].t;
    }
    SortedPairs sp;
    sp.pair_at = detail::stable_order(z);
    const auto t_order = detail::stable_order(t);
    std::vector<std::uint32_t> rank_of(m);
    for (std::size_t p = 0; p < m; ++p) rank_of[t_order[p]] = static_cast<std::uint32_t>(p);

    sp.z_sorted.resize(m);
    sp.t_aligned.resize(m);
    sp.t_sorted.resize(m);
    sp.t_rank.resize(m);
    for (std::size_t p = 0; p < m; ++p) {
        const auto k = sp.pair_at[p];
        sp.z_sorted[p] = z[k];
        sp.t_aligned[p] = t[k];
        sp.t_rank[p] = rank_of[k];
        sp.t_sorted[p] = t[t_order[p]];
    }
    return sp;
}

inline SortedPairs sort_pairs(const PairedDistances& pd) { return sort_pairs(std::span<const ZT>(pd.zt)); }

// ---------------------------------------------------------------------------
// Per-axis tables shared by the fast kernels

/// Quantities of one axis that depend only on its sorted values and weight.
/// Built once per sample and reused across permutations.
struct AxisTables {
    std::vector<double> sorted;
    std::vector<std::uint32_t> block_lo;  // first position of the tie block at p
    std::vector<std::uint32_t> block_hi;  // last position of the tie block at p
    std::vector<std::uint32_t> block_id;  // index of the tie block at p

    // Filled only when a weight is supplied.
    std::vector<double> cdf;       // G(sorted[p])
    std::vector<double> surv;      // 1 - G(sorted[p])
    std::vector<double> max_sum;   // sum_q S(max(sorted[p], sorted[q]))
    double mean_max_surv = 0.0;    // (1/M^2) sum_{p,q} S(max(.,.))

    [[nodiscard]] std::size_t size() const noexcept { return sorted.size(); }
    [[nodiscard]] bool weighted() const noexcept { return !cdf.empty() || sorted.empty(); }

    static AxisTables build(std::vector<double> sorted_values, const GaussianWeight* weight) {
        AxisTables a;
        a.sorted = std::move(sorted_values);
        const std::size_t m = a.sorted.size();
        a.block_lo.resize(m);
        a.block_hi.resize(m);
        a.block_id.resize(m);
        std::uint32_t id = 0;
        for (std::size_t p = 0; p < m; ++p) {
            if (p > 0 && a.sorted[p] != a.sorted[p - 1]) ++id;
            a.block_id[p] = id;
            a.block_lo[p] = (p > 0 && a.sorted[p] == a.sorted[p - 1]) ? a.block_lo[p - 1] : static_cast<std::uint32_t>(p);
        }
        for (std::size_t p = m; p-- > 0;) {
            a.block_hi[p] = (p + 1 < m && a.sorted[p] == a.sorted[p + 1]) ? a.block_hi[p + 1] : static_cast<std::uint32_t>(p);
        }
        if (weight != nullptr) {
            a.cdf.resize(m);
            a.surv.resize(m);
            a.max_sum.resize(m);
            for (std::size_t p = 0; p < m; ++p) {
                a.cdf[p] = weight->cdf(a.sorted[p]);
                a.surv[p] = weight->survival(a.sorted[p]);
            }
            // For q > p the maximum is sorted[q]; for q <= p it is sorted[p]
            // (equal values within a tie block give equal survival values).
            double suffix = 0.0;
            for (std::size_t p = m; p-- > 0;) {
                a.max_sum[p] = static_cast<double>(p + 1) * a.surv[p] + suffix;
                suffix += a.surv[p];
            }
            double acc = 0.0;
            for (std::size_t p = 0; p < m; ++p) acc += static_cast<double>(2 * p + 1) * a.surv[p];
            const auto mm = static_cast<double>(m);
            a.mean_max_surv = acc / (mm * mm);
        }
        return a;
    }
};

namespace detail {

inline double clamp_t2(double value) {
    if (value >= 0.0) return value;
    if (value > -1e-12) return 0.0;
    throw InternalError("T2 evaluated to " + std::to_string(value) + " (expected nonnegative)");
}

inline void require_weighted(const AxisTables& x, const AxisTables& y) {
    if (!x.weighted() || !y.weighted()) throw InternalError("weighted statistic requested on unweighted axis tables");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fast kernels over axis tables and a pairing.
//
// partner[p] is the Y sorted position of the pair that sits at X sorted
// position p. n is the observation count used for the sqrt(n) / n prefactors.

/// O(M log M): A term by a Fenwick sweep, B from the sorted forms, C factored.
inline double t2_kernel(const AxisTables& x, const AxisTables& y, std::span<const std::uint32_t> partner,
                        std::size_t n) {
    detail::require_weighted(x, y);
    const std::size_t m = x.size();
    if (m == 0) return 0.0;
    const auto mm = static_cast<double>(m);

    detail::Fenwick<std::int64_t> seen(m);
    detail::Fenwick<double> seen_surv(m);
    double seen_total = 0.0;
    double a_acc = 0.0;
    double c_acc = 0.0;
    for (std::size_t q = 0; q < m; ++q) {
        const std::uint32_t r = partner[q];
        const double sy = y.surv[r];
        // Earlier pairs have smaller Z, so max Z is sorted[q]. For T the max
        // belongs to whichever rank is larger.
        const auto below = static_cast<double>(seen.prefix(r));
        const double above_surv = seen_total - seen_surv.prefix(r + 1);
        a_acc += x.surv[q] * (sy + 2.0 * (below * sy + above_surv));
        c_acc += x.max_sum[q] * y.max_sum[r];
        seen.add(r, 1);
        seen_surv.add(r, sy);
        seen_total += sy;
    }
    const double a = a_acc / (mm * mm);
    const double b = x.mean_max_surv * y.mean_max_surv;
    const double c = c_acc / (mm * mm * mm);
    return detail::clamp_t2(static_cast<double>(n) * (a + b - 2.0 * c));
}

/// O(M^2) time, O(M) memory: counts c(h, j) updated incrementally over h.
inline double t1_kernel(const AxisTables& x, const AxisTables& y, std::span<const std::uint32_t> partner,
                        std::size_t n) {
    detail::require_weighted(x, y);
    const std::size_t m = x.size();
    if (m < 2) return 0.0;
    const auto mm = static_cast<double>(m);

    // Column j (1..M-1) integrates s over (T*_j, T*_{j+1}].
    std::vector<double> dg2(m, 0.0);
    for (std::size_t j = 1; j < m; ++j) dg2[j] = y.cdf[j] - y.cdf[j - 1];
    std::vector<double> count(m, 0.0);

    double total = 0.0;
    for (std::size_t h = 1; h < m; ++h) {
        // Aligned T at row h counts toward every column whose threshold
        // T*_{j+1} = sorted[j] is strictly above it.
        const std::size_t first = y.block_hi[partner[h - 1]] + 1;
        for (std::size_t j = first; j < m; ++j) count[j] += 1.0;

        const double dg1 = x.cdf[h] - x.cdf[h - 1];
        if (dg1 == 0.0) continue;
        const double ratio = static_cast<double>(h) / mm;
        double inner = 0.0;
        for (std::size_t j = 1; j < m; ++j) inner += dg2[j] * std::abs(count[j] - static_cast<double>(j) * ratio);
        total += dg1 * inner;
    }
    return std::sqrt(static_cast<double>(n)) * total / mm;
}

/// Sweep over X blocks with a kinetic max tree over Y blocks; exact integer
/// arithmetic on M * (count - a * b / M).
inline double tsup_kernel(const AxisTables& x, const AxisTables& y, std::span<const std::uint32_t> partner,
                          std::size_t n) {
    const std::size_t m = x.size();
    if (m < 2) return 0.0;
    const auto mi = static_cast<std::int64_t>(m);

    // One line per distinct Y value; b_k = #{T <= value_k}.
    const std::size_t blocks = y.block_id.back() + 1;
    std::vector<std::int64_t> up_slope(blocks), down_slope(blocks), zero(blocks, 0);
    for (std::size_t p = 0; p < m; ++p) {
        if (y.block_hi[p] == p) {
            const auto b = static_cast<std::int64_t>(p + 1);
            up_slope[y.block_id[p]] = -b;
            down_slope[y.block_id[p]] = b;
        }
    }
    detail::KineticMaxTree up(up_slope, zero);      // M*count - a*b
    detail::KineticMaxTree down(down_slope, zero);  // a*b - M*count

    std::int64_t best = 0;
    for (std::size_t p = 0; p < m; ++p) {
        const std::size_t k = y.block_id[partner[p]];
        up.add(k, blocks, mi);
        down.add(k, blocks, -mi);
        if (x.block_hi[p] == p) {
            const auto a = static_cast<std::int64_t>(p + 1);
            up.advance(a);
            down.advance(a);
            best = std::max({best, up.max(), down.max()});
        }
    }
    return std::sqrt(static_cast<double>(n)) * static_cast<double>(best) / (static_cast<double>(m) * static_cast<double>(m));
}

// ---------------------------------------------------------------------------
// Public entry points on sorted pairs / paired distances

namespace detail {

inline double dispatch(Functional f, const AxisTables& x, const AxisTables& y, std::span<const std::uint32_t> partner,
                       std::size_t n) {
    switch (f) {
        case Functional::T1: return t1_kernel(x, y, partner, n);
        case Functional::T2: return t2_kernel(x, y, partner, n);
        case Functional::Tsup: return tsup_kernel(x, y, partner, n);
    }
    return 0.0;
}

inline double evaluate(Functional f, const SortedPairs& sp, const GaussianWeight* gx, const GaussianWeight* gy,
                       std::size_t n) {
    const auto x = AxisTables::build(sp.z_sorted, gx);
    const auto y = AxisTables::build(sp.t_sorted, gy);
    return dispatch(f, x, y, sp.t_rank, n);
}

inline std::vector<double> z_values(const PairedDistances& pd) {
    std::vector<double> v(pd.zt.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = pd.zt[k].z;
    return v;
}

inline std::vector<double> t_values(const PairedDistances& pd) {
    std::vector<double> v(pd.zt.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = pd.zt[k].t;
    return v;
}

}  // namespace detail

inline double t2(const SortedPairs& sp, const GaussianWeight& gx, const GaussianWeight& gy, std::size_t n) {
    return detail::evaluate(Functional::T2, sp, &gx, &gy, n);
}
inline double t1(const SortedPairs& sp, const GaussianWeight& gx, const GaussianWeight& gy, std::size_t n) {
    return detail::evaluate(Functional::T1, sp, &gx, &gy, n);
}
inline double tsup(const SortedPairs& sp, std::size_t n) {
    return detail::evaluate(Functional::Tsup, sp, nullptr, nullptr, n);
}

inline double t2(const PairedDistances& pd, const GaussianWeight& gx, const GaussianWeight& gy) {
    return t2(sort_pairs(pd), gx, gy, pd.n);
}
inline double t1(const PairedDistances& pd, const GaussianWeight& gx, const GaussianWeight& gy) {
    return t1(sort_pairs(pd), gx, gy, pd.n);
}
inline double tsup(const PairedDistances& pd) { return tsup(sort_pairs(pd), pd.n); }

/// Weights estimated from the X and Y distance multisets of pd.
inline std::pair<GaussianWeight, GaussianWeight> estimate_weights(const PairedDistances& pd) {
    return {estimate_weight(detail::z_values(pd)), estimate_weight(detail::t_values(pd))};
}

/// Selected functional evaluated on precomputed paired distances.
inline double statistic(const PairedDistances& pd, Functional f) {
    if (pd.zt.size() < 2) return 0.0;
    const auto sp = sort_pairs(pd);
    if (f == Functional::Tsup) return tsup(sp, pd.n);
    const auto [gx, gy] = estimate_weights(pd);
    return f == Functional::T1 ? t1(sp, gx, gy, pd.n) : t2(sp, gx, gy, pd.n);
}

/// End-to-end statistic T_n for two paired samples.
inline double statistic(const Sample& x, const Sample& y, const StatisticSpec& spec) {
    return statistic(paired_distances(x, y, spec.metric_x, spec.metric_y), spec.functional);
}

// ---------------------------------------------------------------------------
// Literal forms: direct transcriptions of the computation steps, used as
// reference implementations. Cubic in the pair count; small inputs only.

namespace naive {

/// Neumaier summation. A + B - 2C cancels heavily when the statistic is small,
/// so the cubic sums need more than plain accumulation to serve as a reference.
class CompensatedSum {
public:
    CompensatedSum& operator+=(double v) {
        const double t = sum_ + v;
        comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
        sum_ = t;
        return *this;
    }
    [[nodiscard]] double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// A + B - 2C with A, C as double / triple sums and B in its sorted form.
inline double t2(const SortedPairs& sp, const GaussianWeight& gx, const GaussianWeight& gy, std::size_t n) {
    const std::size_t m = sp.size();
    const auto mm = static_cast<double>(m);
    const auto& z = sp.z_sorted;
    const auto& t = sp.t_aligned;
    auto s1 = [&](double v) { return 1.0 - gx.cdf(v); };
    auto s2 = [&](double v) { return 1.0 - gy.cdf(v); };

    CompensatedSum a_sum;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) a_sum += s1(std::max(z[i], z[j])) * s2(std::max(t[i], t[j]));
    const double a = a_sum.value() / (mm * mm);

    double bx = 0.0, by = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        bx += static_cast<double>(2 * i + 1) * gx.cdf(sp.z_sorted[i]);
        by += static_cast<double>(2 * i + 1) * gy.cdf(sp.t_sorted[i]);
    }
    const double b = (1.0 - bx / (mm * mm)) * (1.0 - by / (mm * mm));

    CompensatedSum c_sum;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double fz = s1(std::max(z[i], z[j]));
            for (std::size_t k = 0; k < m; ++k) c_sum += fz * s2(std::max(t[i], t[k]));
        }
    const double c = c_sum.value() / (mm * mm * mm);
    return detail::clamp_t2(static_cast<double>(n) * (a + b - 2.0 * c));
}

/// Sum over h, j of dG1 * dG2 * |c(h, j) - j h / M| with c recounted per cell.
inline double t1(const SortedPairs& sp, const GaussianWeight& gx, const GaussianWeight& gy, std::size_t n) {
    const std::size_t m = sp.size();
    if (m < 2) return 0.0;
    const auto mm = static_cast<double>(m);
    double total = 0.0;
    for (std::size_t h = 1; h < m; ++h) {
        const double dg1 = gx.cdf(sp.z_sorted[h]) - gx.cdf(sp.z_sorted[h - 1]);
        for (std::size_t j = 1; j < m; ++j) {
            const double dg2 = gy.cdf(sp.t_sorted[j]) - gy.cdf(sp.t_sorted[j - 1]);
            std::size_t c = 0;
            for (std::size_t i = 0; i < h; ++i) c += (sp.t_aligned[i] < sp.t_sorted[j]);
            total += dg1 * dg2 * std::abs(static_cast<double>(c) - static_cast<double>(j * h) / mm);
        }
    }
    return std::sqrt(static_cast<double>(n)) * total / mm;
}

/// Max over the (M-1) x (M-1) grid of |#{Z <= Z_(i), T <= T*_(j)} - a_i b_j / M|,
/// where a_i, b_j are the marginal counts (equal to i, j without ties).
inline double tsup(const SortedPairs& sp, std::size_t n) {
    const std::size_t m = sp.size();
    if (m < 2) return 0.0;
    const auto mm = static_cast<double>(m);
    double best = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double zi = sp.z_sorted[i];
        std::size_t a = 0;
        for (double z : sp.z_sorted) a += (z <= zi);
        for (std::size_t j = 0; j + 1 < m; ++j) {
            const double tj = sp.t_sorted[j];
            std::size_t b = 0, joint = 0;
            for (std::size_t k = 0; k < m; ++k) {
                b += (sp.t_sorted[k] <= tj);
                joint += (sp.z_sorted[k] <= zi && sp.t_aligned[k] <= tj);
            }
            best = std::max(best, std::abs(static_cast<double>(joint) - static_cast<double>(a * b) / mm));
        }
    }
    return std::sqrt(static_cast<double>(n)) * best / mm;
}

inline double t2(const PairedDistances& pd, const GaussianWeight& gx, const GaussianWeight& gy) {
    return naive::t2(sort_pairs(pd), gx, gy, pd.n);
}
inline double t1(const PairedDistances& pd, const GaussianWeight& gx, const GaussianWeight& gy) {
    return naive::t1(sort_pairs(pd), gx, gy, pd.n);
}
inline double tsup(const PairedDistances& pd) { return naive::tsup(sort_pairs(pd), pd.n); }

}  // namespace naive

}  // namespace recur
