#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recur/error.hpp"

namespace recur {

/// An n x d matrix of finite reals, one observation per row (row-major).
class Sample {
public:
    Sample() = default;

    Sample(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (cols_ == 0) throw InvalidInput("sample must have at least one column");
        if (rows_ < 2) throw InvalidInput("sample must have at least two rows, got " + std::to_string(rows_));
        if (values_.size() != rows_ * cols_) {
            throw InvalidInput("sample buffer holds " + std::to_string(values_.size()) + " values, expected " +
                               std::to_string(rows_ * cols_));
        }
        for (std::size_t k = 0; k < values_.size(); ++k) {
            if (!std::isfinite(values_[k])) {
                throw InvalidInput("non-finite entry at row " + std::to_string(k / cols_) + ", column " +
                                   std::to_string(k % cols_));
            }
        }
    }

    static Sample from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) throw InvalidInput("sample must have at least two rows, got 0");
        const std::size_t d = rows.front().size();
        std::vector<double> flat;
        flat.reserve(rows.size() * d);
        for (const auto& r : rows) {
            if (r.size() != d) throw InvalidInput("ragged rows in sample");
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return Sample(rows.size(), d, std::move(flat));
    }

    [[nodiscard]] std::size_t n() const noexcept { return rows_; }
    [[nodiscard]] std::size_t d() const noexcept { return cols_; }

    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * cols_, cols_};
    }
    [[nodiscard]] double operator()(std::size_t i, std::size_t k) const noexcept { return values_[i * cols_ + k]; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    /// Columns [first, last) as a new sample.
    [[nodiscard]] Sample columns(std::size_t first, std::size_t last) const {
        if (first >= last || last > cols_) throw InvalidInput("column range out of bounds");
        std::vector<double> out;
        out.reserve(rows_ * (last - first));
        for (std::size_t i = 0; i < rows_; ++i) {
            auto r = row(i);
            out.insert(out.end(), r.begin() + static_cast<std::ptrdiff_t>(first),
                       r.begin() + static_cast<std::ptrdiff_t>(last));
        }
        return Sample(rows_, last - first, std::move(out));
    }

    /// Rows reordered so that row i of the result is row perm[i] of this sample.
    [[nodiscard]] Sample permuted_rows(std::span<const std::size_t> perm) const {
        std::vector<double> out;
        out.reserve(values_.size());
        for (std::size_t i : perm) {
            auto r = row(i);
            out.insert(out.end(), r.begin(), r.end());
        }
        return Sample(rows_, cols_, std::move(out));
    }

    /// Every entry multiplied by c.
    [[nodiscard]] Sample scaled(double c) const {
        std::vector<double> out = values_;
        for (double& v : out) v *= c;
        return Sample(rows_, cols_, std::move(out));
    }

    friend bool operator==(const Sample&, const Sample&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

enum class MetricKind { L1, L2, Linf };

inline std::string_view to_string(MetricKind kind) noexcept {
    switch (kind) {
        case MetricKind::L1: return "l1";
        case MetricKind::L2: return "l2";
        case MetricKind::Linf: return "linf";
    }
    return "?";
}

inline MetricKind parse_metric(std::string_view name) {
    if (name == "l1" || name == "L1") return MetricKind::L1;
    if (name == "l2" || name == "L2") return MetricKind::L2;
    if (name == "linf" || name == "Linf" || name == "sup") return MetricKind::Linf;
    throw InvalidInput("unknown metric '" + std::string(name) + "' (expected l1, l2 or linf)");
}

namespace detail {

// Unchecked kernel used in the pairwise loops; inputs are validated upstream.
inline double distance_unchecked(std::span<const double> a, std::span<const double> b, MetricKind kind) noexcept {
    double acc = 0.0;
    switch (kind) {
        case MetricKind::L1:
            for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
            return acc;
        case MetricKind::L2:
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double diff = a[k] - b[k];
                acc += diff * diff;
            }
            return std::sqrt(acc);
        case MetricKind::Linf:
            for (std::size_t k = 0; k < a.size(); ++k) acc = std::max(acc, std::abs(a[k] - b[k]));
            return acc;
    }
    return acc;
}

}  // namespace detail

inline double distance(std::span<const double> a, std::span<const double> b, MetricKind kind) {
    if (a.size() != b.size()) {
        throw InvalidInput("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    if (a.empty()) throw InvalidInput("vectors must have at least one coordinate");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(a.begin(), a.end(), finite) || !std::all_of(b.begin(), b.end(), finite)) {
        throw InvalidInput("non-finite coordinate in distance()");
    }
    return detail::distance_unchecked(a, b, kind);
}

/// One unordered index pair {i, j}, i < j: X-distance z and Y-distance t.
struct ZT {
    double z = 0.0;
    double t = 0.0;
    friend bool operator==(const ZT&, const ZT&) = default;
};

/// Number of unordered pairs among n observations.
constexpr std::size_t pair_count(std::size_t n) noexcept { return n * (n - 1) / 2; }

/// Position of the unordered pair {i, j} (i != j) in lexicographic order.
constexpr std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) noexcept {
    if (i > j) std::swap(i, j);
    return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

/// Coupled X/Y distances over the unordered pairs of a paired sample.
///
/// Records are stored once per unordered pair; every statistic is invariant
/// to duplicating them into the n(n-1) ordered pairs.
struct PairedDistances {
    std::size_t n = 0;
    std::vector<ZT> zt;

    [[nodiscard]] std::size_t pairs() const noexcept { return zt.size(); }
    [[nodiscard]] std::size_t ordered_pairs() const noexcept { return n * (n - 1); }
};

/// All pairwise distances of one sample in lexicographic pair order.
inline std::vector<double> pairwise_distances(const Sample& s, MetricKind kind) {
    const std::size_t n = s.n();
    std::vector<double> out;
    out.reserve(pair_count(n));
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) out.push_back(detail::distance_unchecked(s.row(i), s.row(j), kind));
    }
    return out;
}

inline PairedDistances paired_distances(const Sample& x, const Sample& y, MetricKind mx, MetricKind my) {
    if (x.n() != y.n()) {
        throw InvalidInput("sample size mismatch: x has " + std::to_string(x.n()) + " rows, y has " +
                           std::to_string(y.n()));
    }
    if (x.n() < 2) throw InvalidInput("at least two observations are required");
    const auto dx = pairwise_distances(x, mx);
    const auto dy = pairwise_distances(y, my);
    PairedDistances pd;
    pd.n = x.n();
    pd.zt.resize(dx.size());
    for (std::size_t k = 0; k < dx.size(); ++k) pd.zt[k] = {dx[k], dy[k]};
    return pd;
}

}  // namespace recur
