#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace recur::detail {

// Kinetic segment tree over integer lines v_k(t) = intercept_k + slope_k * t.
//
// Supports adding a constant to the intercepts of a contiguous range of
// lines, advancing the (monotone, integer) time, and reading the maximum
// line value at the current time. All arithmetic is exact in int64.
// Each winner change costs O(log^2 K) amortized.
class KineticMaxTree {
public:
    KineticMaxTree(std::span<const std::int64_t> slopes, std::span<const std::int64_t> intercepts)
        : size_(slopes.size()) {
        std::size_t cap = 1;
        while (cap < size_) cap <<= 1;
        nodes_.assign(2 * cap, Node{});
        if (size_ > 0) build(1, 0, size_, slopes, intercepts);
    }

    [[nodiscard]] std::int64_t max() const noexcept { return size_ == 0 ? 0 : value(nodes_[1]); }
    [[nodiscard]] std::int64_t time() const noexcept { return time_; }

    // Adds delta to the intercepts of lines [first, last).
    void add(std::size_t first, std::size_t last, std::int64_t delta) {
        if (first >= last || size_ == 0) return;
        add(1, 0, size_, first, last, delta);
    }

    // Moves the clock forward to t (t >= time()).
    void advance(std::int64_t t) {
        time_ = t;
        if (size_ > 0) heat(1, 0, size_);
    }

private:
    static constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

    struct Node {
        std::int64_t slope = 0;
        std::int64_t intercept = 0;  // of the subtree's current winner
        std::int64_t melt = kNever;  // earliest time the winner may change
        std::int64_t lazy = 0;
    };

    [[nodiscard]] std::int64_t value(const Node& node) const noexcept { return node.intercept + node.slope * time_; }

    void build(std::size_t v, std::size_t lo, std::size_t hi, std::span<const std::int64_t> slopes,
               std::span<const std::int64_t> intercepts) {
        if (hi - lo == 1) {
            nodes_[v] = {slopes[lo], intercepts[lo], kNever, 0};
            return;
        }
        const std::size_t mid = (lo + hi) / 2;
        build(2 * v, lo, mid, slopes, intercepts);
        build(2 * v + 1, mid, hi, slopes, intercepts);
        pull(v);
    }

    void apply(std::size_t v, std::int64_t delta) noexcept {
        nodes_[v].intercept += delta;
        nodes_[v].lazy += delta;
    }

    void push(std::size_t v) noexcept {
        if (nodes_[v].lazy != 0) {
            apply(2 * v, nodes_[v].lazy);
            apply(2 * v + 1, nodes_[v].lazy);
            nodes_[v].lazy = 0;
        }
    }

    void pull(std::size_t v) noexcept {
        const Node& a = nodes_[2 * v];
        const Node& b = nodes_[2 * v + 1];
        const std::int64_t va = value(a);
        const std::int64_t vb = value(b);
        const bool a_wins = va > vb || (va == vb && a.slope >= b.slope);
        const Node& win = a_wins ? a : b;
        const Node& lose = a_wins ? b : a;
        Node& out = nodes_[v];
        out.slope = win.slope;
        out.intercept = win.intercept;
        out.melt = std::min(a.melt, b.melt);
        if (lose.slope > win.slope) {
            // First integer time at which the loser strictly overtakes.
            const std::int64_t gap = (a_wins ? va - vb : vb - va);
            const std::int64_t rate = lose.slope - win.slope;
            out.melt = std::min(out.melt, time_ + gap / rate + 1);
        }
    }

    void add(std::size_t v, std::size_t lo, std::size_t hi, std::size_t first, std::size_t last,
             std::int64_t delta) {
        if (last <= lo || hi <= first) return;
        if (first <= lo && hi <= last) {
            apply(v, delta);
            return;
        }
        push(v);
        const std::size_t mid = (lo + hi) / 2;
        add(2 * v, lo, mid, first, last, delta);
        add(2 * v + 1, mid, hi, first, last, delta);
        pull(v);
    }

    void heat(std::size_t v, std::size_t lo, std::size_t hi) {
        if (hi - lo == 1 || nodes_[v].melt > time_) return;
        push(v);
        const std::size_t mid = (lo + hi) / 2;
        heat(2 * v, lo, mid);
        heat(2 * v + 1, mid, hi);
        pull(v);
    }

    std::size_t size_ = 0;
    std::int64_t time_ = 0;
    std::vector<Node> nodes_;
};

}  // namespace recur::detail
