#pragma once

#include <cstddef>
#include <vector>

namespace recur::detail {

// Binary indexed tree over positions [0, size) holding prefix sums of T.
template <typename T>
class Fenwick {
public:
    explicit Fenwick(std::size_t size) : tree_(size + 1, T{}) {}

    void add(std::size_t pos, T delta) noexcept {
        for (std::size_t i = pos + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
    }

    // Sum over [0, end).
    [[nodiscard]] T prefix(std::size_t end) const noexcept {
        T acc{};
        for (std::size_t i = end; i > 0; i -= i & (~i + 1)) acc += tree_[i];
        return acc;
    }

    [[nodiscard]] std::size_t size() const noexcept { return tree_.size() - 1; }

private:
    std::vector<T> tree_;
};

}  // namespace recur::detail
