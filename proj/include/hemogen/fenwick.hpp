#pragma once

#include <bit>
#include <cstddef>
#include <span>
#include <vector>

namespace hemogen {

/// Binary indexed tree over non-negative weights with prefix-sum search.
template <typename T>
class Fenwick {
public:
    Fenwick() = default;
    explicit Fenwick(std::size_t n) : tree_(n + 1, T{}) {}

    /// Linear-time construction from element values.
    explicit Fenwick(std::span<const T> values) : tree_(values.size() + 1, T{}) { assign(values); }

    void assign(std::span<const T> values) {
        tree_.assign(values.size() + 1, T{});
        const std::size_t n = values.size();
        for (std::size_t i = 1; i <= n; ++i) {
            tree_[i] += values[i - 1];
            const std::size_t parent = i + (i & (~i + 1));
            if (parent <= n) tree_[parent] += tree_[i];
        }
    }

    std::size_t size() const { return tree_.empty() ? 0 : tree_.size() - 1; }

    void add(std::size_t index, T delta) {
        for (std::size_t i = index + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
    }

    /// Sum of elements [0, count).
    T prefix(std::size_t count) const {
        T s{};
        for (std::size_t i = count; i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }

    T total() const { return prefix(size()); }

    /// Smallest index j with prefix(j + 1) > target, clamped to size() - 1.
    /// Elements of zero weight are never returned while target < total().
    std::size_t find(T target) const {
        const std::size_t n = size();
        std::size_t pos = 0;
        for (std::size_t step = std::bit_floor(n); step > 0; step >>= 1) {
            const std::size_t next = pos + step;
            if (next <= n && tree_[next] <= target) {
                pos = next;
                target -= tree_[next];
            }
        }
        return pos < n ? pos : n - 1;
    }

private:
    std::vector<T> tree_;
};

}  // namespace hemogen
