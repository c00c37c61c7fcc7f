#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "witten/errors.hpp"

namespace witten {

inline constexpr int kMaxDim = 3;

// Axis subset J as a bit mask, bit i <-> axis i (0-based).
using AxisSet = std::uint32_t;

inline int cardinality(AxisSet J) { return std::popcount(J); }

inline bool contains(AxisSet J, int axis) { return (J >> axis) & 1u; }

inline std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Number of elements of J strictly below `axis`.
inline int position_of(AxisSet J, int axis) {
    return std::popcount(J & ((AxisSet{1} << axis) - 1u));
}

// All q-subsets of {0..n-1}, lexicographic in the sorted tuple.
inline std::vector<AxisSet> axis_subsets(int n, int q) {
    std::vector<AxisSet> out;
    if (q < 0 || q > n) return out;
    std::vector<int> c(q);
    for (int i = 0; i < q; ++i) c[i] = i;
    while (true) {
        AxisSet J = 0;
        for (int a : c) J |= AxisSet{1} << a;
        out.push_back(J);
        int i = q - 1;
        while (i >= 0 && c[i] == n - q + i) --i;
        if (i < 0) break;
        ++c[i];
        for (int j = i + 1; j < q; ++j) c[j] = c[j - 1] + 1;
    }
    return out;
}

inline int subset_rank(int n, AxisSet J) {
    const auto all = axis_subsets(n, cardinality(J));
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i] == J) return static_cast<int>(i);
    throw DomainError("axis subset outside dimension");
}

// 1-based rendering, e.g. {1,3}.
inline std::string format_axes(AxisSet J) {
    std::string s = "{";
    bool first = true;
    for (int a = 0; a < 32; ++a) {
        if (!contains(J, a)) continue;
        if (!first) s += ",";
        s += std::to_string(a + 1);
        first = false;
    }
    return s + "}";
}

}  // namespace witten
