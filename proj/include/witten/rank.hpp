#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "witten/errors.hpp"
#include "witten/torus_grid.hpp"

namespace witten {

class UnionFind {
public:
    explicit UnionFind(std::int64_t n) : parent_(static_cast<std::size_t>(n)), components_(n) {
        std::iota(parent_.begin(), parent_.end(), std::int64_t{0});
    }
    std::int64_t find(std::int64_t x) {
        while (parent_[static_cast<std::size_t>(x)] != x) {
            auto& p = parent_[static_cast<std::size_t>(x)];
            p = parent_[static_cast<std::size_t>(p)];
            x = p;
        }
        return x;
    }
    bool unite(std::int64_t a, std::int64_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (b < a) std::swap(a, b);
        parent_[static_cast<std::size_t>(b)] = a;
        --components_;
        return true;
    }
    std::int64_t components() const { return components_; }

private:
    std::vector<std::int64_t> parent_;
    std::int64_t components_;
};

// Rank of an integer matrix over GF(p), p = 2^31 - 1, by sparse row echelon elimination.
// Equals the rational rank unless p divides every maximal nonzero minor.
// col_key reorders columns to keep fill local; empty means natural order.
inline std::int64_t exact_rank(const SparseMatrix& A, const std::vector<std::int64_t>& col_key = {}) {
    using u64 = std::uint64_t;
    constexpr u64 P = 2147483647ULL;
    auto inv = [](u64 a) {
        u64 r = 1, e = P - 2;
        while (e) {
            if (e & 1) r = r * a % P;
            a = a * a % P;
            e >>= 1;
        }
        return r;
    };
    const auto cols = static_cast<std::size_t>(A.cols());
    if (!col_key.empty() && col_key.size() != cols) throw DomainError("column key size mismatch");
    std::vector<std::int64_t> remap(cols);
    {
        std::vector<std::int64_t> order(cols);
        std::iota(order.begin(), order.end(), std::int64_t{0});
        if (!col_key.empty())
            std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
                return col_key[static_cast<std::size_t>(a)] < col_key[static_cast<std::size_t>(b)];
            });
        for (std::size_t i = 0; i < cols; ++i) remap[static_cast<std::size_t>(order[i])] = static_cast<std::int64_t>(i);
    }
    using Row = std::vector<std::pair<std::int64_t, u64>>;
    std::vector<Row> rows;
    rows.reserve(static_cast<std::size_t>(A.rows()));
    for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
        Row row;
        for (SparseMatrix::InnerIterator it(A, r); it; ++it) {
            const double v = it.value();
            if (v != std::round(v)) throw DomainError("exact_rank needs an integer matrix");
            if (v == 0.0) continue;
            const auto iv = static_cast<std::int64_t>(v);
            const u64 m = static_cast<u64>(((iv % static_cast<std::int64_t>(P)) + static_cast<std::int64_t>(P)) %
                                           static_cast<std::int64_t>(P));
            if (m) row.emplace_back(remap[static_cast<std::size_t>(it.col())], m);
        }
        std::sort(row.begin(), row.end());
        if (!row.empty()) rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.front().first < b.front().first; });
    std::vector<Row> pivot(cols);
    std::vector<char> has(cols, 0);
    std::int64_t rank = 0;
    Row out;
    for (auto& r : rows) {
        while (!r.empty()) {
            const auto c = static_cast<std::size_t>(r.front().first);
            if (!has[c]) {
                const u64 iv = inv(r.front().second);
                for (auto& e : r) e.second = e.second * iv % P;
                pivot[c] = std::move(r);
                has[c] = 1;
                ++rank;
                break;
            }
            const Row& p = pivot[c];
            const u64 f = r.front().second;
            out.clear();
            std::size_t a = 0, b = 0;
            while (a < r.size() || b < p.size()) {
                if (b == p.size() || (a < r.size() && r[a].first < p[b].first)) {
                    out.push_back(r[a++]);
                } else if (a == r.size() || p[b].first < r[a].first) {
                    out.emplace_back(p[b].first, (P - f * p[b].second % P) % P);
                    ++b;
                } else {
                    const u64 v = (r[a].second + P - f * p[b].second % P) % P;
                    if (v) out.emplace_back(r[a].first, v);
                    ++a;
                    ++b;
                }
            }
            r.swap(out);
        }
    }
    return rank;
}

// Locality-friendly column key for q-cells: folded base index, then axis-set rank.
inline std::vector<std::int64_t> folded_cell_key(const TorusGrid& grid, int q) {
    const std::int64_t count = grid.cell_count(q);
    const auto C = static_cast<std::int64_t>(grid.axis_sets(q).size());
    std::vector<std::int64_t> key(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        const CellId c = grid.cell_at(q, i);
        std::int64_t k = 0;
        for (int a = 0; a < grid.dimension(); ++a) {
            const int N = grid.resolution(a);
            const int b = c.base[a];
            k = k * N + (b < N / 2 ? 2 * b : 2 * (N - 1 - b) + 1);
        }
        key[static_cast<std::size_t>(i)] = k * C + grid.axis_rank(q, c.axes);
    }
    return key;
}

// Betti numbers by rank-nullity of the integer coboundaries: b_q = dim C^q - rank d_q - rank d_{q-1}.
inline std::vector<int> rank_betti_numbers(const TorusGrid& grid) {
    const int n = grid.dimension();
    std::vector<std::int64_t> rk(static_cast<std::size_t>(n + 1), 0);
    for (int q = 0; q < n; ++q) rk[static_cast<std::size_t>(q)] = exact_rank(coboundary(grid, q), folded_cell_key(grid, q));
    std::vector<int> b;
    for (int q = 0; q <= n; ++q) {
        const std::int64_t prev = q > 0 ? rk[static_cast<std::size_t>(q - 1)] : 0;
        b.push_back(static_cast<int>(grid.cell_count(q) - rk[static_cast<std::size_t>(q)] - prev));
    }
    return b;
}

}  // namespace witten
