#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "witten/combinatorics.hpp"
#include "witten/errors.hpp"

namespace witten {

using Point = std::array<double, kMaxDim>;
using MultiIndex = std::array<int, kMaxDim>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct CellId {
    int q = 0;
    AxisSet axes = 0;
    MultiIndex base{};

    bool operator==(const CellId&) const = default;
};

// Periodic cubical complex on prod_i R/L_i Z.
// q-cells are ordered by (rank of J, base) with k_1 the slowest index.
class TorusGrid {
public:
    TorusGrid(int n, const std::vector<double>& lengths, const std::vector<int>& resolutions) : n_(n) {
        if (n < 1 || n > kMaxDim) throw DomainError("dimension must be in 1..3, got " + std::to_string(n));
        if (static_cast<int>(lengths.size()) != n || static_cast<int>(resolutions.size()) != n)
            throw DomainError("lengths and resolutions need one entry per axis");
        vertices_ = 1;
        for (int i = 0; i < n; ++i) {
            if (!(lengths[i] > 0.0) || !std::isfinite(lengths[i]))
                throw DomainError("length on axis " + std::to_string(i + 1) + " must be positive");
            if (resolutions[i] < 4)
                throw DomainError("resolution on axis " + std::to_string(i + 1) + " must be >= 4, got " +
                                  std::to_string(resolutions[i]));
            L_[i] = lengths[i];
            N_[i] = resolutions[i];
            h_[i] = lengths[i] / resolutions[i];
            vertices_ *= resolutions[i];
        }
        for (int i = n; i < kMaxDim; ++i) {
            L_[i] = 1.0;
            N_[i] = 1;
            h_[i] = 1.0;
        }
        for (int q = 0; q <= n; ++q) subsets_[q] = axis_subsets(n, q);
    }

    int dimension() const { return n_; }
    double length(int axis) const { return L_[axis]; }
    int resolution(int axis) const { return N_[axis]; }
    double spacing(int axis) const { return h_[axis]; }
    std::vector<double> lengths() const { return {L_.begin(), L_.begin() + n_}; }
    std::vector<int> resolutions() const { return {N_.begin(), N_.begin() + n_}; }

    double min_spacing() const {
        double m = h_[0];
        for (int i = 1; i < n_; ++i) m = std::min(m, h_[i]);
        return m;
    }
    double max_spacing() const {
        double m = h_[0];
        for (int i = 1; i < n_; ++i) m = std::max(m, h_[i]);
        return m;
    }

    std::int64_t vertex_count() const { return vertices_; }

    std::int64_t cell_count(int q) const {
        if (q < 0 || q > n_) return 0;
        return binomial(n_, q) * vertices_;
    }

    const std::vector<AxisSet>& axis_sets(int q) const {
        check_degree(q);
        return subsets_[q];
    }

    int axis_rank(int q, AxisSet J) const {
        const auto& s = axis_sets(q);
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s[i] == J) return static_cast<int>(i);
        throw DomainError("axis set " + format_axes(J) + " is not a " + std::to_string(q) + "-subset");
    }

    // Periodic wrap applied to every component.
    std::int64_t vertex_index(const MultiIndex& k) const {
        std::int64_t idx = 0;
        for (int i = 0; i < n_; ++i) {
            int ki = k[i] % N_[i];
            if (ki < 0) ki += N_[i];
            idx = idx * N_[i] + ki;
        }
        return idx;
    }

    MultiIndex vertex_multi_index(std::int64_t v) const {
        MultiIndex k{};
        for (int i = n_ - 1; i >= 0; --i) {
            k[i] = static_cast<int>(v % N_[i]);
            v /= N_[i];
        }
        return k;
    }

    std::int64_t index_of(const CellId& c) const {
        if (cardinality(c.axes) != c.q) throw DomainError("cell axes do not match its degree");
        return static_cast<std::int64_t>(axis_rank(c.q, c.axes)) * vertices_ + vertex_index(c.base);
    }

    CellId cell_at(int q, std::int64_t index) const {
        check_degree(q);
        if (index < 0 || index >= cell_count(q)) throw DomainError("cell index out of range");
        CellId c;
        c.q = q;
        c.axes = subsets_[q][static_cast<std::size_t>(index / vertices_)];
        c.base = vertex_multi_index(index % vertices_);
        return c;
    }

    Point midpoint(const CellId& c) const {
        Point p{};
        for (int i = 0; i < n_; ++i) p[i] = (c.base[i] + (contains(c.axes, i) ? 0.5 : 0.0)) * h_[i];
        return p;
    }

    Point vertex_point(std::int64_t v) const {
        const MultiIndex k = vertex_multi_index(v);
        Point p{};
        for (int i = 0; i < n_; ++i) p[i] = k[i] * h_[i];
        return p;
    }

    // prod_{j in J} h_j: converts a component value into the integrated cell value.
    double volume_factor(AxisSet J) const {
        double v = 1.0;
        for (int i = 0; i < n_; ++i)
            if (contains(J, i)) v *= h_[i];
        return v;
    }

    double cell_volume() const { return volume_factor((AxisSet{1} << n_) - 1u); }

    void check_degree(int q) const {
        if (q < 0 || q > n_)
            throw DomainError("degree " + std::to_string(q) + " out of range 0.." + std::to_string(n_));
    }

    bool operator==(const TorusGrid& o) const { return n_ == o.n_ && L_ == o.L_ && N_ == o.N_; }

private:
    int n_ = 1;
    std::array<double, kMaxDim> L_{};
    std::array<int, kMaxDim> N_{};
    std::array<double, kMaxDim> h_{};
    std::int64_t vertices_ = 0;
    std::array<std::vector<AxisSet>, kMaxDim + 1> subsets_;
};

inline TorusGrid build_grid(int n, const std::vector<double>& lengths, const std::vector<int>& resolutions) {
    return TorusGrid(n, lengths, resolutions);
}

inline std::vector<CellId> enumerate_cells(const TorusGrid& grid, int q) {
    grid.check_degree(q);
    std::vector<CellId> cells;
    cells.reserve(static_cast<std::size_t>(grid.cell_count(q)));
    for (std::int64_t i = 0; i < grid.cell_count(q); ++i) cells.push_back(grid.cell_at(q, i));
    return cells;
}

// (d u)_sigma = sum_p (-1)^p (u(upper facet along j_p) - u(lower facet)), j_p the p-th axis of sigma.
// For q == n the operator is empty (0 rows).
inline SparseMatrix coboundary(const TorusGrid& grid, int q) {
    grid.check_degree(q);
    const std::int64_t cols = grid.cell_count(q);
    const std::int64_t rows = grid.cell_count(q + 1);
    SparseMatrix d(rows, cols);
    if (rows == 0) return d;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(rows) * 2 * (q + 1));
    const int n = grid.dimension();
    for (std::int64_t r = 0; r < rows; ++r) {
        const CellId s = grid.cell_at(q + 1, r);
        int p = 0;
        for (int j = 0; j < n; ++j) {
            if (!contains(s.axes, j)) continue;
            CellId facet{q, s.axes & ~(AxisSet{1} << j), s.base};
            const double sign = (p % 2 == 0) ? 1.0 : -1.0;
            trip.emplace_back(r, grid.index_of(facet), -sign);
            facet.base[j] += 1;
            trip.emplace_back(r, grid.index_of(facet), sign);
            ++p;
        }
    }
    d.setFromTriplets(trip.begin(), trip.end());
    return d;
}

struct MassMatrix {
    int q = 0;
    Eigen::VectorXd diagonal;
};

inline MassMatrix mass_matrix(const TorusGrid& grid, int q) {
    grid.check_degree(q);
    MassMatrix m{q, Eigen::VectorXd(grid.cell_count(q))};
    const double all = grid.cell_volume();
    const auto& sets = grid.axis_sets(q);
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const double inJ = grid.volume_factor(sets[s]);
        m.diagonal.segment(static_cast<Eigen::Index>(s * grid.vertex_count()), grid.vertex_count())
            .setConstant((all / inJ) / inJ);
    }
    return m;
}

struct Cochain {
    int q = 0;
    TorusGrid grid;
    Eigen::VectorXd values;
};

inline Cochain make_cochain(const TorusGrid& grid, int q, Eigen::VectorXd values) {
    grid.check_degree(q);
    if (values.size() != grid.cell_count(q)) throw DomainError("cochain length does not match the cell count");
    if (!values.allFinite()) throw DomainError("cochain has non-finite values");
    return Cochain{q, grid, std::move(values)};
}

using ComponentFunction = std::function<double(const Point&)>;

// One component per axis subset, in the order of grid.axis_sets(q).
inline Cochain sample_form(const TorusGrid& grid, int q, const std::vector<ComponentFunction>& components) {
    const auto& sets = grid.axis_sets(q);
    if (components.size() != sets.size())
        throw DomainError("sample_form needs " + std::to_string(sets.size()) + " component functions");
    Eigen::VectorXd v(grid.cell_count(q));
    for (std::int64_t i = 0; i < v.size(); ++i) {
        const CellId c = grid.cell_at(q, i);
        const auto s = static_cast<std::size_t>(i / grid.vertex_count());
        const double val = components[s] ? components[s](grid.midpoint(c)) : 0.0;
        if (!std::isfinite(val)) throw DomainError("component function returned a non-finite value");
        v[i] = val * grid.volume_factor(c.axes);
    }
    return Cochain{q, grid, std::move(v)};
}

// Max over vertices of the pointwise norm of the reconstructed component vector.
// Each component at a vertex is the root-mean-square over the 2^q incident cells of that type,
// so the result vanishes only for the zero cochain.
inline double sup_norm(const Cochain& u) {
    const TorusGrid& g = u.grid;
    const auto& sets = g.axis_sets(u.q);
    const int n = g.dimension();
    double best = 0.0;
    for (std::int64_t v = 0; v < g.vertex_count(); ++v) {
        const MultiIndex k = g.vertex_multi_index(v);
        double norm2 = 0.0;
        for (std::size_t s = 0; s < sets.size(); ++s) {
            const AxisSet J = sets[s];
            const double vol = g.volume_factor(J);
            std::vector<int> axes;
            for (int j = 0; j < n; ++j)
                if (contains(J, j)) axes.push_back(j);
            const int corners = 1 << axes.size();
            double acc = 0.0;
            for (int mask = 0; mask < corners; ++mask) {
                MultiIndex b = k;
                for (std::size_t a = 0; a < axes.size(); ++a)
                    if ((mask >> a) & 1) b[axes[a]] -= 1;
                const double c = u.values[static_cast<Eigen::Index>(s * g.vertex_count() + g.vertex_index(b))] / vol;
                acc += c * c;
            }
            norm2 += acc / corners;
        }
        best = std::max(best, std::sqrt(norm2));
    }
    return best;
}

inline double inner_product(const MassMatrix& M, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return (M.diagonal.array() * (u.array() * v.array())).sum();
}

inline double mass_norm(const MassMatrix& M, const Eigen::VectorXd& u) { return std::sqrt(inner_product(M, u, u)); }

}  // namespace witten
