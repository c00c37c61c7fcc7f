#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <string>
#include <vector>

#include "witten/errors.hpp"
#include "witten/exterior_algebra.hpp"
#include "witten/morse_function.hpp"
#include "witten/torus_grid.hpp"

namespace witten {

inline constexpr double kMaxExponent = 700.0;

// Symmetric operator S = M^{1/2} Delta M^{-1/2} together with its Gershgorin bound.
struct SymmetricOperator {
    int q = 0;
    SparseMatrix matrix;
    double scale = 0.0;

    Eigen::Index size() const { return matrix.rows(); }
};

inline double gershgorin_bound(const SparseMatrix& A) {
    double best = 0.0;
    for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
        double s = 0.0;
        for (SparseMatrix::InnerIterator it(A, r); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
    }
    return best;
}

inline SymmetricOperator make_symmetric_operator(int q, SparseMatrix A) {
    A.makeCompressed();
    const double s = gershgorin_bound(A);
    return SymmetricOperator{q, std::move(A), s};
}

inline Eigen::VectorXd midpoint_values(const TorusGrid& grid, const MorseFunction& f, int q) {
    Eigen::VectorXd v(grid.cell_count(q));
    for (std::int64_t i = 0; i < v.size(); ++i) v[i] = f.value(grid.midpoint(grid.cell_at(q, i)));
    return v;
}

// Entry (sigma, tau) -> sign * exp(t (f(m_tau) - f(m_sigma))). The difference is formed before exp.
inline SparseMatrix deform_coboundary(const SparseMatrix& d_q, const Eigen::VectorXd& f_lower,
                                      const Eigen::VectorXd& f_upper, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("deformation parameter t must be finite and >= 0");
    if (d_q.cols() != f_lower.size() || d_q.rows() != f_upper.size())
        throw DomainError("midpoint values do not match the operator shape");
    SparseMatrix dt = d_q;
    double worst = 0.0;
    for (Eigen::Index r = 0; r < dt.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(dt, r); it; ++it)
            worst = std::max(worst, t * std::abs(f_lower[it.col()] - f_upper[it.row()]));
    if (worst > kMaxExponent)
        throw ResolutionError("resolution too coarse for this t: t*max|f(m_tau)-f(m_sigma)| = " +
                              std::to_string(worst) + " exceeds " + std::to_string(kMaxExponent));
    if (t == 0.0) return dt;
    for (Eigen::Index r = 0; r < dt.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(dt, r); it; ++it) {
            const double expo = t * (f_lower[it.col()] - f_upper[it.row()]);
            it.valueRef() = it.value() * std::exp(expo);
        }
    return dt;
}

inline SparseMatrix deform_coboundary(const TorusGrid& grid, int q, const SparseMatrix& d_q, const MorseFunction& f,
                                      double t) {
    return deform_coboundary(d_q, midpoint_values(grid, f, q), midpoint_values(grid, f, q + 1), t);
}

// M_q^{-1} op^T M_{q+1}
inline SparseMatrix adjoint_operator(const SparseMatrix& op, const MassMatrix& Mq, const MassMatrix& Mq1) {
    if (op.cols() != Mq.diagonal.size() || op.rows() != Mq1.diagonal.size())
        throw DomainError("adjoint_operator: mass matrices do not match the operator shape");
    SparseMatrix adj = op.transpose();
    for (Eigen::Index r = 0; r < adj.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(adj, r); it; ++it)
            it.valueRef() = it.value() * Mq1.diagonal[it.col()] / Mq.diagonal[it.row()];
    return adj;
}

namespace detail {

inline SparseMatrix symmetrize_coboundary(const SparseMatrix& op, const MassMatrix& Mq, const MassMatrix& Mq1) {
    SparseMatrix D = op;
    for (Eigen::Index r = 0; r < D.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(D, r); it; ++it)
            it.valueRef() = it.value() * std::sqrt(Mq1.diagonal[it.row()] / Mq.diagonal[it.col()]);
    return D;
}

// S_q = D_{q-1} D_{q-1}^T + D_q^T D_q from the symmetrized coboundaries.
inline SymmetricOperator assemble_laplacian(const std::vector<SparseMatrix>& D, int q, std::int64_t size) {
    SparseMatrix S(size, size);
    const int n = static_cast<int>(D.size());
    if (q >= 1) S += SparseMatrix(D[static_cast<std::size_t>(q - 1)] * SparseMatrix(D[static_cast<std::size_t>(q - 1)].transpose()));
    if (q < n) S += SparseMatrix(SparseMatrix(D[static_cast<std::size_t>(q)].transpose()) * D[static_cast<std::size_t>(q)]);
    S.prune(0.0);
    return make_symmetric_operator(q, std::move(S));
}

}  // namespace detail

// d_t, masses and symmetrized Laplacians for one (f, t). Immutable after construction.
class DeformedComplex {
public:
    DeformedComplex(TorusGrid grid, MorseFunction f, double t) : grid_(std::move(grid)), f_(std::move(f)), t_(t) {
        if (!(t >= 0.0)) throw DomainError("deformation parameter t must be >= 0");
        const int n = grid_.dimension();
        if (f_.dimension() != n) throw DomainError("function and grid dimensions differ");
        for (int q = 0; q <= n; ++q) {
            fmid_.push_back(witten::midpoint_values(grid_, f_, q));
            mass_.push_back(mass_matrix(grid_, q));
        }
        for (int q = 0; q < n; ++q) {
            d_.push_back(witten::coboundary(grid_, q));
            dt_.push_back(deform_coboundary(d_.back(), fmid_[static_cast<std::size_t>(q)],
                                            fmid_[static_cast<std::size_t>(q + 1)], t_));
            D_.push_back(detail::symmetrize_coboundary(dt_.back(), mass_[static_cast<std::size_t>(q)],
                                                       mass_[static_cast<std::size_t>(q + 1)]));
        }
        for (int q = 0; q <= n; ++q) S_.push_back(detail::assemble_laplacian(D_, q, grid_.cell_count(q)));
    }

    const TorusGrid& grid() const { return grid_; }
    const MorseFunction& function() const { return f_; }
    double t() const { return t_; }
    int dimension() const { return grid_.dimension(); }

    const SparseMatrix& coboundary(int q) const { return d_.at(static_cast<std::size_t>(q)); }
    const SparseMatrix& deformed_coboundary(int q) const { return dt_.at(static_cast<std::size_t>(q)); }
    const SparseMatrix& symmetrized_coboundary(int q) const { return D_.at(static_cast<std::size_t>(q)); }
    const MassMatrix& mass(int q) const { return mass_.at(static_cast<std::size_t>(q)); }
    const Eigen::VectorXd& midpoint_values(int q) const { return fmid_.at(static_cast<std::size_t>(q)); }
    const SymmetricOperator& laplacian(int q) const { return S_.at(static_cast<std::size_t>(q)); }

    // d_t^* : (q+1)-cochains -> q-cochains
    SparseMatrix adjoint(int q) const { return adjoint_operator(deformed_coboundary(q), mass(q), mass(q + 1)); }

    // Cochain values <-> coordinates of the symmetrized operator.
    Eigen::VectorXd to_symmetric(int q, const Eigen::VectorXd& u) const {
        return (u.array() * mass(q).diagonal.array().sqrt()).matrix();
    }
    Eigen::VectorXd from_symmetric(int q, const Eigen::VectorXd& v) const {
        return (v.array() / mass(q).diagonal.array().sqrt()).matrix();
    }

private:
    TorusGrid grid_;
    MorseFunction f_;
    double t_;
    std::vector<Eigen::VectorXd> fmid_;
    std::vector<MassMatrix> mass_;
    std::vector<SparseMatrix> d_, dt_, D_;
    std::vector<SymmetricOperator> S_;
};

inline const SymmetricOperator& witten_laplacian(const DeformedComplex& c, int q) {
    c.grid().check_degree(q);
    return c.laplacian(q);
}

// Symmetrized Hodge Laplacian of the undeformed complex.
inline SymmetricOperator undeformed_laplacian(const TorusGrid& grid, int q) {
    grid.check_degree(q);
    std::vector<SparseMatrix> D;
    for (int p = 0; p < grid.dimension(); ++p)
        D.push_back(detail::symmetrize_coboundary(coboundary(grid, p), mass_matrix(grid, p), mass_matrix(grid, p + 1)));
    return detail::assemble_laplacian(D, q, grid.cell_count(q));
}

struct BochnerTerms {
    int q = 0;
    Eigen::VectorXd potential;              // t^2 |df|^2 per vertex
    std::vector<Eigen::MatrixXd> coupling;  // t sum H_lk [dx_l ^, dx_k _|] per vertex
};

inline BochnerTerms bochner_terms(const DeformedComplex& c, int q) {
    const TorusGrid& g = c.grid();
    g.check_degree(q);
    const double t = c.t();
    BochnerTerms b;
    b.q = q;
    b.potential.resize(g.vertex_count());
    b.coupling.reserve(static_cast<std::size_t>(g.vertex_count()));
    for (std::int64_t v = 0; v < g.vertex_count(); ++v) {
        const Point x = g.vertex_point(v);
        b.potential[v] = t * t * c.function().gradient(x).squaredNorm();
        b.coupling.push_back(t * hessian_coupling_block(c.function().hessian(x), g.dimension(), q));
    }
    return b;
}

// Delta (t = 0) + t^2 |df|^2 + t sum_{l,k} Hess_lk [dx_l ^, dx_k _|], zeroth-order terms sampled at
// the base vertex of each cell. Assembled in the symmetrized coordinates, where the flat-metric
// component blocks act unchanged.
inline SymmetricOperator bochner_laplacian(const DeformedComplex& c, int q) {
    const TorusGrid& g = c.grid();
    const SymmetricOperator S0 = undeformed_laplacian(g, q);
    const BochnerTerms terms = bochner_terms(c, q);
    const auto C = static_cast<std::int64_t>(g.axis_sets(q).size());
    const std::int64_t V = g.vertex_count();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(V * C * C));
    for (std::int64_t v = 0; v < V; ++v) {
        const Eigen::MatrixXd& B = terms.coupling[static_cast<std::size_t>(v)];
        for (std::int64_t a = 0; a < C; ++a) {
            trip.emplace_back(a * V + v, a * V + v, terms.potential[v]);
            for (std::int64_t b = 0; b < C; ++b)
                if (B(a, b) != 0.0) trip.emplace_back(a * V + v, b * V + v, B(a, b));
        }
    }
    SparseMatrix Z(g.cell_count(q), g.cell_count(q));
    Z.setFromTriplets(trip.begin(), trip.end());
    SparseMatrix S = S0.matrix + Z;
    return make_symmetric_operator(q, std::move(S));
}

}  // namespace witten
