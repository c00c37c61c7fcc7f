#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "witten/errors.hpp"
#include "witten/multiprecision.hpp"
#include "witten/rank.hpp"
#include "witten/witten_complex.hpp"

namespace witten {

// Low cluster of S_q in multiprecision, rebuilt from the midpoint values without any double
// rounding in the exponentials. Independent of the graph elimination route; used to check it
// and to see tunneling-scale structure that sits below double precision.
struct MpSparse {
    std::int64_t rows = 0, cols = 0;
    std::vector<std::vector<std::pair<std::int64_t, mp_real>>> row;
};

struct MpCluster {
    int q = 0;
    int digits = 0;
    std::vector<double> values;  // ascending Ritz values
    MpMatrix vectors;            // cluster vectors as columns, S-coordinates
    double max_residual = 0.0;   // max ||S x - theta x|| / scale
    int iterations = 0;
};

struct MpOracleOptions {
    int extra = 2;       // block = cluster + extra
    int max_iter = 12;
    int digits = 0;      // 0: chosen from t and the oscillation of f
};

// Decimal digits that hold e^{2t osc(f)} of dynamic range with margin.
inline int oracle_digits(const DeformedComplex& c) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int q = 0; q <= c.dimension(); ++q) {
        lo = std::min(lo, c.midpoint_values(q).minCoeff());
        hi = std::max(hi, c.midpoint_values(q).maxCoeff());
    }
    double scale = 1.0;
    for (int q = 0; q <= c.dimension(); ++q) scale = std::max(scale, c.laplacian(q).scale);
    return 50 + static_cast<int>(std::ceil(std::log10(scale) + 2.0 * c.t() * (hi - lo) / std::log(10.0)));
}

// M_{q+1}^{1/2} d_t M_q^{-1/2} with the exponentials taken in multiprecision.
inline MpSparse mp_symmetrized_coboundary(const DeformedComplex& c, int q) {
    const SparseMatrix& d = c.coboundary(q);
    const Eigen::VectorXd& fl = c.midpoint_values(q);
    const Eigen::VectorXd& fu = c.midpoint_values(q + 1);
    const Eigen::VectorXd& ml = c.mass(q).diagonal;
    const Eigen::VectorXd& mu = c.mass(q + 1).diagonal;
    const mp_real t(c.t());
    MpSparse D;
    D.rows = d.rows();
    D.cols = d.cols();
    D.row.resize(static_cast<std::size_t>(d.rows()));
    for (Eigen::Index r = 0; r < d.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(d, r); it; ++it) {
            mp_real v = exp(t * (mp_real(fl[it.col()]) - mp_real(fu[r])));
            v *= sqrt(mp_real(mu[r]) / mp_real(ml[it.col()]));
            if (it.value() < 0) v = -v;
            D.row[static_cast<std::size_t>(r)].emplace_back(it.col(), v);
        }
    return D;
}

namespace detail {

inline MpSparse mp_laplacian(const DeformedComplex& c, int q) {
    const int n = c.dimension();
    const std::int64_t size = c.grid().cell_count(q);
    std::vector<std::vector<std::pair<std::int64_t, mp_real>>> acc(static_cast<std::size_t>(size));
    auto add = [&](std::int64_t i, std::int64_t j, const mp_real& v) {
        auto& r = acc[static_cast<std::size_t>(i)];
        for (auto& e : r)
            if (e.first == j) {
                e.second += v;
                return;
            }
        r.emplace_back(j, v);
    };
    if (q < n) {  // D_q^T D_q
        const MpSparse D = mp_symmetrized_coboundary(c, q);
        for (const auto& r : D.row)
            for (const auto& a : r)
                for (const auto& b : r) add(a.first, b.first, a.second * b.second);
    }
    if (q > 0) {  // D_{q-1} D_{q-1}^T
        const MpSparse D = mp_symmetrized_coboundary(c, q - 1);
        std::vector<std::vector<std::pair<std::int64_t, const mp_real*>>> cols(static_cast<std::size_t>(D.cols));
        for (std::int64_t i = 0; i < D.rows; ++i)
            for (const auto& e : D.row[static_cast<std::size_t>(i)])
                cols[static_cast<std::size_t>(e.first)].emplace_back(i, &e.second);
        for (const auto& col : cols)
            for (const auto& a : col)
                for (const auto& b : col) add(a.first, b.first, (*a.second) * (*b.second));
    }
    MpSparse S;
    S.rows = S.cols = size;
    S.row = std::move(acc);
    for (auto& r : S.row) std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return S;
}

inline void mp_apply(const MpSparse& A, const MpMatrix& X, MpMatrix& Y) {
    Y = MpMatrix(static_cast<std::size_t>(A.rows), X.cols);
    for (std::int64_t i = 0; i < A.rows; ++i)
        for (const auto& e : A.row[static_cast<std::size_t>(i)])
            for (std::size_t j = 0; j < X.cols; ++j)
                Y(static_cast<std::size_t>(i), j) += e.second * X(static_cast<std::size_t>(e.first), j);
}

// Profile (envelope) Cholesky of a permuted sparse SPD matrix.
class MpEnvelopeCholesky {
public:
    MpEnvelopeCholesky(const MpSparse& A, const mp_real& shift, std::vector<std::int64_t> perm)
        : n_(static_cast<std::size_t>(A.rows)), perm_(std::move(perm)) {
        std::vector<std::int64_t> inv(n_);
        for (std::size_t i = 0; i < n_; ++i) inv[static_cast<std::size_t>(perm_[i])] = static_cast<std::int64_t>(i);
        first_.assign(n_, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            std::size_t f = i;
            for (const auto& e : A.row[static_cast<std::size_t>(perm_[i])])
                f = std::min(f, static_cast<std::size_t>(inv[static_cast<std::size_t>(e.first)]));
            first_[i] = f;
        }
        offset_.assign(n_ + 1, 0);
        for (std::size_t i = 0; i < n_; ++i) offset_[i + 1] = offset_[i] + (i - first_[i] + 1);
        L_.assign(offset_[n_], mp_real(0));
        for (std::size_t i = 0; i < n_; ++i) {
            for (const auto& e : A.row[static_cast<std::size_t>(perm_[i])]) {
                const auto j = static_cast<std::size_t>(inv[static_cast<std::size_t>(e.first)]);
                if (j <= i) at(i, j) = e.second;
            }
            at(i, i) += shift;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = first_[i]; j <= i; ++j) {
                mp_real s = at(i, j);
                const std::size_t k0 = std::max(first_[i], first_[j]);
                for (std::size_t k = k0; k < j; ++k) s -= at(i, k) * at(j, k);
                if (j == i) {
                    if (s <= 0) throw NumericalError("multiprecision envelope Cholesky: not positive definite");
                    at(i, i) = sqrt(s);
                } else {
                    at(i, j) = s / at(j, j);
                }
            }
        }
    }

    // X <- (A + shift)^{-1} X
    void solve(MpMatrix& X) const {
        const std::size_t m = X.cols;
        MpMatrix Y(n_, m);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t c = 0; c < m; ++c) Y(i, c) = X(static_cast<std::size_t>(perm_[i]), c);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t c = 0; c < m; ++c) {
                mp_real s = Y(i, c);
                for (std::size_t k = first_[i]; k < i; ++k) s -= at(i, k) * Y(k, c);
                Y(i, c) = s / at(i, i);
            }
        for (std::size_t i = n_; i-- > 0;)
            for (std::size_t c = 0; c < m; ++c) {
                Y(i, c) /= at(i, i);
                const mp_real& yi = Y(i, c);
                for (std::size_t k = first_[i]; k < i; ++k) Y(k, c) -= at(i, k) * yi;
            }
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t c = 0; c < m; ++c) X(static_cast<std::size_t>(perm_[i]), c) = Y(i, c);
    }

private:
    mp_real& at(std::size_t i, std::size_t j) { return L_[offset_[i] + (j - first_[i])]; }
    const mp_real& at(std::size_t i, std::size_t j) const { return L_[offset_[i] + (j - first_[i])]; }

    std::size_t n_;
    std::vector<std::int64_t> perm_;
    std::vector<std::size_t> first_, offset_;
    std::vector<mp_real> L_;
};

inline void mp_orthonormalize(MpMatrix& X) {
    for (int pass = 0; pass < 2; ++pass)
        for (std::size_t j = 0; j < X.cols; ++j) {
            for (std::size_t i = 0; i < j; ++i) {
                mp_real dot = 0;
                for (std::size_t r = 0; r < X.rows; ++r) dot += X(r, i) * X(r, j);
                for (std::size_t r = 0; r < X.rows; ++r) X(r, j) -= dot * X(r, i);
            }
            mp_real nrm = 0;
            for (std::size_t r = 0; r < X.rows; ++r) nrm += X(r, j) * X(r, j);
            nrm = sqrt(nrm);
            if (nrm == 0) throw NumericalError("multiprecision subspace iteration: start block is rank deficient");
            for (std::size_t r = 0; r < X.rows; ++r) X(r, j) /= nrm;
        }
}

}  // namespace detail

// Subspace iteration with (S + mu)^{-1} from a double-precision start block (columns in
// S-coordinates, at least `cluster` of them; extra columns are added by the caller's choice).
// gap is a double estimate of the first eigenvalue above the cluster.
inline MpCluster mp_low_cluster(const DeformedComplex& c, int q, int cluster, const Eigen::MatrixXd& start, double gap,
                                const MpOracleOptions& opt = {}) {
    c.grid().check_degree(q);
    const std::int64_t n = c.grid().cell_count(q);
    if (cluster < 1 || start.cols() < cluster || start.rows() != n)
        throw DomainError("mp_low_cluster: start block must have n rows and at least `cluster` columns");
    if (!(gap > 0.0)) throw DomainError("mp_low_cluster: gap estimate must be positive");
    MpCluster out;
    out.q = q;
    out.digits = opt.digits > 0 ? opt.digits : oracle_digits(c);
    ScopedPrecision prec(static_cast<unsigned>(out.digits));

    const MpSparse S = detail::mp_laplacian(c, q);
    const double scale = std::max(c.laplacian(q).scale, 1.0);
    const mp_real mu = mp_real(gap) * mp_real("1e-20");

    const std::vector<std::int64_t> key = folded_cell_key(c.grid(), q);
    std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), std::int64_t{0});
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::int64_t a, std::int64_t b) { return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)]; });
    const detail::MpEnvelopeCholesky chol(S, mu, std::move(perm));

    const auto b = static_cast<std::size_t>(start.cols());
    MpMatrix X(static_cast<std::size_t>(n), b);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < b; ++j) X(static_cast<std::size_t>(i), j) = start(i, static_cast<Eigen::Index>(j));
    detail::mp_orthonormalize(X);

    const mp_real tol = pow(mp_real(10), -(out.digits / 2)) * scale;
    MpMatrix SX;
    std::vector<mp_real> theta;
    for (int it = 1; it <= opt.max_iter; ++it) {
        chol.solve(X);
        detail::mp_orthonormalize(X);
        detail::mp_apply(S, X, SX);
        const MpEigen rr = mp_jacobi_eigen(mp_multiply(mp_transpose(X), SX));
        X = mp_multiply(X, rr.vectors);
        SX = mp_multiply(SX, rr.vectors);
        theta = rr.values;
        mp_real worst = 0;
        for (std::size_t j = 0; j < static_cast<std::size_t>(cluster); ++j) {
            mp_real r2 = 0;
            for (std::size_t i = 0; i < X.rows; ++i) {
                const mp_real e = SX(i, j) - theta[j] * X(i, j);
                r2 += e * e;
            }
            const mp_real rn = sqrt(r2);
            if (rn > worst) worst = rn;
        }
        out.iterations = it;
        out.max_residual = static_cast<double>(worst / scale);
        if (worst <= tol * mp_real(gap) / scale) break;
    }
    out.vectors = MpMatrix(X.rows, static_cast<std::size_t>(cluster));
    for (std::size_t i = 0; i < X.rows; ++i)
        for (std::size_t j = 0; j < static_cast<std::size_t>(cluster); ++j) out.vectors(i, j) = X(i, j);
    for (std::size_t j = 0; j < static_cast<std::size_t>(cluster); ++j) out.values.push_back(static_cast<double>(theta[j]));
    return out;
}

// Harmonic values sit at working-precision level; tunneling values are no smaller than about
// e^{-2t osc(f)}, which the digit budget keeps 50 orders above it.
inline double mp_kernel_cut(const MpCluster& cl, double scale) {
    return std::max(scale, 1.0) * std::pow(10.0, -(cl.digits - 25));
}

// Rank of d_t restricted to the low cluster of degree q, mapped into the cluster of degree q+1.
// Each nonharmonic cluster vector x is scaled by theta^{-1/2}, so the restricted map has singular
// values 1 on im d_t^* and 0 on im d_t; the rank is read off with a 0.5 cut. Harmonic vectors
// (theta below kernel_cut) are dropped.
struct RestrictedRank {
    int rank = 0;
    int harmonic = 0;
    double leak = 0.0;  // part of D x outside the degree-(q+1) cluster, relative
    std::vector<double> singular_values;
};

inline RestrictedRank restricted_rank(const DeformedComplex& c, int q, const MpCluster& lower, const MpCluster& upper,
                                      double kernel_cut = -1.0) {
    if (lower.q != q || upper.q != q + 1) throw DomainError("restricted_rank: cluster degrees do not match q, q+1");
    ScopedPrecision prec(static_cast<unsigned>(std::max(lower.digits, upper.digits)));
    const MpSparse D = mp_symmetrized_coboundary(c, q);
    if (kernel_cut < 0.0) kernel_cut = mp_kernel_cut(lower, c.laplacian(q).scale);
    RestrictedRank out;
    std::vector<std::size_t> live;
    for (std::size_t j = 0; j < lower.values.size(); ++j) {
        if (lower.values[j] <= kernel_cut)
            ++out.harmonic;
        else
            live.push_back(j);
    }
    if (live.empty()) return out;
    MpMatrix Y(lower.vectors.rows, live.size());
    for (std::size_t k = 0; k < live.size(); ++k) {
        const mp_real s = 1 / sqrt(mp_real(lower.values[live[k]]));
        for (std::size_t i = 0; i < Y.rows; ++i) Y(i, k) = lower.vectors(i, live[k]) * s;
    }
    MpMatrix DY;
    detail::mp_apply(D, Y, DY);
    const MpMatrix C = mp_multiply(mp_transpose(upper.vectors), DY);
    mp_real full = 0, kept = 0;
    for (const auto& v : DY.a) full += v * v;
    for (const auto& v : C.a) kept += v * v;
    out.leak = full > 0 ? static_cast<double>(sqrt(abs(full - kept) / full)) : 0.0;
    const MpEigen g = mp_jacobi_eigen(mp_multiply(mp_transpose(C), C));
    for (const auto& v : g.values) {
        const double s = std::sqrt(std::max(0.0, static_cast<double>(v)));
        out.singular_values.push_back(s);
        if (s > 0.5) ++out.rank;
    }
    return out;
}

}  // namespace witten
