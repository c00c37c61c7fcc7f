#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "witten/errors.hpp"
#include "witten/witten_complex.hpp"

namespace witten {

inline constexpr double kKernelRelTol = 1e-10;
inline constexpr Eigen::Index kDenseOracleCap = 5000;

enum class SpectralTransform { automatic, fold, shift_invert };

inline std::string transform_name(SpectralTransform t) {
    switch (t) {
        case SpectralTransform::automatic: return "automatic";
        case SpectralTransform::fold: return "fold";
        case SpectralTransform::shift_invert: return "shift_invert";
    }
    return "?";
}

struct SpectrumRequest {
    int q = 0;
    double t = 0.0;
    int k = 1;
    double tol = 1e-8;
    int max_iter = 300;
    std::uint64_t seed = 42;
    SpectralTransform transform = SpectralTransform::automatic;
    bool want_vectors = false;
};

struct EigResult {
    int q = 0;
    double t = 0.0;
    std::vector<double> values;
    std::vector<double> residuals;  // ||S v - lambda v|| for unit v
    std::vector<bool> converged;
    Eigen::MatrixXd vectors;        // symmetrized coordinates, one column per value (if requested)
    double scale = 0.0;             // Gershgorin bound of S
    std::uint64_t seed = 42;
    int iterations = 0;
    std::string transform;

    bool all_converged() const { return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; }); }
};

namespace detail {

// Orthonormalize the columns of W against Q (two Gram-Schmidt passes) and among themselves.
// Columns that collapse are replaced with fresh random directions.
inline Eigen::MatrixXd orthonormal_block(const Eigen::MatrixXd& Q, Eigen::MatrixXd W, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    const Eigen::Index n = W.rows();
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        const double orig = W.col(j).norm();
        for (int attempt = 0; attempt < 4; ++attempt) {
            for (int pass = 0; pass < 2; ++pass) {
                if (Q.cols() > 0) W.col(j) -= Q * (Q.transpose() * W.col(j));
                if (j > 0) W.col(j) -= W.leftCols(j) * (W.leftCols(j).transpose() * W.col(j));
            }
            const double nn = W.col(j).norm();
            if (nn > 1e-10 * std::max(orig, std::numeric_limits<double>::min()) && nn > 0.0) {
                W.col(j) /= nn;
                break;
            }
            for (Eigen::Index i = 0; i < n; ++i) W(i, j) = nd(rng);
            W.col(j).normalize();
        }
    }
    return W;
}

}  // namespace detail

// k smallest eigenpairs of a symmetric PSD operator by block Lanczos with full reorthogonalization
// (Rayleigh-Ritz on the accumulated block Krylov basis, thick restart when the basis fills up).
// fold: Krylov space of sigma I - S with sigma >= Gershgorin bound.
// shift_invert: Krylov space of (S + mu I)^{-1}, mu = 1e-6 * Gershgorin bound, sparse LDL^T.
// Final values and residuals come from a Rayleigh-Ritz step with S itself.
inline EigResult smallest_eigs(const SymmetricOperator& op, const SpectrumRequest& req) {
    const Eigen::Index n = op.size();
    if (req.k < 1) throw DomainError("SpectrumRequest.k must be >= 1");
    if (!(req.tol > 0.0)) throw DomainError("SpectrumRequest.tol must be > 0");
    if (req.k >= n) throw DomainError("SpectrumRequest.k must be below the operator dimension");
    const SparseMatrix& S = op.matrix;
    const double scale = std::max(op.scale, std::numeric_limits<double>::min());

    SpectralTransform mode = req.transform;
    if (mode == SpectralTransform::automatic) mode = SpectralTransform::shift_invert;

    const double mu = 1e-6 * scale;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    if (mode == SpectralTransform::shift_invert) {
        Eigen::SparseMatrix<double> shifted = S;
        for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += mu;
        ldlt.compute(shifted);
        if (ldlt.info() != Eigen::Success) throw NumericalError("sparse LDL^T factorization failed");
    }
    auto apply = [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
        if (mode == SpectralTransform::fold) return scale * X - S * X;
        return ldlt.solve(X);
    };

    const int k = req.k;
    const Eigen::Index p = std::min<Eigen::Index>(std::max(k, 2), n);
    const Eigen::Index max_basis = std::min<Eigen::Index>(n, std::max<Eigen::Index>(20 * p, 200));
    std::mt19937_64 rng(req.seed);
    std::normal_distribution<double> nd;

    Eigen::MatrixXd start(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) start(i, j) = nd(rng);
    Eigen::MatrixXd Q(n, 0), AQ(n, 0), T(0, 0);
    Eigen::MatrixXd block = detail::orthonormal_block(Q, start, rng);

    EigResult res;
    res.q = req.q;
    res.t = req.t;
    res.scale = op.scale;
    res.seed = req.seed;
    res.transform = transform_name(mode);

    Eigen::MatrixXd Y;            // current Ritz vectors (top k of the transformed operator)
    Eigen::VectorXd lam, resid;
    std::vector<bool> conv;
    bool sharp = false;           // every residual within tol |lambda| + 100 eps scale
    int polish = 0;               // iterations spent after the tol * scale criterion held
    Eigen::MatrixXd lastW;

    auto ritz = [&](Eigen::Index keep, Eigen::MatrixXd& vecs, Eigen::VectorXd& theta, Eigen::MatrixXd* Avecs) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const Eigen::Index m = T.rows();
        keep = std::min(keep, m);
        const Eigen::MatrixXd Sv = es.eigenvectors().rightCols(keep).rowwise().reverse();
        theta = es.eigenvalues().tail(keep).reverse();
        vecs = Q * Sv;
        if (Avecs) *Avecs = AQ * Sv;
    };

    // Rayleigh-Ritz with S on span(Y): exact residuals for the original operator.
    auto refine = [&](const Eigen::MatrixXd& Yin) {
        Eigen::MatrixXd SY = S * Yin;
        Eigen::MatrixXd Tk = Yin.transpose() * SY;
        Tk = 0.5 * (Tk + Tk.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tk);
        Y = Yin * es.eigenvectors();
        SY = SY * es.eigenvectors();
        lam = es.eigenvalues();
        resid.resize(lam.size());
        conv.assign(static_cast<std::size_t>(lam.size()), false);
        sharp = true;
        for (Eigen::Index i = 0; i < lam.size(); ++i) {
            resid[i] = (SY.col(i) - lam[i] * Y.col(i)).norm();
            conv[static_cast<std::size_t>(i)] = resid[i] <= req.tol * scale;
            sharp = sharp && resid[i] <= req.tol * std::abs(lam[i]) + 100.0 * std::numeric_limits<double>::epsilon() * scale;
        }
    };

    int it = 0;
    bool done = false;
    for (; it < req.max_iter && !done; ++it) {
        const Eigen::MatrixXd W = apply(block);
        const Eigen::Index m0 = Q.cols();
        const Eigen::Index b = block.cols();
        Q.conservativeResize(n, m0 + b);
        Q.rightCols(b) = block;
        AQ.conservativeResize(n, m0 + b);
        AQ.rightCols(b) = W;
        // T = Q^T A Q, extended by the new block column and row
        Eigen::MatrixXd Tn(m0 + b, m0 + b);
        if (m0 > 0) Tn.topLeftCorner(m0, m0) = T;
        const Eigen::MatrixXd col = Q.transpose() * W;
        Tn.rightCols(b) = col;
        Tn.bottomRows(b) = col.transpose();
        T = 0.5 * (Tn + Tn.transpose());
        lastW = W;

        if (Q.cols() >= k) {
            Eigen::MatrixXd Yr;
            Eigen::VectorXd theta;
            ritz(k, Yr, theta, nullptr);
            refine(Yr);
            // keep going for relative accuracy in the eigenvalues, for a bounded number of steps
            if (std::all_of(conv.begin(), conv.end(), [](bool c) { return c; })) done = sharp || ++polish > 20;
        }
        if (done || Q.cols() >= n) {
            ++it;
            break;
        }
        if (Q.cols() + p > max_basis) {
            // thick restart on the leading Ritz pairs of the transformed operator
            const Eigen::Index keep = std::min<Eigen::Index>(max_basis - 2 * p, std::max<Eigen::Index>(k + p, max_basis / 2));
            Eigen::MatrixXd Yk, AYk;
            Eigen::VectorXd theta;
            ritz(keep, Yk, theta, &AYk);
            Q = Yk;
            AQ = AYk;
            T = theta.asDiagonal();
        }
        const Eigen::Index room = std::min<Eigen::Index>(p, n - Q.cols());
        block = detail::orthonormal_block(Q, lastW.leftCols(room), rng);
    }
    if (Y.cols() == 0) {
        Eigen::MatrixXd Yr;
        Eigen::VectorXd theta;
        ritz(k, Yr, theta, nullptr);
        refine(Yr);
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(lam.size()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return lam[a] < lam[b]; });
    res.iterations = it;
    if (req.want_vectors) res.vectors.resize(n, static_cast<Eigen::Index>(order.size()));
    for (std::size_t i = 0; i < order.size(); ++i) {
        res.values.push_back(lam[order[i]]);
        res.residuals.push_back(resid[order[i]]);
        res.converged.push_back(conv[static_cast<std::size_t>(order[i])]);
        if (req.want_vectors) res.vectors.col(static_cast<Eigen::Index>(i)) = Y.col(order[i]);
    }
    return res;
}

inline void check_dense_dimension(Eigen::Index n) {
    if (n > kDenseOracleCap)
        throw DomainError("dense oracle limited to dimension " + std::to_string(kDenseOracleCap) + ", got " +
                          std::to_string(n));
}

inline std::vector<double> dense_spectrum_oracle(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw DomainError("dense oracle needs a square matrix");
    check_dense_dimension(A.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

inline std::vector<double> dense_spectrum_oracle(const SymmetricOperator& op) {
    check_dense_dimension(op.size());
    return dense_spectrum_oracle(Eigen::MatrixXd(op.matrix));
}

struct DenseEigenpairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

inline DenseEigenpairs dense_eigenpairs(const SymmetricOperator& op) {
    check_dense_dimension(op.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(op.matrix)};
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

inline int count_below(const EigResult& r, double threshold) {
    int c = 0;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        const double l = r.values[i];
        if (!r.converged[i] && (l <= threshold || std::abs(l - threshold) <= 0.1 * std::abs(threshold)))
            throw InconclusiveError("inconclusive count: unconverged eigenvalue " + std::to_string(l) +
                                    " near threshold " + std::to_string(threshold));
        c += l <= threshold;
    }
    return c;
}

struct KernelEstimate {
    int dim = 0;
    double cut = 0.0;
    bool ill_separated = false;
    std::string warning;
};

inline KernelEstimate kernel_dimension(const EigResult& r, double scale) {
    KernelEstimate k;
    k.cut = kKernelRelTol * scale;
    for (double l : r.values) k.dim += l <= k.cut;
    const auto d = static_cast<std::size_t>(k.dim);
    if (d >= r.values.size()) {
        k.ill_separated = true;
        k.warning = "ill-separated kernel: no eigenvalue computed beyond the kernel";
    } else if (r.values[d] < 100.0 * k.cut) {
        k.ill_separated = true;
        k.warning = "ill-separated kernel: next eigenvalue " + std::to_string(r.values[d]) + " is within 100x of the cut";
    }
    return k;
}

struct GapAnalysis {
    int kernel_dim = 0;
    int low_count = 0;
    double threshold_used = 0.0;
    double gap_ratio = 0.0;
    bool clear = false;  // false: "no clear cluster"
};

// low_count = argmax_i lambda_{i+1} / max(lambda_i, eps * scale); scale defaults to max |lambda|.
inline GapAnalysis detect_gap(const std::vector<double>& values, int k_max, double scale = 0.0) {
    if (values.size() < 2) throw DomainError("detect_gap needs at least two values");
    if (!std::is_sorted(values.begin(), values.end())) throw DomainError("detect_gap needs ascending values");
    if (scale <= 0.0)
        for (double v : values) scale = std::max(scale, std::abs(v));
    const double floor = std::numeric_limits<double>::epsilon() * std::max(scale, std::numeric_limits<double>::min());
    const int last = std::min<int>(k_max, static_cast<int>(values.size()) - 1);
    GapAnalysis g;
    double best = -1.0;
    for (int i = 1; i <= last; ++i) {
        const double lo = std::max(values[static_cast<std::size_t>(i - 1)], floor);
        const double ratio = values[static_cast<std::size_t>(i)] / lo;
        if (ratio > best) {
            best = ratio;
            g.low_count = i;
            g.threshold_used = std::sqrt(lo * std::max(values[static_cast<std::size_t>(i)], floor));
        }
    }
    g.gap_ratio = best;
    g.clear = best >= 10.0;
    const double cut = kKernelRelTol * scale;
    for (int i = 0; i < g.low_count; ++i) g.kernel_dim += values[static_cast<std::size_t>(i)] <= cut;
    return g;
}

}  // namespace witten
