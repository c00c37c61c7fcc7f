#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "support.hpp"
#include "witten/eigensolver.hpp"
#include "witten/witten_complex.hpp"

using namespace witten;
using std::numbers::pi;

namespace {

SymmetricOperator diagonal_operator(int n) {
    SparseMatrix A(n, n);
    for (int i = 0; i < n; ++i) A.insert(i, i) = i;
    return make_symmetric_operator(0, A);
}

EigResult result_of(std::vector<double> v, std::vector<bool> conv = {}) {
    EigResult r;
    r.values = std::move(v);
    r.residuals.assign(r.values.size(), 0.0);
    r.converged = conv.empty() ? std::vector<bool>(r.values.size(), true) : conv;
    return r;
}

// Lanczos against the dense oracle: relative agreement with an absolute floor at rounding level
// of the operator scale.
void expect_matches_dense(const SymmetricOperator& S, int count, SpectralTransform tr = SpectralTransform::automatic) {
    const std::vector<double> dense = dense_spectrum_oracle(S);
    SpectrumRequest r;
    r.q = S.q;
    r.k = static_cast<int>(std::min<Eigen::Index>(count, S.size() - 1));
    r.transform = tr;
    const EigResult e = smallest_eigs(S, r);
    ASSERT_TRUE(e.all_converged());
    for (int i = 0; i < r.k; ++i) {
        const double d = dense[static_cast<std::size_t>(i)];
        EXPECT_NEAR(e.values[static_cast<std::size_t>(i)], d, 1e-8 * std::abs(d) + 100 * std::numeric_limits<double>::epsilon() * S.scale)
            << "i=" << i << " n=" << S.size();
    }
}

}  // namespace

TEST(SmallestEigs, DiagonalOperator) {
    SpectrumRequest r;
    r.k = 3;
    const EigResult e = smallest_eigs(diagonal_operator(50), r);
    ASSERT_EQ(e.values.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(e.values[static_cast<std::size_t>(i)], i, 1e-9);
}

TEST(SmallestEigs, CircleLaplacianClosedForm) {
    const TorusGrid g = build_grid(1, {1.0}, {64});
    SpectrumRequest r;
    r.k = 3;
    const EigResult e = smallest_eigs(undeformed_laplacian(g, 0), r);
    const double h = 1.0 / 64, lam = 4.0 / (h * h) * std::pow(std::sin(pi * h), 2);
    EXPECT_NEAR(e.values[0], 0.0, 1e-9);
    EXPECT_NEAR(e.values[1], lam, 1e-8 * lam);
    EXPECT_NEAR(e.values[2], lam, 1e-8 * lam);
    EXPECT_NEAR(lam, 39.44, 0.01);
}

TEST(SmallestEigs, MatchesDenseOracleOnDeformedSquare) {
    const DeformedComplex c(test::square(8), test::f1(), 5.0);
    expect_matches_dense(c.laplacian(1), 8);
}

TEST(SmallestEigs, LanczosAgreesWithDenseAcrossSuiteOperators) {
    std::vector<SymmetricOperator> ops;
    ops.push_back(undeformed_laplacian(build_grid(1, {1.0}, {40}), 0));
    for (double t : {0.0, 3.0, 12.0}) {
        const DeformedComplex c(test::square(10), test::f2(), t);
        for (int q = 0; q <= 2; ++q) ops.push_back(c.laplacian(q));
    }
    const DeformedComplex c3(build_grid(3, {1, 1, 1}, {5, 5, 5}), test::f3(), 4.0);
    for (int q = 0; q <= 3; ++q) ops.push_back(c3.laplacian(q));
    for (const auto& S : ops) {
        expect_matches_dense(S, 10, SpectralTransform::shift_invert);
        expect_matches_dense(S, 10, SpectralTransform::fold);
    }
}

TEST(SmallestEigs, ResidualsHoldWhenRecomputed) {
    const DeformedComplex c(test::square(24), test::f2(), 10.0);
    for (int q = 0; q <= 2; ++q) {
        SpectrumRequest r;
        r.q = q;
        r.k = 8;
        r.want_vectors = true;
        const EigResult e = smallest_eigs(c.laplacian(q), r);
        for (std::size_t i = 0; i < e.values.size(); ++i) {
            if (!e.converged[i]) continue;
            const Eigen::VectorXd v = e.vectors.col(static_cast<Eigen::Index>(i));
            const double res = (c.laplacian(q).matrix * v - e.values[i] * v).norm() / v.norm();
            EXPECT_LE(res, r.tol * c.laplacian(q).scale);
        }
    }
}

TEST(SmallestEigs, DeterministicForFixedSeed) {
    const DeformedComplex c(test::square(16), test::f2(), 8.0);
    SpectrumRequest r;
    r.q = 1;
    r.k = 7;
    const EigResult a = smallest_eigs(c.laplacian(1), r);
    const EigResult b = smallest_eigs(c.laplacian(1), r);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.seed, 42u);
}

TEST(SmallestEigs, RejectsBadRequests) {
    SpectrumRequest r;
    r.k = 10;
    EXPECT_THROW(smallest_eigs(diagonal_operator(10), r), DomainError);
    r.k = 0;
    EXPECT_THROW(smallest_eigs(diagonal_operator(10), r), DomainError);
}

TEST(DenseOracle, TwoByTwo) {
    Eigen::MatrixXd A(2, 2);
    A << 2, 1, 1, 2;
    const std::vector<double> v = dense_spectrum_oracle(A);
    EXPECT_NEAR(v[0], 1.0, 1e-15);
    EXPECT_NEAR(v[1], 3.0, 1e-15);
}

TEST(DenseOracle, CircleClosedFormPairs) {
    const TorusGrid g = build_grid(1, {1.0}, {8});
    const std::vector<double> v = dense_spectrum_oracle(undeformed_laplacian(g, 0));
    std::vector<double> expect;
    for (int k = 0; k < 8; ++k) expect.push_back(4.0 * 64 * std::pow(std::sin(pi * k / 8), 2));
    std::sort(expect.begin(), expect.end());
    ASSERT_EQ(v.size(), 8u);
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(v[static_cast<std::size_t>(i)], expect[static_cast<std::size_t>(i)], 1e-11);
}

TEST(DenseOracle, OneFormKernelOnSquare) {
    const TorusGrid g = test::square(8);
    const SymmetricOperator S = undeformed_laplacian(g, 1);
    int k = 0;
    for (double v : dense_spectrum_oracle(S)) k += v <= kKernelRelTol * S.scale;
    EXPECT_EQ(k, 2);
}

TEST(DenseOracle, RefusesAboveCap) {
    EXPECT_THROW(dense_spectrum_oracle(Eigen::MatrixXd::Zero(kDenseOracleCap + 1, 1)), DomainError);
}

TEST(CountBelow, InclusiveThreshold) {
    EXPECT_EQ(count_below(result_of({0, 0, 3.1}), 1.0), 2);
    EXPECT_EQ(count_below(result_of({0, 0, 0}), 0.0), 3);
}

TEST(CountBelow, ExtremeThresholds) {
    const EigResult r = result_of({0.5, 2, 7, 9});
    EXPECT_EQ(count_below(r, std::numeric_limits<double>::max()), 4);
    EXPECT_EQ(count_below(r, -1.0), 0);
}

TEST(CountBelow, UnconvergedNearThresholdIsInconclusive) {
    EXPECT_THROW(count_below(result_of({0.1, 1.05, 4}, {true, false, true}), 1.0), InconclusiveError);
}

TEST(KernelDimension, PresetsOnSquare) {
    const std::vector<int> b = {1, 2, 1};
    for (const auto& f : {test::f1(), test::f2()}) {
        const DeformedComplex c(test::square(12), f, 1.5);
        for (int q = 0; q <= 2; ++q) {
            SpectrumRequest r;
            r.q = q;
            r.k = 8;
            const EigResult e = smallest_eigs(c.laplacian(q), r);
            EXPECT_EQ(kernel_dimension(e, e.scale).dim, b[static_cast<std::size_t>(q)]) << "q=" << q;
        }
    }
}

TEST(KernelDimension, FlagsIllSeparatedKernel) {
    const EigResult r = result_of({0.0, 1e-9, 1.0});
    const KernelEstimate k = kernel_dimension(r, 1.0);
    EXPECT_EQ(k.dim, 1);
    EXPECT_TRUE(k.ill_separated);
}

TEST(DetectGap, ListedValues) {
    const GapAnalysis g = detect_gap({1e-14, 1e-13, 8e-7, 41.2, 44.0}, 4);
    EXPECT_EQ(g.low_count, 3);
    EXPECT_NEAR(g.gap_ratio, 41.2 / 8e-7, 1e-6 * g.gap_ratio);
    EXPECT_TRUE(g.clear);
    EXPECT_EQ(detect_gap({0, 39, 39, 41}, 3).low_count, 1);
}

TEST(DetectGap, Preconditions) {
    EXPECT_THROW(detect_gap({1.0}, 1), DomainError);
    EXPECT_THROW(detect_gap({2.0, 1.0}, 1), DomainError);
    EXPECT_FALSE(detect_gap({1.0, 1.5, 2.0}, 2).clear);
}
