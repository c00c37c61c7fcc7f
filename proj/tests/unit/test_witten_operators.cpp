#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "support.hpp"
#include "witten/eigensolver.hpp"
#include "witten/exterior_algebra.hpp"
#include "witten/tunneling.hpp"
#include "witten/verifier.hpp"
#include "witten/witten_complex.hpp"

using namespace witten;
using witten::test::max_abs;
using witten::test::random_vector;
using std::numbers::pi;

namespace {

// Independent exterior-algebra oracle on ordered monomials: a form is a map from sorted axis
// lists to coefficients.
using Mono = std::vector<int>;
using Form = std::vector<std::pair<Mono, int>>;

Form wedge_oracle(int l, const Form& w) {
    Form out;
    for (const auto& [m, c] : w) {
        if (std::find(m.begin(), m.end(), l) != m.end()) continue;
        Mono r = m;
        r.insert(r.begin(), l);
        int sign = 1;
        for (std::size_t i = 1; i < r.size() && r[i - 1] > r[i]; ++i) {  // bubble l into place
            std::swap(r[i - 1], r[i]);
            sign = -sign;
        }
        out.push_back({r, sign * c});
    }
    return out;
}

Form contract_oracle(int k, const Form& w) {
    Form out;
    for (const auto& [m, c] : w)
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i] == k) {
                Mono r = m;
                r.erase(r.begin() + static_cast<long>(i));
                out.push_back({r, (i % 2 ? -1 : 1) * c});
            }
    return out;
}

int coefficient(const Form& w, const Mono& target) {
    int s = 0;
    for (const auto& [m, c] : w)
        if (m == target) s += c;
    return s;
}

Mono mono(AxisSet J) {
    Mono m;
    for (int i = 0; i < kMaxDim; ++i)
        if (contains(J, i)) m.push_back(i);
    return m;
}

int commutator_oracle(AxisSet J, AxisSet Jp, int l, int k) {
    const Form w = {{mono(J), 1}};
    return coefficient(wedge_oracle(l, contract_oracle(k, w)), mono(Jp)) -
           coefficient(contract_oracle(k, wedge_oracle(l, w)), mono(Jp));
}

std::vector<double> sorted_spectrum(const SymmetricOperator& S) { return dense_spectrum_oracle(S); }

}  // namespace

TEST(DeformCoboundary, ZeroDeformationIsSignedIncidence) {
    const TorusGrid g = test::square(8);
    const DeformedComplex c(g, test::f2(), 0.0);
    for (int q = 0; q < 2; ++q) {
        const SparseMatrix diff = c.deformed_coboundary(q) - coboundary(g, q);
        EXPECT_EQ(max_abs(diff), 0.0);
    }
}

TEST(DeformCoboundary, SquareVanishesToRounding) {
    const DeformedComplex c(test::square(8), test::f1(), 10.0);
    const double scale = std::max(max_abs(c.deformed_coboundary(0)), max_abs(c.deformed_coboundary(1)));
    EXPECT_LE(max_abs(c.deformed_coboundary(1) * c.deformed_coboundary(0)), 1e-10 * scale * scale);
    const DeformedComplex c3(build_grid(3, {1, 1, 1}, {5, 5, 5}), test::f3(), 4.0);
    const double s3 = std::max(max_abs(c3.deformed_coboundary(1)), max_abs(c3.deformed_coboundary(2)));
    EXPECT_LE(max_abs(c3.deformed_coboundary(2) * c3.deformed_coboundary(1)), 1e-10 * s3 * s3);
}

TEST(DeformCoboundary, EntriesWithinLipschitzBound) {
    const TorusGrid g = test::square(16);
    const MorseFunction f = test::f2();
    const double t = 7.0;
    const DeformedComplex c(g, f, t);
    const double K = f.gradient_bound() * std::sqrt(2.0) / 2.0;
    const double lo = std::exp(-t * K * g.max_spacing()), hi = std::exp(t * K * g.max_spacing());
    for (int q = 0; q < 2; ++q) {
        const SparseMatrix& d = c.deformed_coboundary(q);
        for (Eigen::Index r = 0; r < d.outerSize(); ++r)
            for (SparseMatrix::InnerIterator it(d, r); it; ++it) {
                EXPECT_GE(std::abs(it.value()), lo);
                EXPECT_LE(std::abs(it.value()), hi);
            }
    }
}

TEST(DeformCoboundary, RefusesExponentOverflow) {
    EXPECT_THROW(DeformedComplex(test::square(4), test::f2(), 2000.0), ResolutionError);
    EXPECT_THROW(DeformedComplex(test::square(4), test::f2(), -1.0), DomainError);
}

TEST(AdjointOperator, ZeroMapsToZero) {
    const TorusGrid g = test::square(4);
    SparseMatrix z(g.cell_count(1), g.cell_count(0));
    EXPECT_EQ(adjoint_operator(z, mass_matrix(g, 0), mass_matrix(g, 1)).nonZeros(), 0);
}

TEST(AdjointOperator, CircleRowsSumToZero) {
    const TorusGrid g = build_grid(1, {1.0}, {12});
    const SparseMatrix a = adjoint_operator(coboundary(g, 0), mass_matrix(g, 0), mass_matrix(g, 1));
    const Eigen::VectorXd sums = a * Eigen::VectorXd::Ones(g.cell_count(1));
    EXPECT_EQ(sums.cwiseAbs().maxCoeff(), 0.0);
}

TEST(AdjointOperator, PairingIdentity) {
    const DeformedComplex c(test::square(8), test::f2(), 5.0);
    std::mt19937_64 rng(3);
    for (int q = 0; q < 2; ++q) {
        const SparseMatrix adj = c.adjoint(q);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::VectorXd u = random_vector(c.grid().cell_count(q), rng);
            const Eigen::VectorXd v = random_vector(c.grid().cell_count(q + 1), rng);
            const Eigen::VectorXd du = c.deformed_coboundary(q) * u;
            const Eigen::VectorXd av = adj * v;
            const double lhs = inner_product(c.mass(q + 1), du, v);
            const double rhs = inner_product(c.mass(q), u, av);
            const double ref = mass_norm(c.mass(q + 1), du) * mass_norm(c.mass(q + 1), v);
            EXPECT_LE(std::abs(lhs - rhs), 1e-12 * ref);
        }
    }
}

TEST(WittenLaplacian, UndeformedFirstModeConvergesToFourPiSquared) {
    for (int N : {16, 32, 64}) {
        const TorusGrid g = build_grid(1, {1.0}, {N});
        const std::vector<double> v = dense_spectrum_oracle(undeformed_laplacian(g, 0));
        const double h = 1.0 / N;
        EXPECT_NEAR(v[1], 4.0 / (h * h) * std::pow(std::sin(pi * h), 2), 1e-9 * v[1]);
    }
    const TorusGrid g = test::square(64);
    SpectrumRequest r;
    r.k = 3;
    const EigResult e = smallest_eigs(undeformed_laplacian(g, 0), r);
    EXPECT_NEAR(e.values[1], 4 * pi * pi, 0.02 * 4 * pi * pi);
}

TEST(WittenLaplacian, ConstantIsHarmonicAtZeroDeformation) {
    const DeformedComplex c(test::square(8), test::f1(), 0.0);
    const Eigen::VectorXd one = c.to_symmetric(0, Eigen::VectorXd::Ones(64));
    EXPECT_LE((c.laplacian(0).matrix * one).norm(), 1e-12 * one.norm() * c.laplacian(0).scale);
}

TEST(WittenLaplacian, SelfAdjointAndPositiveSemidefinite) {
    const DeformedComplex c(test::square(10), test::f2(), 8.0);
    std::mt19937_64 rng(17);
    for (int q = 0; q <= 2; ++q) {
        const SymmetricOperator& S = c.laplacian(q);
        EXPECT_EQ(max_abs(SparseMatrix(S.matrix - SparseMatrix(S.matrix.transpose()))), 0.0);
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::VectorXd x = random_vector(S.size(), rng);
            EXPECT_GE(x.dot(S.matrix * x) / x.squaredNorm(), -1e-12 * S.scale);
        }
    }
}

TEST(WittenLaplacian, IntertwinesWithDeformedCoboundary) {
    const DeformedComplex c(test::square(12), test::f2(), 6.0);
    std::mt19937_64 rng(23);
    for (int q = 0; q < 2; ++q) {
        const SparseMatrix& D = c.symmetrized_coboundary(q);
        const SparseMatrix& A = c.laplacian(q).matrix;
        const SparseMatrix& B = c.laplacian(q + 1).matrix;
        for (int trial = 0; trial < 50; ++trial) {
            const Eigen::VectorXd x = random_vector(A.rows(), rng);
            const Eigen::VectorXd lhs = B * (D * x), rhs = D * (A * x);
            EXPECT_LE((lhs - rhs).norm(), 1e-10 * std::max(lhs.norm(), rhs.norm()));
        }
    }
}

TEST(WittenLaplacian, KernelDimensionIndependentOfT) {
    DegreeOptions opt;
    const std::vector<int> b2 = {1, 2, 1}, b3 = {1, 3, 3, 1};
    for (const auto& f : {test::f1(), test::f2()}) {
        const TorusGrid g = test::square(16);
        const MorseProfile prof = find_critical_points(f, g);
        opt.hessian_min = hessian_min(prof);
        for (double t : {0.0, 5.0, 20.0, 50.0}) {
            const DeformedComplex c(g, f, t);
            for (int q = 0; q <= 2; ++q) {
                const SweepEntry e = analyze_degree(c, q, b2[static_cast<std::size_t>(q)], prof.m[static_cast<std::size_t>(q)], opt);
                EXPECT_EQ(e.kernel_dim, b2[static_cast<std::size_t>(q)]) << "t=" << t << " q=" << q << " via " << e.kernel_method;
            }
        }
    }
    const TorusGrid g3 = build_grid(3, {1, 1, 1}, {6, 6, 6});
    for (double t : {0.0, 5.0, 20.0}) {
        const DeformedComplex c(g3, test::f3(), t);
        for (int q = 0; q <= 3; ++q) {
            const std::vector<double> v = dense_spectrum_oracle(c.laplacian(q));
            int k = 0;
            for (double x : v) k += x <= kKernelRelTol * c.laplacian(q).scale;
            EXPECT_EQ(k, b3[static_cast<std::size_t>(q)]) << "t=" << t << " q=" << q;
        }
    }
}

// Delta_t^(0) for f and Delta_t^(n) for -f are unitarily equivalent once the dual grid is
// aligned: the n-cells of the primal grid sit at the vertices shifted by h/2.
TEST(WittenLaplacian, TopDegreeDualOfNegatedFunction) {
    const TorusGrid g = test::square(8);
    const double h = g.spacing(0);
    const MorseFunction f = test::f2();
    const DeformedComplex a(g, f, 3.0);
    const DeformedComplex b(g, f.negated().translated({h / 2, h / 2, 0.0}), 3.0);
    const std::vector<double> va = sorted_spectrum(a.laplacian(0)), vb = sorted_spectrum(b.laplacian(2));
    ASSERT_EQ(va.size(), vb.size());
    for (std::size_t i = 0; i < va.size(); ++i) EXPECT_NEAR(va[i], vb[i], 1e-9 * a.laplacian(0).scale);
}

TEST(HessianCoupling, DiagonalCoefficients) {
    EXPECT_EQ(hessian_coupling_coefficient(0b1, 0b1, 0, 0), 1);
    EXPECT_EQ(hessian_coupling_coefficient(0b1, 0b1, 1, 1), -1);
}

TEST(HessianCoupling, MatchesBruteForceExpansion) {
    // J = {1,2}, J' = {1,3}, l = 3, k = 2 in 1-based axes
    EXPECT_EQ(hessian_coupling_coefficient(0b011, 0b101, 2, 1), commutator_oracle(0b011, 0b101, 2, 1));
    for (int n = 1; n <= 3; ++n)
        for (int q = 0; q <= n; ++q)
            for (AxisSet J : axis_subsets(n, q))
                for (AxisSet Jp : axis_subsets(n, q))
                    for (int l = 0; l < n; ++l)
                        for (int k = 0; k < n; ++k)
                            EXPECT_EQ(hessian_coupling_coefficient(J, Jp, l, k), commutator_oracle(J, Jp, l, k))
                                << "J=" << format_axes(J) << " J'=" << format_axes(Jp) << " l=" << l << " k=" << k;
}

TEST(HessianCoupling, AnticommutatorIsSquaredNorm) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> nd;
    for (int n = 1; n <= 3; ++n)
        for (int q = 0; q <= n; ++q)
            for (int trial = 0; trial < 10; ++trial) {
                std::vector<double> v(static_cast<std::size_t>(n));
                double n2 = 0.0;
                for (auto& x : v) {
                    x = nd(rng);
                    n2 += x * x;
                }
                const Eigen::MatrixXd B = anticommutator_block(v, q);
                const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(B.rows(), B.cols());
                EXPECT_LE((B - n2 * I).cwiseAbs().maxCoeff(), 1e-14 * n2);
            }
}

TEST(Bochner, ZeroDeformationGivesUndeformedLaplacian) {
    for (const MorseFunction& f : {test::f1(), test::f2()}) {
        const TorusGrid g = test::square(6);
        const DeformedComplex c(g, f, 0.0);
        for (int q = 0; q <= 2; ++q) {
            const SparseMatrix diff = bochner_laplacian(c, q).matrix - undeformed_laplacian(g, q).matrix;
            EXPECT_LE(max_abs(diff), 1e-12 * undeformed_laplacian(g, q).scale);
        }
    }
    const TorusGrid g3 = build_grid(3, {1, 1, 1}, {4, 4, 4});
    const DeformedComplex c3(g3, test::f3(), 0.0);
    for (int q = 0; q <= 3; ++q)
        EXPECT_LE(max_abs(bochner_laplacian(c3, q).matrix - undeformed_laplacian(g3, q).matrix), 1e-12 * undeformed_laplacian(g3, q).scale);
}

TEST(Bochner, AgreesWithFactoredAssemblyUnderRefinement) {
    const MorseFunction f = test::f2();
    auto defect = [&](int N) {
        const TorusGrid g = test::square(N);
        const DeformedComplex c(g, f, 20.0);
        const Cochain u = sample_form(g, 1, {[](const Point& x) { return std::sin(2 * pi * x[0]) * std::cos(2 * pi * x[1]); },
                                             [](const Point& x) { return std::cos(4 * pi * x[0]) + 0.5 * std::sin(2 * pi * x[1]); }});
        const Eigen::VectorXd y = c.to_symmetric(1, u.values);
        const Eigen::VectorXd diff = c.laplacian(1).matrix * y - bochner_laplacian(c, 1).matrix * y;
        return diff.norm() / y.norm();
    };
    EXPECT_GE(defect(32) / defect(64), 2.0);
}

TEST(Bochner, FirstExcitedLevelWithinFivePercent) {
    const TorusGrid g = test::square(64);
    const DeformedComplex c(g, test::f1(), 20.0);
    SpectrumRequest r;
    r.k = 3;
    const EigResult a = smallest_eigs(c.laplacian(0), r);
    const EigResult b = smallest_eigs(bochner_laplacian(c, 0), r);
    EXPECT_NEAR(b.values[1], a.values[1], 0.05 * a.values[1]);
}
