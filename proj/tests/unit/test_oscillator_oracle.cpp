#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>

#include "support.hpp"
#include "witten/oscillator.hpp"

using namespace witten;

namespace {

// Composite trapezoid on [-a, a]; spectrally accurate for Gaussian-decaying integrands.
template <class F>
double trapezoid(F f, double a = 16.0, int m = 4000) {
    const double h = 2.0 * a / m;
    double s = 0.0;
    for (int i = 0; i <= m; ++i) s += (i == 0 || i == m ? 0.5 : 1.0) * f(-a + i * h);
    return s * h;
}

// Brute-force level multiplicities: enumerate (N, J) with N_j <= 12.
std::map<int, int> brute_levels(const ModelOperatorSpec& s) {
    std::map<int, int> out;
    const int cap = 12;
    std::array<int, 3> N{};
    const int nn = s.n;
    const int total = static_cast<int>(std::pow(cap + 1, nn));
    for (int code = 0; code < total; ++code) {
        int c = code;
        for (int j = 0; j < nn; ++j) {
            N[static_cast<std::size_t>(j)] = c % (cap + 1);
            c /= cap + 1;
        }
        for (unsigned J = 0; J < (1u << nn); ++J) {
            if (std::popcount(J) != s.q) continue;
            int u = 0;
            for (int j = 0; j < nn; ++j) {
                const int sj = j < s.r ? -1 : 1;
                const int ej = (J >> j) & 1u ? 1 : -1;
                u += 2 * N[static_cast<std::size_t>(j)] + 1 + sj * ej;
            }
            ++out[u];
        }
    }
    return out;
}

}  // namespace

TEST(Hermite, LowDegreeValues) {
    EXPECT_DOUBLE_EQ(hermite_polynomial(0, 3.7), 1.0);
    EXPECT_DOUBLE_EQ(hermite_polynomial(1, 5.0), 10.0);
    EXPECT_DOUBLE_EQ(hermite_polynomial(2, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(hermite_polynomial(3, 2.0), 8.0 * 8.0 - 12.0 * 2.0);
    EXPECT_THROW(hermite_polynomial(-1, 0.0), DomainError);
}

TEST(Hermite, DerivativeIdentity) {
    const HermiteSequence h = hermite_sequence(15);
    for (int n = 1; n <= 15; ++n) {
        const Polynomial d = polynomial_derivative(h[n]);
        for (double x : {-1.3, 0.0, 0.4, 2.2})
            EXPECT_NEAR(polynomial_eval(d, x), 2.0 * n * hermite_polynomial(n - 1, x),
                        1e-10 * std::max(1.0, std::abs(polynomial_eval(d, x))));
        for (double x : {-0.7, 1.9}) EXPECT_NEAR(polynomial_eval(h[n], x), hermite_polynomial(n, x), 1e-9 * std::abs(hermite_polynomial(n, x)) + 1e-12);
    }
}

TEST(Hermite, FunctionValuesAndParity) {
    EXPECT_NEAR(hermite_function(0, 0.0), std::pow(std::numbers::pi, -0.25), 1e-15);
    for (int n = 0; n <= 12; ++n)
        for (double x : {0.3, 1.1, 2.5}) {
            EXPECT_NEAR(hermite_function(n, -x), (n % 2 ? -1.0 : 1.0) * hermite_function(n, x), 1e-14);
            const double direct = hermite_normalization(n) * hermite_polynomial(n, x) * std::exp(-0.5 * x * x);
            EXPECT_NEAR(hermite_function(n, x), direct, 1e-12);
        }
}

TEST(Hermite, OscillatorActionIsEigenrelation) {
    const HermiteSequence h = hermite_sequence(10);
    EXPECT_NEAR(oscillator_action(h, 1, 0.7), 3.0 * hermite_function(1, 0.7), 1e-13);
    for (int n = 0; n <= 10; ++n)
        for (double x : {-1.5, 0.2, 0.9})
            EXPECT_NEAR(oscillator_action(h, n, x), (2.0 * n + 1.0) * hermite_function(n, x), 1e-10);
}

TEST(Hermite, WeightedGram) {
    const double rp = std::sqrt(std::numbers::pi);
    EXPECT_NEAR(hermite_gram(0, 0), rp, 1e-14);
    EXPECT_NEAR(hermite_gram(1, 1), 2.0 * rp, 1e-13);
    EXPECT_NEAR(hermite_gram(2, 5), 0.0, 1e-12);
    for (int n = 0; n <= 20; ++n)
        for (int m = 0; m <= 20; ++m) {
            const double g = hermite_gram(n, m) * hermite_normalization(n) * hermite_normalization(m);
            EXPECT_NEAR(g, n == m ? 1.0 : 0.0, 1e-10) << n << "," << m;
        }
}

TEST(Hermite, OrthonormalByIndependentQuadrature) {
    for (int n = 0; n <= 20; ++n)
        for (int m = n; m <= 20; ++m) {
            const double g = trapezoid([&](double x) { return hermite_function(n, x) * hermite_function(m, x); });
            EXPECT_NEAR(g, n == m ? 1.0 : 0.0, 1e-10) << n << "," << m;
        }
}

TEST(Hermite, ShiftedGaussianExpandsInBasis) {
    auto g = [](double x) { return std::exp(-(x - 0.3) * (x - 0.3)); };
    const double norm2 = trapezoid([&](double x) { return g(x) * g(x); });
    double captured = 0.0;
    for (int k = 0; k <= 40; ++k) {
        const double c = trapezoid([&](double x) { return g(x) * hermite_function(k, x); });
        captured += c * c;
    }
    EXPECT_LE(norm2 - captured, 1e-8);
    EXPECT_GE(norm2 - captured, -1e-10);
}

TEST(GaussHermite, IntegratesMoments) {
    const GaussHermiteRule r = gauss_hermite(8);
    double m0 = 0, m2 = 0, m4 = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        const double x = r.nodes[i];
        m0 += r.weights[i];
        m2 += r.weights[i] * x * x;
        m4 += r.weights[i] * x * x * x * x;
    }
    const double rp = std::sqrt(std::numbers::pi);
    EXPECT_NEAR(m0, rp, 1e-13);
    EXPECT_NEAR(m2, rp / 2.0, 1e-13);
    EXPECT_NEAR(m4, 3.0 * rp / 4.0, 1e-13);
    EXPECT_THROW(gauss_hermite(0), DomainError);
}

TEST(Oscillator, ClosedFormEigenvalues) {
    const std::vector<double> v = oscillator_eigenvalues(4);
    EXPECT_EQ(v, (std::vector<double>{1.0, 3.0, 5.0, 7.0}));
    EXPECT_THROW(oscillator_eigenvalues(0), DomainError);
}

TEST(Oscillator, SincDiscretizationMatchesClosedForm) {
    const Eigen::MatrixXd A = discretize_oscillator(12.0, 120, Stencil::sinc);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues();
    for (int i = 0; i < 10; ++i) EXPECT_NEAR(ev[i], 2.0 * i + 1.0, 1e-6) << i;
}

TEST(Oscillator, SecondOrderStencilIsOnlyAlgebraic) {
    // same grid: the three-point stencil errs at O(h^2), orders above the sinc stencil
    const Eigen::MatrixXd A = discretize_oscillator(12.0, 120, Stencil::second_order);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues();
    EXPECT_GT(std::abs(ev[1] - 3.0), 1e-4);
    EXPECT_LT(std::abs(ev[1] - 3.0), 0.1);
    EXPECT_EQ(parse_stencil("sinc"), Stencil::sinc);
    EXPECT_THROW(parse_stencil("fourth"), ConfigError);
}

TEST(ModelOperator, ListedSpectra) {
    const ModelSpectrum a = model_spectrum({1, 1, 1, 1.0}, 1);
    EXPECT_EQ(a.entries.at(0).eigenvalue, 0.0);
    const ModelSpectrum b = model_spectrum({1, 1, 0, 1.0}, 1);
    EXPECT_EQ(b.entries.at(0).eigenvalue, 2.0);
    const ModelSpectrum c = model_spectrum({2, 1, 1, 3.0}, 3);
    ASSERT_EQ(c.entries.size(), 3u);
    EXPECT_DOUBLE_EQ(c.entries[0].eigenvalue, 0.0);
    EXPECT_DOUBLE_EQ(c.entries[1].eigenvalue, 6.0);
    EXPECT_DOUBLE_EQ(c.entries[2].eigenvalue, 12.0);
    EXPECT_EQ(c.entries[0].multiplicity, 1);
    EXPECT_EQ(format_witness(c.entries[0].witness, 2), "N=(0,0) J=" + format_axes(c.entries[0].witness.J));
}

TEST(ModelOperator, MultiplicitiesMatchBruteForce) {
    for (int n = 1; n <= 3; ++n)
        for (int r = 0; r <= n; ++r)
            for (int q = 0; q <= n; ++q) {
                const ModelOperatorSpec s{n, r, q, 1.0};
                const std::map<int, int> brute = brute_levels(s);
                const ModelSpectrum m = model_spectrum(s, 6);
                auto it = brute.begin();
                for (const ModelLevel& lvl : m.entries) {
                    ASSERT_NE(it, brute.end());
                    EXPECT_EQ(lvl.units, it->first) << n << r << q;
                    EXPECT_EQ(lvl.multiplicity, it->second) << n << r << q << " units " << lvl.units;
                    ++it;
                }
            }
}

TEST(ModelOperator, LinearInT) {
    const ModelSpectrum a = model_spectrum({3, 2, 1, 1.0}, 5);
    const ModelSpectrum b = model_spectrum({3, 2, 1, 7.5}, 5);
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_DOUBLE_EQ(b.entries[i].eigenvalue, 7.5 * a.entries[i].eigenvalue);
        EXPECT_EQ(b.entries[i].multiplicity, a.entries[i].multiplicity);
    }
}

TEST(ModelOperator, KernelOnlyInMatchingDegree) {
    for (int n = 1; n <= 3; ++n)
        for (int r = 0; r <= n; ++r)
            for (int q = 0; q <= n; ++q) {
                const ModelKernel k = model_kernel({n, r, q, 2.0});
                EXPECT_EQ(k.dimension, r == q ? 1 : 0);
                const ModelSpectrum s = model_spectrum({n, r, q, 2.0}, 1);
                EXPECT_EQ(s.entries[0].eigenvalue == 0.0, r == q);
            }
    EXPECT_EQ(model_kernel({2, 1, 1, 1.0}).generator, "exp(-t|x|^2/2) dx1");
    EXPECT_THROW(model_kernel({2, 3, 1, 1.0}), DomainError);
    EXPECT_THROW(model_spectrum({2, 1, 1, 0.0}, 1), DomainError);
}

TEST(ModelOperator, GroundStateNormalizedAndAnnihilated) {
    const ModelOperatorSpec s{1, 0, 0, 2.5};
    const double n2 = trapezoid([&](double x) {
        const double g = model_ground_state(s, {x, 0, 0});
        return g * g;
    });
    EXPECT_NEAR(n2, 1.0, 1e-12);
    // -g'' + t^2 x^2 g - t g = 0 by central differences
    const double h = 1e-3;
    for (double x : {-0.6, 0.1, 0.8}) {
        const double gm = model_ground_state(s, {x - h, 0, 0}), g0 = model_ground_state(s, {x, 0, 0}),
                     gp = model_ground_state(s, {x + h, 0, 0});
        const double r = -(gp - 2 * g0 + gm) / (h * h) + s.t * s.t * x * x * g0 - s.t * g0;
        EXPECT_NEAR(r, 0.0, 1e-4);
    }
}

TEST(ModelOperator, DiscretizationMatchesClosedForm) {
    for (int n = 1; n <= 2; ++n)
        for (int r = 0; r <= n; ++r)
            for (int q = 0; q <= n; ++q)
                for (double t : {1.0, 4.0}) {
                    const ModelOperatorSpec s{n, r, q, t};
                    const int points = n == 1 ? 60 : 30;
                    const Eigen::MatrixXd A = discretize_model(s, 8.0 / std::sqrt(t), points, Stencil::sinc);
                    ASSERT_LT((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-12);
                    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues();
                    const ModelSpectrum m = model_spectrum(s, 3);
                    Eigen::Index i = 0;
                    for (const ModelLevel& lvl : m.entries)
                        for (int k = 0; k < lvl.multiplicity; ++k, ++i)
                            EXPECT_NEAR(ev[i], lvl.eigenvalue, 1e-4) << "n=" << n << " r=" << r << " q=" << q << " t=" << t;
                }
}

TEST(ModelOperator, DenseCap) {
    EXPECT_THROW(discretize_model({3, 0, 1, 1.0}, 5.0, 12), DomainError);
    EXPECT_THROW(discretize_oscillator(5.0, 5000), DomainError);
}

TEST(Cutoff, PlateauAndSupport) {
    EXPECT_EQ(kappa(0.0), 1.0);
    EXPECT_EQ(kappa(-1.0), 1.0);
    EXPECT_EQ(kappa(2.0), 0.0);
    EXPECT_EQ(kappa(-3.0), 0.0);
    EXPECT_NEAR(kappa(1.5), 0.5, 1e-15);
    double prev = 1.0;
    for (double y = 1.0; y <= 2.0; y += 0.01) {
        EXPECT_LE(kappa(y), prev + 1e-15);
        prev = kappa(y);
    }
    EXPECT_EQ(kappa_eps(0.75, 0.5), kappa(1.5));
}

TEST(TrialForm, LocalizedGaussianAtMinimum) {
    const MorseFunction f = test::f1();
    const TorusGrid g = test::square(96);
    const MorseProfile prof = find_critical_points(f, g);
    const CriticalPoint* min = nullptr;
    for (const auto& p : prof.points)
        if (p.index == 0) min = &p;
    ASSERT_NE(min, nullptr);
    EXPECT_EQ(trial_chart(f), MorseChart::separable);
    const double t = 50.0, eps = 0.2;
    const Cochain v = trial_form({*min, t, eps}, g, f);
    // support inside the 2*eps cube around the point
    for (std::int64_t i = 0; i < g.cell_count(0); ++i) {
        const Point x = g.midpoint(g.cell_at(0, i));
        const double dx = detail::periodic_offset(x[0], min->coords[0], 1.0);
        const double dy = detail::periodic_offset(x[1], min->coords[1], 1.0);
        if (std::max(std::abs(dx), std::abs(dy)) > 2 * eps) EXPECT_EQ(v.values[i], 0.0);
    }
    // squared mass norm against the Gaussian integral with the Hessian eigenvalues
    const double l1 = min->hessian_eigenvalues[0], l2 = min->hessian_eigenvalues[1];
    const double expected = std::numbers::pi / (t * std::sqrt(l1 * l2));
    const double got = inner_product(mass_matrix(g, 0), v.values, v.values);
    EXPECT_NEAR(got / expected, 1.0, 0.03);
}

TEST(TrialForm, CutoffMustFit) {
    const MorseFunction f = test::f1();
    const TorusGrid g = test::square(16);
    const MorseProfile prof = find_critical_points(f, g);
    EXPECT_THROW(trial_form({prof.points[0], 10.0, 0.3}, g, f), DomainError);
}
