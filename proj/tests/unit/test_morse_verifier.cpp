#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "witten/verifier.hpp"

using namespace witten;

namespace {

RunConfig small_config(const std::string& freq, int N, const std::string& t_list, const std::string& extra = "") {
    return parse_config("[manifold]\nn = 2\nresolutions = [" + std::to_string(N) + ", " + std::to_string(N) +
                        "]\n[morse]\npreset = \"cos_sum\"\nfrequencies = " + freq + "\n[deformation]\nt_list = " + t_list +
                        "\n" + extra);
}

}  // namespace

TEST(Betti, FlatTori) {
    EXPECT_EQ(betti_numbers(build_grid(1, {1.0}, {8})), (std::vector<int>{1, 1}));
    EXPECT_EQ(betti_numbers(test::square(8)), (std::vector<int>{1, 2, 1}));
    EXPECT_EQ(betti_numbers(build_grid(2, {1.0, 2.5}, {6, 10})), (std::vector<int>{1, 2, 1}));
    const BettiReport r = betti_report(build_grid(3, {1, 1, 1}, {6, 6, 6}));
    EXPECT_TRUE(r.agree());
    EXPECT_EQ(r.spectral, (std::vector<int>{1, 3, 3, 1}));
    EXPECT_EQ(format_ints(r.rank), "(1,3,3,1)");
}

TEST(Betti, SpectralRouteIndependentOfSeed) {
    const TorusGrid g = test::square(40);  // 1-forms above the dense limit: Lanczos path
    EXPECT_EQ(betti_report(g, 7).spectral, betti_report(g, 12345).spectral);
    EXPECT_EQ(spectral_kernel_dimension(undeformed_laplacian(g, 1)), 2);
}

TEST(Inequalities, ListedCases) {
    const InequalityReport a = check_inequalities({1, 2, 1}, {2, 4, 2});
    EXPECT_TRUE(a.inequalities_ok());
    EXPECT_EQ(a.weak_slack, (std::vector<int>{1, 2, 1}));
    EXPECT_EQ(a.strong_lhs, (std::vector<int>{1, 1, 0}));
    EXPECT_EQ(a.strong_rhs, (std::vector<int>{2, 2, 0}));
    EXPECT_EQ(a.euler_characteristic, 0);

    const InequalityReport b = check_inequalities({2, 0}, {1, 0});
    EXPECT_FALSE(b.weak_ok[0]);
    EXPECT_FALSE(b.inequalities_ok());

    const InequalityReport c = check_inequalities({1, 1}, {1, 3});
    EXPECT_TRUE(c.weak_ok[0] && c.weak_ok[1]);
    EXPECT_TRUE(c.strong_ok[1]);
    EXPECT_FALSE(c.euler_equal);

    EXPECT_TRUE(check_inequalities({1, 3, 3, 1}, {1, 3, 3, 1}).inequalities_ok());
    EXPECT_THROW(check_inequalities({1, 2}, {1, 2, 1}), DomainError);
}

TEST(Inequalities, StrongImpliesWeakOnRandomData) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> d(0, 5);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<int> b(4), m(4);
        for (int i = 0; i < 4; ++i) {
            b[static_cast<std::size_t>(i)] = d(rng);
            m[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)] + d(rng) - 1;
        }
        const InequalityReport r = check_inequalities(b, m);
        bool strong = true;
        for (bool s : r.strong_ok) strong = strong && s;
        if (!strong) continue;
        // adjacent strong inequalities sum to the weak one
        for (std::size_t q = 1; q < 4; ++q) EXPECT_LE(r.strong_lhs[q] + r.strong_lhs[q - 1], r.strong_rhs[q] + r.strong_rhs[q - 1]);
        EXPECT_TRUE(r.weak_ok[0]);
    }
}

TEST(LowLying, CountsMatchMorseNumbers) {
    const TorusGrid g1 = test::square(32);
    const DeformedComplex c1(g1, test::f1(), 30.0);
    const MorseProfile p1 = find_critical_points(test::f1(), g1);
    DegreeOptions o1;
    o1.hessian_min = hessian_min(p1);
    const SweepEntry e = analyze_degree(c1, 1, 2, 2, o1);
    EXPECT_EQ(e.low_count, 2);
    EXPECT_EQ(e.kernel_dim, 2);
    EXPECT_EQ(low_lying_counts(e, CountMode::auto_gap), 2);

    const TorusGrid g2 = test::square(16);
    const DeformedComplex c2(g2, test::f2(), 20.0);
    DegreeOptions o2;
    o2.hessian_min = hessian_min(find_critical_points(test::f2(), g2));
    const std::vector<int> b = {1, 2, 1}, m = {2, 4, 2};
    for (int q = 0; q <= 2; ++q) {
        const SweepEntry s = analyze_degree(c2, q, b[static_cast<std::size_t>(q)], m[static_cast<std::size_t>(q)], o2);
        EXPECT_EQ(s.low_count, m[static_cast<std::size_t>(q)]) << "q=" << q;
        EXPECT_EQ(s.kernel_dim, b[static_cast<std::size_t>(q)]) << "q=" << q;
        EXPECT_EQ(s.kernel_method, "structured");
        EXPECT_TRUE(s.routes_agree);
        EXPECT_LE(s.kernel_dim, s.low_count);
    }
}

TEST(LowLying, InconclusiveFixedCountThrows) {
    SweepEntry e;
    e.fixed_count = -1;
    e.fixed_note = "eigenvalue near threshold";
    EXPECT_THROW(low_lying_counts(e, CountMode::fixed_threshold), InconclusiveError);
    e.fixed_count = 3;
    EXPECT_EQ(low_lying_counts(e, CountMode::fixed_threshold), 3);
}

TEST(Exactness, SmallSquareAtModerateT) {
    const DeformedComplex c(test::square(16), test::f2(), 20.0);
    const ExactnessReport r = exactness_check(c);
    EXPECT_TRUE(r.passed());
    ASSERT_EQ(r.degrees.size(), 3u);
    EXPECT_EQ(r.degrees[0].window_dim, 2);
    EXPECT_EQ(r.degrees[1].window_dim, 4);
    EXPECT_EQ(r.degrees[2].window_dim, 2);
    EXPECT_EQ(r.degrees[0].harmonic, 1);
    EXPECT_EQ(r.degrees[1].harmonic, 2);
    EXPECT_EQ(r.degrees[0].rank, 1);
    EXPECT_EQ(r.degrees[1].rank, 1);
    EXPECT_EQ(r.alternating, (std::vector<int>{1, 1, 0}));
}

TEST(Exactness, WindowMustSitInAGap) {
    const DeformedComplex c(test::square(12), test::f2(), 20.0);
    const std::vector<double> v = dense_spectrum_oracle(c.laplacian(0));
    EXPECT_THROW(exactness_check(c, v[10]), DomainError);
    EXPECT_THROW(exactness_check(c, -1.0), DomainError);
}

TEST(Fits, SlopesOfExactData) {
    const std::vector<double> t = {1, 2, 3, 4};
    EXPECT_NEAR(fit_slope(t, {3, 5, 7, 9}), 2.0, 1e-14);
    std::vector<double> y;
    for (double x : t) y.push_back(5.0 * std::exp(-0.7 * x));
    EXPECT_NEAR(fit_log_slope(t, y), -0.7, 1e-12);
}

TEST(GapGrowth, LinearGrowthAndPreconditions) {
    const GapGrowth g = gap_growth_check(1, {20, 30, 40, 50}, {1559, 2348, 3137, 3925});
    EXPECT_TRUE(g.passed());
    EXPECT_NEAR(g.slope, 78.86, 0.1);
    EXPECT_FALSE(gap_growth_check(0, {1, 2, 3}, {5, 4, 3}).passed());
    EXPECT_THROW(gap_growth_check(0, {1, 2}, {1, 2}), DomainError);
    EXPECT_THROW(gap_growth_check(0, {1, 2, 3}, {1, 2}), DomainError);
}

TEST(TWindow, BoundsFromGridAndHessian) {
    const TorusGrid g = test::square(96);
    const MorseProfile p = find_critical_points(test::f2(), g);
    const TWindow w = t_window(g, test::f2(), p);
    EXPECT_NEAR(w.t_min, 10.0 / std::sqrt(hessian_min(p)), 1e-12);
    EXPECT_LE(w.t_max, w.t_overflow);
    EXPECT_LE(w.t_max, w.t_resolution);
    EXPECT_GT(w.t_max, w.t_min);
    EXPECT_FALSE(w.contains(20.0));
    EXPECT_NEAR(hessian_min(p), 4.0 * std::numbers::pi * std::numbers::pi, 1e-6);
}

TEST(DenseCrossCheck, LanczosMatchesDenseOnCoarseGrid) {
    const TorusGrid g = test::square(12);
    const DeformedComplex c(g, test::f2(), 20.0);
    DegreeOptions o;
    for (int q = 0; q <= 2; ++q) {
        const DenseCrossCheck d = dense_cross_check(c, q, q == 1 ? 4 : 2, o);
        EXPECT_TRUE(d.passed()) << "q=" << q << " dev " << d.max_deviation << " dense " << d.dense_low_count << " lanczos "
                                << d.lanczos_low_count;
    }
}

TEST(Sweep, SmallRunPasses) {
    const RunConfig cfg = small_config("[1, 1]", 32, "[10.0, 15.0, 20.0]", "[checks]\ndense_resolution = 12\n");
    const VerificationRun r = run_sweep(cfg);
    for (const auto& f : r.failures) ADD_FAILURE() << f;
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.betti, (std::vector<int>{1, 2, 1}));
    EXPECT_EQ(r.morse, (std::vector<int>{1, 2, 1}));
    EXPECT_EQ(r.sweep.size(), 9u);
    EXPECT_TRUE(r.inequalities.inequalities_ok());
    ASSERT_TRUE(r.trials.has_value());
    EXPECT_EQ(r.gap_growth.size(), 3u);
    EXPECT_EQ(r.dense.size(), 9u);  // one per (t, q)
    for (const auto& c : r.inequalities.counts_match) EXPECT_TRUE(c.ok);
}

TEST(Sweep, TwoSamplesSkipGapGrowthWithNote) {
    const RunConfig cfg = small_config("[1, 1]", 16, "[10.0, 15.0]", "[checks]\ntrial_forms = false\n");
    const VerificationRun r = run_sweep(cfg);
    EXPECT_TRUE(r.gap_growth.empty());
    EXPECT_FALSE(r.notes.empty());
}

TEST(Sweep, OverflowingTIsRefused) {
    const RunConfig cfg = small_config("[1, 1]", 16, "[10000.0]", "[checks]\ntrial_forms = false\n");
    EXPECT_THROW(run_sweep(cfg), ResolutionError);
}
