#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "witten/config.hpp"
#include "witten/eigensolver.hpp"
#include "witten/errors.hpp"
#include "witten/morse_function.hpp"
#include "witten/oscillator.hpp"
#include "witten/parallel.hpp"
#include "witten/precision_oracle.hpp"
#include "witten/rank.hpp"
#include "witten/tunneling.hpp"
#include "witten/witten_complex.hpp"

namespace witten {

// ---- Betti numbers ---------------------------------------------------------------------------

// dim ker of the undeformed Laplacian: dense below 600 unknowns, otherwise Lanczos with a
// growing request until an eigenvalue above the kernel cut shows up.
inline int spectral_kernel_dimension(const SymmetricOperator& S, std::uint64_t seed = 42) {
    const Eigen::Index n = S.size();
    const double cut = kKernelRelTol * std::max(S.scale, 1.0);
    if (n <= 600) {
        int c = 0;
        for (double v : dense_spectrum_oracle(S)) c += v <= cut;
        return c;
    }
    for (int k = 4;; k *= 2) {
        SpectrumRequest r;
        r.q = S.q;
        r.k = static_cast<int>(std::min<Eigen::Index>(k, n - 1));
        r.seed = seed;
        const EigResult e = smallest_eigs(S, r);
        const KernelEstimate ke = kernel_dimension(e, std::max(S.scale, 1.0));
        if (ke.dim < r.k || r.k == n - 1) {
            if (ke.dim < r.k && !e.converged[static_cast<std::size_t>(ke.dim)])
                throw InconclusiveError("kernel count: first eigenvalue above the cut did not converge");
            return ke.dim;
        }
    }
}

struct BettiReport {
    std::vector<int> spectral, rank;
    bool agree() const { return spectral == rank; }
};

inline BettiReport betti_report(const TorusGrid& grid, std::uint64_t seed = 42) {
    BettiReport r;
    for (int q = 0; q <= grid.dimension(); ++q) r.spectral.push_back(spectral_kernel_dimension(undeformed_laplacian(grid, q), seed));
    r.rank = rank_betti_numbers(grid);
    return r;
}

inline std::string format_ints(const std::vector<int>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
}

// Both routes must agree; a disagreement is a hard failure.
inline std::vector<int> betti_numbers(const TorusGrid& grid, std::uint64_t seed = 42) {
    const BettiReport r = betti_report(grid, seed);
    if (!r.agree())
        throw NumericalError("Betti numbers disagree: spectral " + format_ints(r.spectral) + " vs rank " + format_ints(r.rank));
    return r.rank;
}

// ---- Morse inequalities ----------------------------------------------------------------------

struct CountMatch {
    int q = 0;
    double t = 0.0;
    int low_count = 0;
    int expected = 0;
    bool ok = false;
};

struct InequalityReport {
    std::vector<int> b, m;
    std::vector<bool> weak_ok, strong_ok;
    std::vector<int> weak_slack;     // m_q - b_q
    std::vector<int> strong_lhs;     // sum_{j<=q} (-1)^{q-j} b_j
    std::vector<int> strong_rhs;     // same for m
    std::vector<int> strong_slack;   // rhs - lhs
    bool euler_equal = false;
    int euler_characteristic = 0;    // sum (-1)^j b_j
    std::vector<CountMatch> counts_match;

    bool inequalities_ok() const {
        return std::all_of(weak_ok.begin(), weak_ok.end(), [](bool b) { return b; }) &&
               std::all_of(strong_ok.begin(), strong_ok.end(), [](bool b) { return b; }) && euler_equal;
    }
};

inline InequalityReport check_inequalities(const std::vector<int>& b, const std::vector<int>& m) {
    if (b.size() != m.size() || b.empty()) throw DomainError("check_inequalities needs equal, nonempty lengths");
    InequalityReport r;
    r.b = b;
    r.m = m;
    const std::size_t n = b.size() - 1;
    for (std::size_t q = 0; q <= n; ++q) {
        r.weak_slack.push_back(m[q] - b[q]);
        r.weak_ok.push_back(b[q] <= m[q]);
        int lb = 0, lm = 0;
        for (std::size_t j = 0; j <= q; ++j) {
            const int s = (q - j) % 2 ? -1 : 1;
            lb += s * b[j];
            lm += s * m[j];
        }
        r.strong_lhs.push_back(lb);
        r.strong_rhs.push_back(lm);
        r.strong_slack.push_back(lm - lb);
        r.strong_ok.push_back(lb <= lm);
    }
    r.euler_equal = r.strong_lhs[n] == r.strong_rhs[n];
    for (std::size_t j = 0; j <= n; ++j) r.euler_characteristic += (j % 2 ? -1 : 1) * b[j];
    return r;
}

// ---- per (q, t) analysis ---------------------------------------------------------------------

struct StructuredInfo {
    bool attempted = false;
    bool available = false;
    std::string method;
    std::string reason;
    int kernel_dim = 0;
    std::vector<double> tunneling;
    double series_ratio = 0.0;
};

struct SweepEntry {
    double t = 0.0;
    int q = 0;
    std::vector<double> eigenvalues, residuals;
    std::vector<bool> converged;
    int iterations = 0;
    std::string transform;
    std::uint64_t seed = 42;
    double scale = 0.0;

    int kernel_dim = 0;
    std::string kernel_method;       // "structured" or "numeric"
    int numeric_kernel_dim = 0;
    double numeric_kernel_cut = 0.0;
    bool kernel_ill_separated = false;

    int low_count = 0;               // auto gap
    double threshold = 0.0;
    double gap_ratio = 0.0;
    bool gap_clear = false;
    int fixed_count = -1;            // e^{-Ct} t min|Hess| threshold, -1 if inconclusive
    double fixed_threshold = 0.0;
    std::string fixed_note;

    StructuredInfo structured;
    bool routes_agree = true;
    bool cluster_converged = true;
    bool in_window = true;
    double next_eigenvalue = std::numeric_limits<double>::quiet_NaN();
};

enum class CountMode { fixed_threshold, auto_gap };

inline int low_lying_counts(const SweepEntry& e, CountMode mode) {
    if (mode == CountMode::auto_gap) return e.low_count;
    if (e.fixed_count < 0) throw InconclusiveError("fixed-threshold count inconclusive: " + e.fixed_note);
    return e.fixed_count;
}

struct DegreeOptions {
    int k = 0;
    double tol = 1e-8;
    int max_iter = 300;
    std::uint64_t seed = 42;
    SpectralTransform transform = SpectralTransform::automatic;
    bool structured = true;
    double C = 0.00125;
    double hessian_min = 1.0;  // min |Hessian eigenvalue| over critical points
};

inline DegreeOptions degree_options(const RunConfig& cfg, double hessian_min) {
    DegreeOptions o;
    o.k = cfg.solver.k;
    o.tol = cfg.solver.tol;
    o.max_iter = cfg.solver.max_iter;
    o.seed = cfg.solver.seed;
    o.transform = cfg.solver.transform;
    o.structured = cfg.checks.structured;
    o.C = cfg.fixed_C();
    o.hessian_min = hessian_min;
    return o;
}

// Eigen-table, kernel and low-lying counts in one degree. cluster_vectors (optional) receives
// the Ritz vectors of the low cluster in S-coordinates.
inline SweepEntry analyze_degree(const DeformedComplex& c, int q, int b_q, int m_q, const DegreeOptions& opt,
                                 Eigen::MatrixXd* cluster_vectors = nullptr) {
    const SymmetricOperator& S = c.laplacian(q);
    const Eigen::Index n = S.size();
    SweepEntry e;
    e.t = c.t();
    e.q = q;
    int k = opt.k > 0 ? opt.k : m_q + b_q + 4;
    k = static_cast<int>(std::min<Eigen::Index>(k, n - 1));
    SpectrumRequest r;
    r.q = q;
    r.t = c.t();
    r.k = k;
    r.tol = opt.tol;
    r.max_iter = opt.max_iter;
    r.seed = opt.seed;
    r.transform = opt.transform;
    r.want_vectors = cluster_vectors != nullptr;
    const EigResult res = smallest_eigs(S, r);
    e.eigenvalues = res.values;
    e.residuals = res.residuals;
    e.converged = res.converged;
    e.iterations = res.iterations;
    e.transform = res.transform;
    e.seed = res.seed;
    e.scale = res.scale;

    const KernelEstimate ke = kernel_dimension(res, std::max(res.scale, 1.0));
    e.numeric_kernel_dim = ke.dim;
    e.numeric_kernel_cut = ke.cut;
    e.kernel_ill_separated = ke.ill_separated;

    const GapAnalysis g = detect_gap(res.values, k - 1, std::max(res.scale, 1.0));
    e.low_count = g.low_count;
    e.threshold = g.threshold_used;
    e.gap_ratio = g.gap_ratio;
    e.gap_clear = g.clear;
    if (static_cast<std::size_t>(e.low_count) < res.values.size()) e.next_eigenvalue = res.values[static_cast<std::size_t>(e.low_count)];
    for (int i = 0; i <= e.low_count && i < static_cast<int>(res.converged.size()); ++i)
        e.cluster_converged = e.cluster_converged && res.converged[static_cast<std::size_t>(i)];

    e.fixed_threshold = std::exp(-opt.C * c.t()) * c.t() * opt.hessian_min;
    try {
        e.fixed_count = count_below(res, e.fixed_threshold);
        if (e.fixed_count == k) e.fixed_note = "every computed eigenvalue lies below the threshold";
    } catch (const InconclusiveError& err) {
        e.fixed_count = -1;
        e.fixed_note = err.what();
    }

    e.kernel_dim = ke.dim;
    e.kernel_method = "numeric";
    if (opt.structured) {
        e.structured.attempted = true;
        try {
            const ResolvedLowSpectrum s = resolve_low_spectrum(c, q);
            e.structured.available = s.available;
            e.structured.method = s.method;
            e.structured.reason = s.reason;
            e.structured.kernel_dim = s.kernel_dim;
            e.structured.tunneling = s.tunneling;
            e.structured.series_ratio = s.series_ratio;
        } catch (const NumericalError& err) {
            e.structured.available = false;
            e.structured.reason = err.what();
        }
        if (e.structured.available) {
            e.kernel_dim = e.structured.kernel_dim;
            e.kernel_method = "structured";
            const int cluster = e.structured.kernel_dim + static_cast<int>(e.structured.tunneling.size());
            const double slack = 1e3 * std::numeric_limits<double>::epsilon() * std::max(res.scale, 1.0);
            e.routes_agree = cluster == e.low_count;
            for (int i = 0; e.routes_agree && i < cluster && i < static_cast<int>(res.values.size()); ++i) {
                const double ref = i < e.structured.kernel_dim ? 0.0
                                                               : e.structured.tunneling[static_cast<std::size_t>(i - e.structured.kernel_dim)];
                e.routes_agree = std::abs(res.values[static_cast<std::size_t>(i)] - ref) <= slack + 1e-8 * ref;
            }
        }
    }
    if (cluster_vectors) *cluster_vectors = res.vectors.leftCols(e.low_count);
    return e;
}

// ---- exactness of the low-lying complex --------------------------------------------------------

struct ExactnessDegree {
    int q = 0;
    int window_dim = 0;    // dim E_[0, lambda]
    int harmonic = 0;
    int positive_dim = 0;  // dim E_(0, lambda]
    int rank = 0;          // rank of d_t restricted, degree q -> q+1
    double leak = 0.0;
    std::vector<double> singular_values;
    std::vector<double> cluster_values;  // multiprecision Ritz values
};

struct ExactnessReport {
    double t = 0.0;
    double lambda = 0.0;
    int digits = 0;
    std::vector<ExactnessDegree> degrees;
    std::vector<int> alternating;  // sum_{j<=q} (-1)^{q-j} dim E^j_(0,lambda]
    bool ranks_ok = false;         // dim E^q_(0,l] = rank_q + rank_{q-1}
    bool alternating_ok = false;   // alternating_q = rank_q >= 0
    bool top_equality = false;     // alternating_n = 0
    bool invariant_ok = false;     // d_t maps the window into the window
    bool passed() const { return ranks_ok && alternating_ok && top_equality && invariant_ok; }
};

// Dense spectra locate the window; the cluster bases and the restricted d_t are resolved in
// multiprecision because tunneling values sit far below double precision relative to the bulk.
inline ExactnessReport exactness_check(const DeformedComplex& c, double lambda) {
    const int n = c.dimension();
    if (!(lambda > 0.0)) throw DomainError("exactness window must be positive");
    ExactnessReport rep;
    rep.t = c.t();
    rep.lambda = lambda;
    std::vector<MpCluster> clusters(static_cast<std::size_t>(n + 1));
    std::vector<int> counts(static_cast<std::size_t>(n + 1), 0);
    for (int q = 0; q <= n; ++q) {
        const DenseEigenpairs dp = dense_eigenpairs(c.laplacian(q));
        const Eigen::Index size = dp.values.size();
        int cnt = 0;
        for (Eigen::Index i = 0; i < size; ++i) {
            const double v = dp.values[i];
            if (v > lambda / 10.0 && v < 10.0 * lambda)
                throw DomainError("lambda = " + std::to_string(lambda) + " is not inside a spectral gap in degree " +
                                  std::to_string(q) + " (eigenvalue " + std::to_string(v) + ")");
            cnt += v <= lambda;
        }
        counts[static_cast<std::size_t>(q)] = cnt;
        if (cnt == 0) continue;
        if (cnt == size) throw DomainError("exactness window contains the whole spectrum in degree " + std::to_string(q));
        const Eigen::Index cols = std::min<Eigen::Index>(cnt + 2, size);
        clusters[static_cast<std::size_t>(q)] = mp_low_cluster(c, q, cnt, dp.vectors.leftCols(cols), dp.values[cnt]);
        rep.digits = std::max(rep.digits, clusters[static_cast<std::size_t>(q)].digits);
    }
    for (int q = 0; q <= n; ++q) {
        ExactnessDegree d;
        d.q = q;
        d.window_dim = counts[static_cast<std::size_t>(q)];
        const MpCluster& cl = clusters[static_cast<std::size_t>(q)];
        d.cluster_values = cl.values;
        if (d.window_dim > 0) {
            const double cut = mp_kernel_cut(cl, c.laplacian(q).scale);
            for (double v : cl.values) d.harmonic += v <= cut;
        }
        d.positive_dim = d.window_dim - d.harmonic;
        if (q < n && d.positive_dim > 0) {
            if (counts[static_cast<std::size_t>(q + 1)] == 0) {
                d.leak = 1.0;
            } else {
                const RestrictedRank rr = restricted_rank(c, q, cl, clusters[static_cast<std::size_t>(q + 1)]);
                d.rank = rr.rank;
                d.leak = rr.leak;
                d.singular_values = rr.singular_values;
            }
        }
        rep.degrees.push_back(d);
    }
    rep.ranks_ok = true;
    rep.alternating_ok = true;
    rep.invariant_ok = true;
    for (int q = 0; q <= n; ++q) {
        const ExactnessDegree& d = rep.degrees[static_cast<std::size_t>(q)];
        const int prev = q > 0 ? rep.degrees[static_cast<std::size_t>(q - 1)].rank : 0;
        rep.ranks_ok = rep.ranks_ok && d.positive_dim == d.rank + prev;
        int alt = 0;
        for (int j = 0; j <= q; ++j) alt += ((q - j) % 2 ? -1 : 1) * rep.degrees[static_cast<std::size_t>(j)].positive_dim;
        rep.alternating.push_back(alt);
        rep.alternating_ok = rep.alternating_ok && alt >= 0 && alt == d.rank;
        rep.invariant_ok = rep.invariant_ok && d.leak <= 1e-10;
    }
    rep.top_equality = rep.alternating.back() == 0;
    return rep;
}

// Window at the geometric midpoint of the common gap of all degrees.
inline double exactness_window(const DeformedComplex& c) {
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int q = 0; q <= c.dimension(); ++q) {
        const std::vector<double> v = dense_spectrum_oracle(c.laplacian(q));
        const double scale = std::max(c.laplacian(q).scale, 1.0);
        const GapAnalysis g = detect_gap(v, std::min<int>(static_cast<int>(v.size()) - 1, 32), scale);
        lo = std::max(lo, std::max(v[static_cast<std::size_t>(g.low_count - 1)], std::numeric_limits<double>::epsilon() * scale));
        hi = std::min(hi, v[static_cast<std::size_t>(g.low_count)]);
    }
    if (!(lo < hi)) throw NumericalError("no common spectral gap across degrees for the exactness window");
    return std::sqrt(lo * hi);
}

inline ExactnessReport exactness_check(const DeformedComplex& c) { return exactness_check(c, exactness_window(c)); }

// ---- trial forms -------------------------------------------------------------------------------

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs at least two matching samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw DomainError("slope fit needs distinct abscissae");
    return (n * sxy - sx * sy) / den;
}

inline double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> ly;
    for (double v : y) ly.push_back(std::log(std::max(v, std::numeric_limits<double>::min())));
    return fit_slope(x, ly);
}

struct TrialPointSample {
    double t = 0.0;
    double residual = 0.0;          // ||Delta_t v|| / ||v||
    double projection_error = 0.0;  // ||v - P v|| / ||v||
    double projection_sup = 0.0;    // sup-norm variant, relative to sup |v|
    double norm2 = 0.0;             // ||v||^2 in the mass inner product
};

struct TrialPointReport {
    int point = 0;  // index into the Morse profile
    int index = 0;
    Point coords{};
    std::vector<TrialPointSample> samples;
    double residual_slope = 0.0;
    double projection_slope = 0.0;
};

struct GramSample {
    double t = 0.0;
    int q = 0;
    std::vector<int> points;
    Eigen::MatrixXd gram;  // (P v_i, P v_j) for normalized v
    double determinant = 0.0;
    double min_eigenvalue = 0.0;
    double max_offdiag = 0.0;
};

struct TrialFormDiagnostics {
    std::string chart;
    double epsilon = 0.0;
    std::vector<TrialPointReport> points;
    std::vector<GramSample> gram;
    bool residual_decays = false;
    bool projection_decays = false;
    bool gram_ok = false;
    bool offdiag_ok = false;
    std::vector<std::string> failures;
    bool passed() const { return failures.empty(); }
};

struct TrialDegreeSamples {
    std::vector<std::pair<int, TrialPointSample>> points;  // (profile index, sample)
    GramSample gram;
};

// One t, one degree: trial forms of all critical points of index q against the cluster basis.
inline TrialDegreeSamples trial_samples(const DeformedComplex& c, int q, const MorseProfile& profile,
                                        const Eigen::MatrixXd& cluster, double epsilon) {
    const TorusGrid& g = c.grid();
    const SymmetricOperator& S = c.laplacian(q);
    TrialDegreeSamples out;
    out.gram.t = c.t();
    out.gram.q = q;
    std::vector<Eigen::VectorXd> projected;
    for (std::size_t i = 0; i < profile.points.size(); ++i) {
        const CriticalPoint& cp = profile.points[i];
        if (cp.index != q) continue;
        const Cochain v = trial_form(TrialFormSpec{cp, c.t(), epsilon}, g, c.function());
        Eigen::VectorXd x = c.to_symmetric(q, v.values);
        const double nrm = x.norm();
        if (!(nrm > 0.0)) throw NumericalError("trial form vanishes on the grid; refine the grid or enlarge epsilon");
        x /= nrm;
        TrialPointSample s;
        s.t = c.t();
        s.norm2 = nrm * nrm;
        s.residual = (S.matrix * x).norm();
        const Eigen::VectorXd px = cluster.cols() > 0 ? Eigen::VectorXd(cluster * (cluster.transpose() * x))
                                                      : Eigen::VectorXd::Zero(x.size());
        const Eigen::VectorXd err = x - px;
        s.projection_error = err.norm();
        const double sup_v = sup_norm(Cochain{q, g, c.from_symmetric(q, x)});
        s.projection_sup = sup_norm(Cochain{q, g, c.from_symmetric(q, err)}) / sup_v;
        out.points.emplace_back(static_cast<int>(i), s);
        out.gram.points.push_back(static_cast<int>(i));
        projected.push_back(px);
    }
    const auto m = static_cast<Eigen::Index>(projected.size());
    out.gram.gram = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
            out.gram.gram(a, b) = projected[static_cast<std::size_t>(a)].dot(projected[static_cast<std::size_t>(b)]);
    if (m > 0) {
        out.gram.determinant = out.gram.gram.determinant();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.gram.gram, Eigen::EigenvaluesOnly);
        out.gram.min_eigenvalue = es.eigenvalues()[0];
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b)
                if (a != b) out.gram.max_offdiag = std::max(out.gram.max_offdiag, std::abs(out.gram.gram(a, b)));
    }
    return out;
}

// Fits decay rates across t and applies the asserted checks.
inline TrialFormDiagnostics trial_diagnostics(const MorseProfile& profile, const std::vector<TrialDegreeSamples>& samples,
                                              const std::string& chart, double epsilon) {
    TrialFormDiagnostics d;
    d.chart = chart;
    d.epsilon = epsilon;
    for (std::size_t i = 0; i < profile.points.size(); ++i) {
        TrialPointReport r;
        r.point = static_cast<int>(i);
        r.index = profile.points[i].index;
        r.coords = profile.points[i].coords;
        d.points.push_back(r);
    }
    for (const auto& s : samples) {
        for (const auto& [i, p] : s.points) d.points[static_cast<std::size_t>(i)].samples.push_back(p);
        d.gram.push_back(s.gram);
    }
    std::sort(d.gram.begin(), d.gram.end(), [](const GramSample& a, const GramSample& b) {
        return a.t != b.t ? a.t < b.t : a.q < b.q;
    });
    d.residual_decays = true;
    d.projection_decays = true;
    for (auto& p : d.points) {
        std::sort(p.samples.begin(), p.samples.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
        if (p.samples.size() < 2) {
            d.failures.push_back("trial form " + std::to_string(p.point) + ": fewer than two t samples");
            d.residual_decays = d.projection_decays = false;
            continue;
        }
        std::vector<double> ts, res, proj;
        for (const auto& s : p.samples) {
            ts.push_back(s.t);
            res.push_back(s.residual);
            proj.push_back(s.projection_error);
        }
        p.residual_slope = fit_log_slope(ts, res);
        p.projection_slope = fit_log_slope(ts, proj);
        if (!(p.residual_slope < 0.0)) {
            d.residual_decays = false;
            d.failures.push_back("trial form " + std::to_string(p.point) + ": residual log-slope " + std::to_string(p.residual_slope) + " is not negative");
        }
        if (!(p.projection_slope < 0.0)) {
            d.projection_decays = false;
            d.failures.push_back("trial form " + std::to_string(p.point) + ": projection-error log-slope " +
                                 std::to_string(p.projection_slope) + " is not negative");
        }
    }
    d.gram_ok = true;
    d.offdiag_ok = true;
    if (!d.gram.empty()) {
        const double t_last = d.gram.back().t, t_first = d.gram.front().t;
        for (const auto& g : d.gram) {
            if (g.gram.rows() == 0) continue;
            if (!(g.determinant > 0.0)) {
                d.gram_ok = false;
                d.failures.push_back("Gram determinant not positive at t=" + std::to_string(g.t) + ", q=" + std::to_string(g.q));
            }
            if (g.t == t_last && !(g.min_eigenvalue > 0.5)) {
                d.gram_ok = false;
                d.failures.push_back("lost trial form: projected Gram matrix degenerate at t=" + std::to_string(g.t) +
                                     ", q=" + std::to_string(g.q));
            }
            if (g.t == t_last) {
                double first = 0.0;
                for (const auto& h : d.gram)
                    if (h.t == t_first && h.q == g.q) first = h.max_offdiag;
                if (!(g.max_offdiag <= std::max(1e-8, first))) {
                    d.offdiag_ok = false;
                    d.failures.push_back("Gram off-diagonals grow with t in degree " + std::to_string(g.q));
                }
            }
        }
    }
    return d;
}

// ---- gap growth --------------------------------------------------------------------------------

struct GapGrowth {
    int q = 0;
    std::vector<double> t, lambda;
    double slope = 0.0;
    bool positive = false;
    bool bound_ok = false;
    bool passed() const { return positive && bound_ok; }
};

inline GapGrowth gap_growth_check(int q, const std::vector<double>& t, const std::vector<double>& lambda) {
    if (t.size() != lambda.size()) throw DomainError("gap growth needs one eigenvalue per t");
    if (t.size() < 3) throw DomainError("gap growth needs at least three t samples");
    for (double l : lambda)
        if (!std::isfinite(l)) throw NumericalError("gap growth: first eigenvalue above the cluster did not converge");
    GapGrowth g;
    g.q = q;
    g.t = t;
    g.lambda = lambda;
    g.slope = fit_slope(t, lambda);
    g.positive = g.slope > 0.0;
    g.bound_ok = g.positive;
    for (std::size_t i = 0; i < t.size(); ++i) g.bound_ok = g.bound_ok && lambda[i] >= g.slope * t[i] / 2.0;
    return g;
}

// ---- t window ----------------------------------------------------------------------------------

struct TWindow {
    double t_min = 0.0;
    double t_max = 0.0;
    double t_resolution = 0.0;  // ground-state width >= 4 cells
    double t_overflow = 0.0;
    bool contains(double t) const { return t >= t_min && t <= t_max; }
};

inline TWindow t_window(const TorusGrid& grid, const MorseFunction& f, const MorseProfile& profile) {
    double amin = std::numeric_limits<double>::infinity(), amax = 0.0;
    for (const auto& p : profile.points)
        for (double a : p.hessian_eigenvalues) {
            amin = std::min(amin, std::abs(a));
            amax = std::max(amax, std::abs(a));
        }
    TWindow w;
    if (profile.points.empty()) return w;
    const double h = grid.max_spacing();
    w.t_min = 10.0 / std::sqrt(amin);
    w.t_resolution = 1.0 / (16.0 * h * h * amax);
    w.t_overflow = kMaxExponent / (0.5 * h * std::sqrt(static_cast<double>(grid.dimension())) * f.gradient_bound());
    w.t_max = std::min(w.t_resolution, w.t_overflow);
    return w;
}

inline double hessian_min(const MorseProfile& profile) {
    double amin = std::numeric_limits<double>::infinity();
    for (const auto& p : profile.points)
        for (double a : p.hessian_eigenvalues) amin = std::min(amin, std::abs(a));
    return std::isfinite(amin) ? amin : 1.0;
}

// ---- dense cross-check -------------------------------------------------------------------------

struct DenseCrossCheck {
    int resolution = 0;
    double t = 0.0;
    int q = 0;
    int dense_low_count = 0;
    int lanczos_low_count = 0;
    int expected = 0;
    double max_deviation = 0.0;  // max |lanczos - dense| / (1e-8 |dense| + 100 eps scale)
    bool passed() const { return dense_low_count == expected && lanczos_low_count == expected && max_deviation <= 1.0; }
};

inline DenseCrossCheck dense_cross_check(const DeformedComplex& c, int q, int expected, const DegreeOptions& opt) {
    DenseCrossCheck d;
    d.resolution = c.grid().resolution(0);
    d.t = c.t();
    d.q = q;
    d.expected = expected;
    const SymmetricOperator& S = c.laplacian(q);
    const std::vector<double> dense = dense_spectrum_oracle(S);
    const double scale = std::max(S.scale, 1.0);
    const int kk = std::min<int>(10, static_cast<int>(dense.size()) - 1);
    d.dense_low_count = detect_gap(dense, kk, scale).low_count;
    SpectrumRequest r;
    r.q = q;
    r.t = c.t();
    r.k = std::max(kk, expected + 2);
    r.tol = opt.tol;
    r.seed = opt.seed;
    r.transform = opt.transform;
    const EigResult e = smallest_eigs(S, r);
    d.lanczos_low_count = detect_gap(e.values, r.k - 1, scale).low_count;
    for (int i = 0; i < kk && i < static_cast<int>(e.values.size()); ++i) {
        const double tol = 1e-8 * std::abs(dense[static_cast<std::size_t>(i)]) + 100.0 * std::numeric_limits<double>::epsilon() * scale;
        d.max_deviation = std::max(d.max_deviation, std::abs(e.values[static_cast<std::size_t>(i)] - dense[static_cast<std::size_t>(i)]) / tol);
    }
    return d;
}

// ---- the sweep ---------------------------------------------------------------------------------

struct VerificationRun {
    RunConfig config;
    std::vector<int> betti, morse;
    BettiReport betti_routes;
    MorseProfile profile;
    double hessian_min = 0.0;
    TWindow window;
    std::vector<SweepEntry> sweep;
    InequalityReport inequalities;
    std::vector<int> low_alternating_ok;  // per t: 1 if sum_{j<=q} (-1)^{q-j}(low_j - b_j) >= 0, = 0 at q = n
    std::optional<TrialFormDiagnostics> trials;
    std::vector<GapGrowth> gap_growth;
    std::vector<std::string> notes;
    std::optional<ExactnessReport> exactness;
    std::vector<DenseCrossCheck> dense;
    std::vector<std::string> failures;
    bool passed() const { return failures.empty(); }
};

inline VerificationRun run_sweep(const RunConfig& cfg) {
    VerificationRun run;
    run.config = cfg;
    const TorusGrid grid = config_grid(cfg);
    const MorseFunction f = config_function(cfg);
    const int n = grid.dimension();

    run.profile = find_critical_points(f, grid);
    run.morse = run.profile.m;
    run.hessian_min = hessian_min(run.profile);
    run.window = t_window(grid, f, run.profile);
    run.betti_routes = betti_report(grid, cfg.solver.seed);
    if (!run.betti_routes.agree())
        throw NumericalError("Betti numbers disagree: spectral " + format_ints(run.betti_routes.spectral) + " vs rank " +
                             format_ints(run.betti_routes.rank));
    run.betti = run.betti_routes.rank;
    run.inequalities = check_inequalities(run.betti, run.morse);
    if (!run.inequalities.inequalities_ok()) run.failures.push_back("Morse inequalities fail for b=" + format_ints(run.betti) + ", m=" + format_ints(run.morse));

    const DegreeOptions opt = degree_options(cfg, run.hessian_min);
    const std::vector<double>& ts = cfg.deformation.t_list;
    const bool trials = cfg.checks.trial_forms;
    struct Slot {
        std::vector<SweepEntry> entries;
        std::vector<TrialDegreeSamples> trial;
    };
    std::vector<Slot> slots(ts.size());
    parallel_for(ts.size(), [&](std::size_t i) {
        const DeformedComplex c(grid, f, ts[i]);
        for (int q = 0; q <= n; ++q) {
            Eigen::MatrixXd cluster;
            SweepEntry e = analyze_degree(c, q, run.betti[static_cast<std::size_t>(q)], run.morse[static_cast<std::size_t>(q)], opt,
                                          trials ? &cluster : nullptr);
            e.in_window = run.window.contains(ts[i]);
            slots[i].entries.push_back(std::move(e));
            if (trials) slots[i].trial.push_back(trial_samples(c, q, run.profile, cluster, cfg.deformation.epsilon));
        }
    });

    std::vector<TrialDegreeSamples> all_trials;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        std::vector<int> low(static_cast<std::size_t>(n + 1));
        for (auto& e : slots[i].entries) {
            const auto q = static_cast<std::size_t>(e.q);
            low[q] = e.low_count;
            const std::string where = " at q=" + std::to_string(e.q) + ", t=" + std::to_string(e.t);
            CountMatch cm{e.q, e.t, e.low_count, run.morse[q], e.low_count == run.morse[q]};
            run.inequalities.counts_match.push_back(cm);
            if (!cm.ok) run.failures.push_back("low-lying count " + std::to_string(e.low_count) + " != m_q = " + std::to_string(run.morse[q]) + where);
            if (e.kernel_dim != run.betti[q]) run.failures.push_back("kernel dimension " + std::to_string(e.kernel_dim) + " != b_q" + where);
            if (e.kernel_dim > e.low_count) run.failures.push_back("kernel dimension exceeds the low-lying count" + where);
            if (!e.cluster_converged) run.failures.push_back("eigenvalues up to the gap did not converge" + where);
            if (e.structured.available && !e.routes_agree)
                run.failures.push_back("structured low spectrum disagrees with the Lanczos cluster" + where);
            run.sweep.push_back(std::move(e));
        }
        bool alt_ok = true;
        for (int q = 0; q <= n; ++q) {
            int s = 0;
            for (int j = 0; j <= q; ++j) s += ((q - j) % 2 ? -1 : 1) * (low[static_cast<std::size_t>(j)] - run.betti[static_cast<std::size_t>(j)]);
            alt_ok = alt_ok && s >= 0 && (q < n || s == 0);
        }
        run.low_alternating_ok.push_back(alt_ok ? 1 : 0);
        if (!alt_ok) run.failures.push_back("alternating low-count sums fail at t=" + std::to_string(ts[i]));
        for (auto& s : slots[i].trial) all_trials.push_back(std::move(s));
    }

    if (trials) {
        run.trials = trial_diagnostics(run.profile, all_trials, chart_name(trial_chart(f)), cfg.deformation.epsilon);
        for (const auto& msg : run.trials->failures) run.failures.push_back(msg);
    }

    if (cfg.checks.gap_growth) {
        if (ts.size() < 3) {
            run.notes.push_back("gap growth skipped: needs at least three t values");
        } else {
            for (int q = 0; q <= n; ++q) {
                std::vector<double> tt, ll;
                for (const auto& e : run.sweep)
                    if (e.q == q) {
                        tt.push_back(e.t);
                        ll.push_back(e.next_eigenvalue);
                    }
                const GapGrowth g = gap_growth_check(q, tt, ll);
                if (!g.passed()) run.failures.push_back("gap growth fails in degree " + std::to_string(q));
                run.gap_growth.push_back(g);
            }
        }
    }

    if (cfg.checks.exactness) {
        const DeformedComplex c(grid, f, ts.front());
        run.exactness = exactness_check(c);
        if (!run.exactness->passed()) run.failures.push_back("exactness check fails at t=" + std::to_string(ts.front()));
        for (int q = 0; q <= n; ++q)
            if (run.exactness->degrees[static_cast<std::size_t>(q)].harmonic != run.betti[static_cast<std::size_t>(q)])
                run.failures.push_back("exactness: harmonic part differs from b_q in degree " + std::to_string(q));
    }

    if (cfg.checks.dense_resolution > 0) {
        std::vector<int> res(static_cast<std::size_t>(n), cfg.checks.dense_resolution);
        const TorusGrid coarse = build_grid(n, cfg.manifold.lengths, res);
        std::vector<std::vector<DenseCrossCheck>> out(ts.size());
        parallel_for(ts.size(), [&](std::size_t i) {
            const DeformedComplex c(coarse, f, ts[i]);
            for (int q = 0; q <= n; ++q) out[i].push_back(dense_cross_check(c, q, run.morse[static_cast<std::size_t>(q)], opt));
        });
        for (const auto& v : out)
            for (const auto& d : v) {
                if (!d.passed())
                    run.failures.push_back("dense cross-check fails at N=" + std::to_string(d.resolution) + ", q=" + std::to_string(d.q) +
                                           ", t=" + std::to_string(d.t));
                run.dense.push_back(d);
            }
    }
    return run;
}

}  // namespace witten
