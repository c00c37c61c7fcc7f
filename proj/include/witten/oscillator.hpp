#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "witten/combinatorics.hpp"
#include "witten/errors.hpp"
#include "witten/morse_function.hpp"
#include "witten/torus_grid.hpp"

namespace witten {

// ---- Hermite polynomials A_n (physicists' convention) --------------------------------------

inline double hermite_polynomial(int n, double x) {
    if (n < 0) throw DomainError("Hermite degree must be >= 0");
    double a0 = 1.0, a1 = 2.0 * x;
    if (n == 0) return a0;
    for (int k = 1; k < n; ++k) {
        const double a2 = 2.0 * x * a1 - 2.0 * k * a0;
        a0 = a1;
        a1 = a2;
    }
    return a1;
}

using Polynomial = std::vector<double>;  // coefficient of x^k at index k

inline double polynomial_eval(const Polynomial& p, double x) {
    double s = 0.0;
    for (std::size_t k = p.size(); k-- > 0;) s = s * x + p[k];
    return s;
}

inline Polynomial polynomial_derivative(const Polynomial& p) {
    if (p.size() <= 1) return {0.0};
    Polynomial d(p.size() - 1);
    for (std::size_t k = 1; k < p.size(); ++k) d[k - 1] = static_cast<double>(k) * p[k];
    return d;
}

struct HermiteSequence {
    int max_n = 0;
    std::vector<Polynomial> coefficients;  // A_0 .. A_max_n

    const Polynomial& operator[](int n) const { return coefficients.at(static_cast<std::size_t>(n)); }
};

inline HermiteSequence hermite_sequence(int max_n) {
    if (max_n < 0) throw DomainError("Hermite degree must be >= 0");
    HermiteSequence h;
    h.max_n = max_n;
    h.coefficients.push_back({1.0});
    if (max_n >= 1) h.coefficients.push_back({0.0, 2.0});
    for (int n = 1; n < max_n; ++n) {
        const Polynomial& a = h.coefficients[static_cast<std::size_t>(n)];
        const Polynomial& b = h.coefficients[static_cast<std::size_t>(n - 1)];
        Polynomial c(static_cast<std::size_t>(n + 2), 0.0);
        for (std::size_t k = 0; k < a.size(); ++k) c[k + 1] += 2.0 * a[k];
        for (std::size_t k = 0; k < b.size(); ++k) c[k] -= 2.0 * n * b[k];
        h.coefficients.push_back(std::move(c));
    }
    return h;
}

// phi_n = (2^n n!)^{-1/2} pi^{-1/4} A_n e^{-x^2/2}, by the normalized three-term recursion
// (no factorials, no overflow for large n).
inline double hermite_function(int n, double x) {
    if (n < 0) throw DomainError("Hermite degree must be >= 0");
    double p0 = std::exp(-0.5 * x * x) / std::pow(std::numbers::pi, 0.25);
    if (n == 0) return p0;
    double p1 = std::sqrt(2.0) * x * p0;
    for (int k = 1; k < n; ++k) {
        const double p2 = std::sqrt(2.0 / (k + 1)) * x * p1 - std::sqrt(static_cast<double>(k) / (k + 1)) * p0;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

inline double hermite_normalization(int n) {
    return 1.0 / std::sqrt(std::ldexp(std::tgamma(n + 1.0), n) * std::sqrt(std::numbers::pi));
}

// (-d^2/dx^2 + x^2) phi_n at x, from the exact polynomial derivatives of A_n:
// phi'' = c e^{-x^2/2} (A'' - 2x A' + (x^2 - 1) A).
inline double oscillator_action(const HermiteSequence& h, int n, double x) {
    const Polynomial& A = h[n];
    const Polynomial dA = polynomial_derivative(A);
    const Polynomial ddA = polynomial_derivative(dA);
    const double a = polynomial_eval(A, x), da = polynomial_eval(dA, x), dda = polynomial_eval(ddA, x);
    const double second = dda - 2.0 * x * da + (x * x - 1.0) * a;
    return hermite_normalization(n) * std::exp(-0.5 * x * x) * (-second + x * x * a);
}

struct GaussHermiteRule {
    std::vector<double> nodes, weights;  // weight e^{-x^2}
};

// Golub-Welsch start (eigenvalues of the Jacobi matrix with off-diagonal sqrt(k/2)), nodes polished
// by Newton on A_m with A_m' = 2m A_{m-1}, weights 2^{m-1} m! sqrt(pi) / (m A_{m-1}(x))^2.
inline GaussHermiteRule gauss_hermite(int m) {
    if (m < 1) throw DomainError("Gauss-Hermite rule needs at least one node");
    if (m > 150) throw DomainError("Gauss-Hermite rule limited to 150 nodes");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
    for (int k = 1; k < m; ++k) J(k - 1, k) = J(k, k - 1) = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
    GaussHermiteRule r;
    const double lognorm = (m - 1) * std::log(2.0) + std::lgamma(m + 1.0) + 0.5 * std::log(std::numbers::pi);
    for (int i = 0; i < m; ++i) {
        double x = es.eigenvalues()[i];
        for (int it = 0; it < 3; ++it) x -= hermite_polynomial(m, x) / (2.0 * m * hermite_polynomial(m - 1, x));
        const double a = std::abs(m * hermite_polynomial(m - 1, x));
        r.nodes.push_back(x);
        r.weights.push_back(std::exp(lognorm - 2.0 * std::log(a)));
    }
    return r;
}

// int e^{-x^2} A_n A_m dx, exact for the polynomial integrand.
inline double hermite_gram(int n, int m) {
    if (n < 0 || m < 0) throw DomainError("Hermite degree must be >= 0");
    if (n > 30 || m > 30) throw DomainError("hermite_gram supports degrees up to 30");
    const GaussHermiteRule r = gauss_hermite((n + m + 1) / 2 + 1);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i)
        s += r.weights[i] * hermite_polynomial(n, r.nodes[i]) * hermite_polynomial(m, r.nodes[i]);
    return s;
}

inline std::vector<double> oscillator_eigenvalues(int k) {
    if (k < 1) throw DomainError("oscillator_eigenvalues needs k >= 1");
    std::vector<double> v;
    for (int i = 0; i < k; ++i) v.push_back(2.0 * i + 1.0);
    return v;
}

// ---- flat model operator ---------------------------------------------------------------------

// -Laplacian + t^2|x|^2 + t sum_j s_j eps_J^j on the component dx_J, s_j = -1 for the first r axes.
struct ModelOperatorSpec {
    int n = 1;
    int r = 0;
    int q = 0;
    double t = 1.0;
};

inline void validate(const ModelOperatorSpec& s) {
    if (s.n < 1 || s.n > kMaxDim) throw DomainError("model dimension must be in 1..3");
    if (s.r < 0 || s.r > s.n) throw DomainError("model index r must be in 0..n");
    if (s.q < 0 || s.q > s.n) throw DomainError("model degree q must be in 0..n");
    if (!(s.t > 0.0) || !std::isfinite(s.t)) throw DomainError("model t must be finite and > 0");
}

// Constant shift of component J in units of t: sum_j s_j eps_J^j.
inline int model_component_shift(const ModelOperatorSpec& s, AxisSet J) {
    int c = 0;
    for (int j = 0; j < s.n; ++j) {
        const int sj = j < s.r ? -1 : 1;
        const int ej = contains(J, j) ? 1 : -1;
        c += sj * ej;
    }
    return c;
}

struct ModelWitness {
    std::array<int, kMaxDim> N{};
    AxisSet J = 0;
};

struct ModelLevel {
    double eigenvalue = 0.0;
    int units = 0;  // eigenvalue / t, an integer
    int multiplicity = 0;
    ModelWitness witness;
};

struct ModelSpectrum {
    ModelOperatorSpec spec;
    std::vector<ModelLevel> entries;  // ascending
};

// Lowest `count` distinct eigenvalues t * sum_j (2N_j + 1 + s_j eps_J^j), by breadth-first
// search over (N, J) in order of the eigenvalue.
inline ModelSpectrum model_spectrum(const ModelOperatorSpec& spec, int count) {
    validate(spec);
    if (count < 1) throw DomainError("model_spectrum needs count >= 1");
    using State = std::pair<int, std::pair<std::array<int, kMaxDim>, AxisSet>>;
    std::priority_queue<State, std::vector<State>, std::greater<>> frontier;
    std::set<std::pair<std::array<int, kMaxDim>, AxisSet>> seen;
    auto units = [&](const std::array<int, kMaxDim>& N, AxisSet J) {
        int u = model_component_shift(spec, J);
        for (int j = 0; j < spec.n; ++j) u += 2 * N[static_cast<std::size_t>(j)] + 1;
        return u;
    };
    for (AxisSet J : axis_subsets(spec.n, spec.q)) {
        const std::array<int, kMaxDim> N{};
        frontier.push({units(N, J), {N, J}});
        seen.insert({N, J});
    }
    ModelSpectrum out;
    out.spec = spec;
    while (!frontier.empty()) {
        const State s = frontier.top();
        frontier.pop();
        if (out.entries.empty() || out.entries.back().units != s.first) {
            if (static_cast<int>(out.entries.size()) == count) break;
            ModelLevel lvl;
            lvl.units = s.first;
            lvl.eigenvalue = spec.t * s.first;
            lvl.witness = {s.second.first, s.second.second};
            out.entries.push_back(lvl);
        }
        ++out.entries.back().multiplicity;
        for (int j = 0; j < spec.n; ++j) {
            auto N = s.second.first;
            ++N[static_cast<std::size_t>(j)];
            if (seen.insert({N, s.second.second}).second) frontier.push({units(N, s.second.second), {N, s.second.second}});
        }
    }
    return out;
}

inline std::string format_witness(const ModelWitness& w, int n) {
    std::string s = "N=(";
    for (int j = 0; j < n; ++j) s += (j ? "," : "") + std::to_string(w.N[static_cast<std::size_t>(j)]);
    return s + ") J=" + format_axes(w.J);
}

struct ModelKernel {
    int dimension = 0;
    AxisSet component = 0;
    std::string generator;
};

inline ModelKernel model_kernel(const ModelOperatorSpec& spec) {
    validate(spec);
    ModelKernel k;
    if (spec.r != spec.q) {
        k.generator = "0";
        return k;
    }
    k.dimension = 1;
    k.component = static_cast<AxisSet>((1u << spec.q) - 1u);
    std::string wedge;
    for (int j = 1; j <= spec.q; ++j) wedge += (j > 1 ? "^dx" : "dx") + std::to_string(j);
    k.generator = "exp(-t|x|^2/2)" + (spec.q ? " " + wedge : std::string());
    return k;
}

// L^2-normalized ground state (t/pi)^{n/4} e^{-t|x|^2/2}.
inline double model_ground_state(const ModelOperatorSpec& spec, const Point& x) {
    validate(spec);
    double r2 = 0.0;
    for (int j = 0; j < spec.n; ++j) r2 += x[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    return std::pow(spec.t / std::numbers::pi, spec.n / 4.0) * std::exp(-0.5 * spec.t * r2);
}

enum class Stencil { second_order, sinc };

inline std::string stencil_name(Stencil s) { return s == Stencil::sinc ? "sinc" : "second_order"; }

inline Stencil parse_stencil(const std::string& s) {
    if (s == "second_order") return Stencil::second_order;
    if (s == "sinc") return Stencil::sinc;
    throw ConfigError("unknown stencil '" + s + "' (expected second_order or sinc)");
}

inline constexpr Eigen::Index kModelDenseCap = 4096;

// 1-D -d^2/dx^2 on the interior points of [-L, L] with Dirichlet truncation.
inline Eigen::MatrixXd second_derivative_1d(double halfwidth, int points, Stencil stencil) {
    if (!(halfwidth > 0.0)) throw DomainError("box half-width must be > 0");
    if (points < 3) throw DomainError("need at least 3 points per axis");
    const double h = 2.0 * halfwidth / (points + 1);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(points, points);
    for (int i = 0; i < points; ++i) {
        if (stencil == Stencil::second_order) {
            K(i, i) = 2.0 / (h * h);
            if (i > 0) K(i, i - 1) = K(i - 1, i) = -1.0 / (h * h);
        } else {
            K(i, i) = std::numbers::pi * std::numbers::pi / (3.0 * h * h);
            for (int j = 0; j < i; ++j) {
                const int m = i - j;
                K(i, j) = K(j, i) = 2.0 * (m % 2 ? -1.0 : 1.0) / (h * h * m * m);
            }
        }
    }
    return K;
}

inline std::vector<double> box_points(double halfwidth, int points) {
    const double h = 2.0 * halfwidth / (points + 1);
    std::vector<double> x;
    for (int i = 0; i < points; ++i) x.push_back(-halfwidth + (i + 1) * h);
    return x;
}

inline Eigen::MatrixXd discretize_oscillator(double halfwidth, int points, Stencil stencil = Stencil::second_order) {
    if (points > kModelDenseCap) throw DomainError("discretized oscillator limited to " + std::to_string(kModelDenseCap) + " points");
    Eigen::MatrixXd A = second_derivative_1d(halfwidth, points, stencil);
    const std::vector<double> x = box_points(halfwidth, points);
    for (int i = 0; i < points; ++i) A(i, i) += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    return A;
}

// Dense model operator, block diagonal over the C(n,q) components (lexicographic J),
// each block a Kronecker sum of 1-D operators (first axis slowest).
inline Eigen::MatrixXd discretize_model(const ModelOperatorSpec& spec, double halfwidth, int points,
                                        Stencil stencil = Stencil::second_order) {
    validate(spec);
    if (points < 3) throw DomainError("need at least 3 points per axis");
    const std::vector<AxisSet> sets = axis_subsets(spec.n, spec.q);
    Eigen::Index block = 1;
    for (int j = 0; j < spec.n; ++j) block *= points;
    const Eigen::Index total = block * static_cast<Eigen::Index>(sets.size());
    if (total > kModelDenseCap)
        throw DomainError("discretized model dimension " + std::to_string(total) + " exceeds " + std::to_string(kModelDenseCap));
    Eigen::MatrixXd A1 = second_derivative_1d(halfwidth, points, stencil);
    const std::vector<double> x = box_points(halfwidth, points);
    for (int i = 0; i < points; ++i) A1(i, i) += spec.t * spec.t * x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(block, block);
    for (int axis = 0; axis < spec.n; ++axis) {
        Eigen::Index outer = 1, inner = 1;
        for (int j = 0; j < axis; ++j) outer *= points;
        for (int j = axis + 1; j < spec.n; ++j) inner *= points;
        for (Eigen::Index o = 0; o < outer; ++o)
            for (Eigen::Index in = 0; in < inner; ++in)
                for (int a = 0; a < points; ++a)
                    for (int b = 0; b < points; ++b) {
                        if (A1(a, b) == 0.0) continue;
                        B((o * points + a) * inner + in, (o * points + b) * inner + in) += A1(a, b);
                    }
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(total, total);
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const auto off = static_cast<Eigen::Index>(s) * block;
        A.block(off, off, block, block) = B;
        A.block(off, off, block, block).diagonal().array() += spec.t * model_component_shift(spec, sets[s]);
    }
    return A;
}

// ---- cutoff and trial forms ------------------------------------------------------------------

// Smooth plateau: 1 on [-1,1], 0 outside [-2,2], smoothstep in between.
inline double kappa(double y) {
    const double a = std::abs(y);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    const double u = std::exp(-1.0 / (2.0 - a));
    const double v = std::exp(-1.0 / (a - 1.0));
    return u / (u + v);
}

inline double kappa_eps(double y, double eps) { return kappa(y / eps); }

struct TrialFormSpec {
    CriticalPoint critical_point;
    double t = 1.0;
    double epsilon = 0.1;
};

enum class MorseChart { separable, quadratic };

inline std::string chart_name(MorseChart c) { return c == MorseChart::separable ? "separable" : "quadratic"; }

inline MorseChart trial_chart(const MorseFunction& f) {
    return f.separable() ? MorseChart::separable : MorseChart::quadratic;
}

// e^{-t|x|^2/2} chi dx^1 ^ ... ^ dx^q in Morse coordinates x around the critical point, with
// dx^1..dx^q the descending directions. For separable f = sum g_j(y_j) the chart is exact:
// x_j^2/2 = |g_j(y_j) - g_j(p_j)|, so the form is e^{-t sum |g_j - g_j(p_j)|} dy_J with J the
// descending axes. Otherwise the quadratic chart from the Hessian eigenframe is used.
inline Cochain trial_form(const TrialFormSpec& spec, const TorusGrid& grid, const MorseFunction& f) {
    const CriticalPoint& cp = spec.critical_point;
    const int n = grid.dimension();
    const int q = cp.index;
    if (!(spec.t >= 0.0) || !(spec.epsilon > 0.0)) throw DomainError("trial form needs t >= 0 and epsilon > 0");
    for (int i = 0; i < n; ++i)
        if (4.0 * spec.epsilon > grid.length(i))
            throw DomainError("cutoff cube of half-width 2*epsilon does not fit: period " + std::to_string(grid.length(i)) +
                              " along axis " + std::to_string(i + 1) + ", minimal period " +
                              std::to_string(4.0 * spec.epsilon));
    const double eps = spec.epsilon, t = spec.t;
    auto offsets = [&](const Point& y, Point& d) {
        double chi = 1.0;
        for (int i = 0; i < n; ++i) {
            d[static_cast<std::size_t>(i)] = detail::periodic_offset(y[static_cast<std::size_t>(i)],
                                                                     cp.coords[static_cast<std::size_t>(i)], grid.length(i));
            chi *= kappa_eps(d[static_cast<std::size_t>(i)], eps);
        }
        return chi;
    };
    const auto& sets = grid.axis_sets(q);
    std::vector<ComponentFunction> comps(sets.size());
    if (trial_chart(f) == MorseChart::separable) {
        AxisSet desc = 0;
        for (int j = 0; j < n; ++j)
            if (f.axis_second_derivative(j, cp.coords[static_cast<std::size_t>(j)]) < 0.0) desc |= AxisSet{1} << j;
        if (cardinality(desc) != q) throw NumericalError("separable chart: descending axes do not match the index");
        std::vector<double> gp(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) gp[static_cast<std::size_t>(j)] = f.axis_part(j, cp.coords[static_cast<std::size_t>(j)]);
        const std::size_t slot = static_cast<std::size_t>(grid.axis_rank(q, desc));
        comps[slot] = [=](const Point& y) {
            Point d{};
            const double chi = offsets(y, d);
            if (chi == 0.0) return 0.0;
            double e = 0.0;
            for (int j = 0; j < n; ++j) {
                const double yj = cp.coords[static_cast<std::size_t>(j)] + d[static_cast<std::size_t>(j)];
                e += std::abs(f.axis_part(j, yj) - gp[static_cast<std::size_t>(j)]);
            }
            return chi * std::exp(-t * e);
        };
    } else {
        // x_i = sqrt|lambda_i| v_i . (y - p); descending directions first.
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return (cp.hessian_eigenvalues[static_cast<std::size_t>(a)] < 0) > (cp.hessian_eigenvalues[static_cast<std::size_t>(b)] < 0);
        });
        Eigen::MatrixXd X(n, n);  // row i: dx^i in the dy basis
        for (int i = 0; i < n; ++i) {
            const int e = order[static_cast<std::size_t>(i)];
            X.row(i) = std::sqrt(std::abs(cp.hessian_eigenvalues[static_cast<std::size_t>(e)])) * cp.eigenvectors.col(e).transpose();
        }
        for (std::size_t s = 0; s < sets.size(); ++s) {
            Eigen::MatrixXd minor(q, q);
            int c = 0;
            for (int k = 0; k < n; ++k)
                if (contains(sets[s], k)) {
                    for (int i = 0; i < q; ++i) minor(i, c) = X(i, k);
                    ++c;
                }
            const double coef = q == 0 ? 1.0 : minor.determinant();
            if (coef == 0.0) continue;
            comps[s] = [=](const Point& y) {
                Point d{};
                const double chi = offsets(y, d);
                if (chi == 0.0) return 0.0;
                Eigen::VectorXd dv(n);
                for (int i = 0; i < n; ++i) dv[i] = d[static_cast<std::size_t>(i)];
                return coef * chi * std::exp(-0.5 * t * (X * dv).squaredNorm());
            };
        }
    }
    return sample_form(grid, q, comps);
}

}  // namespace witten
