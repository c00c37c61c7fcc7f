#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "witten/errors.hpp"
#include "witten/multiprecision.hpp"
#include "witten/rank.hpp"
#include "witten/witten_complex.hpp"

namespace witten {

// Weighted graph Dirichlet problem  sum_e c_e (w_a - w_b)^2 = lambda sum_v pi_v w_v^2  with
// c_e = weight_e exp(-2t(E_e - E_ref)), pi_v = weight_v exp(-2t(E_v - E_ref)).
// The bottom and top degrees of the deformed complex are of this form after the substitution
// w = e^{tf} u (degree 0) or the dual one with f -> -f (degree n).
struct DirichletGraph {
    struct Edge {
        std::int64_t a = 0, b = 0;
        double energy = 0.0, weight = 0.0;
    };
    std::vector<double> node_energy, node_weight;
    std::vector<Edge> edges;
    std::vector<std::int64_t> order_key;
};

inline DirichletGraph primal_graph(const DeformedComplex& c) {
    const TorusGrid& g = c.grid();
    DirichletGraph G;
    const Eigen::VectorXd& f0 = c.midpoint_values(0);
    G.node_energy.assign(f0.data(), f0.data() + f0.size());
    const Eigen::VectorXd& m0 = c.mass(0).diagonal;
    G.node_weight.assign(m0.data(), m0.data() + m0.size());
    const SparseMatrix& d0 = c.coboundary(0);
    for (Eigen::Index r = 0; r < d0.outerSize(); ++r) {
        DirichletGraph::Edge e;
        for (SparseMatrix::InnerIterator it(d0, r); it; ++it) (it.value() < 0 ? e.a : e.b) = it.col();
        e.energy = c.midpoint_values(1)[r];
        e.weight = c.mass(1).diagonal[r];
        G.edges.push_back(e);
    }
    G.order_key = folded_cell_key(g, 0);
    return G;
}

inline DirichletGraph dual_graph(const DeformedComplex& c) {
    const TorusGrid& g = c.grid();
    const int n = g.dimension();
    DirichletGraph G;
    const Eigen::VectorXd& fn = c.midpoint_values(n);
    const Eigen::VectorXd& mn = c.mass(n).diagonal;
    for (Eigen::Index i = 0; i < fn.size(); ++i) {
        G.node_energy.push_back(-fn[i]);
        G.node_weight.push_back(1.0 / mn[i]);
    }
    const SparseMatrix dT = SparseMatrix(c.coboundary(n - 1).transpose());
    for (Eigen::Index r = 0; r < dT.outerSize(); ++r) {
        DirichletGraph::Edge e;
        int seen = 0;
        for (SparseMatrix::InnerIterator it(dT, r); it; ++it) {
            (seen == 0 ? e.a : e.b) = it.col();
            ++seen;
        }
        if (seen != 2) throw NumericalError("dual graph: facet without exactly two cofaces");
        e.energy = -c.midpoint_values(n - 1)[r];
        e.weight = 1.0 / c.mass(n - 1).diagonal[r];
        G.edges.push_back(e);
    }
    G.order_key = folded_cell_key(g, n);
    return G;
}

struct TunnelingSpectrum {
    bool available = false;
    std::string reason;
    int kernel_dim = 0;                  // exact zeros: connected components
    std::vector<double> tunneling;       // nonzero low eigenvalues, ascending
    std::vector<std::int64_t> wells;     // representative node of each kept well
    double series_ratio = 0.0;           // lambda_max * growth of the Neumann series terms
    int digits = 0;
    std::int64_t bandwidth = 0;
};

struct TunnelingOptions {
    int series_terms = 4;
    double max_truncation = 1e-10;  // allowed series_ratio^series_terms
    double max_work = 5e9;  // multiply-adds allowed in the banded elimination
};

namespace detail {

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace detail

// Low spectrum of the graph problem: exact kernel plus the exponentially small eigenvalues,
// with relative accuracy. Wells are kept as a border, everything else is eliminated by
// subtraction-free (GTH) banded Gaussian elimination, and the reduced nonlinear problem
//   S0 w = lambda (W1 + lambda W2 + lambda^2 W3 + ...) w
// is solved in multiprecision. All reduced quantities are sums of non-negative terms.
inline TunnelingSpectrum graph_low_spectrum(const DirichletGraph& G, double t, const TunnelingOptions& opt = {}) {
    TunnelingSpectrum out;
    const auto N = static_cast<std::int64_t>(G.node_energy.size());
    if (N < 2) throw DomainError("graph needs at least two nodes");

    double eref = std::numeric_limits<double>::infinity(), emax = -eref;
    for (double e : G.node_energy) {
        eref = std::min(eref, e);
        emax = std::max(emax, e);
    }
    for (const auto& e : G.edges) emax = std::max(emax, e.energy);
    if (2.0 * t * (emax - eref) > 690.0) {
        out.reason = "exponent range 2t*(E_max - E_min) exceeds double range";
        return out;
    }
    auto boltz = [&](double E, double w) { return w * std::exp(-2.0 * t * (E - eref)); };

    // adjacency for well detection and components
    std::vector<std::vector<std::int64_t>> nbr(static_cast<std::size_t>(N));
    UnionFind comps(N);
    for (const auto& e : G.edges) {
        nbr[static_cast<std::size_t>(e.a)].push_back(e.b);
        nbr[static_cast<std::size_t>(e.b)].push_back(e.a);
        comps.unite(e.a, e.b);
    }
    out.kernel_dim = static_cast<int>(comps.components());

    // wells: local minima of the node energy, tied plateaus merged
    auto tie = [](double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); };
    std::vector<char> is_min(static_cast<std::size_t>(N), 0);
    for (std::int64_t v = 0; v < N; ++v) {
        bool m = true;
        const double ev = G.node_energy[static_cast<std::size_t>(v)];
        for (auto u : nbr[static_cast<std::size_t>(v)]) {
            const double eu = G.node_energy[static_cast<std::size_t>(u)];
            if (eu < ev && !tie(eu, ev)) {
                m = false;
                break;
            }
        }
        is_min[static_cast<std::size_t>(v)] = m;
    }
    UnionFind plateau(N);
    for (const auto& e : G.edges)
        if (is_min[static_cast<std::size_t>(e.a)] && is_min[static_cast<std::size_t>(e.b)] &&
            tie(G.node_energy[static_cast<std::size_t>(e.a)], G.node_energy[static_cast<std::size_t>(e.b)]))
            plateau.unite(e.a, e.b);
    std::vector<std::int64_t> kept;
    for (std::int64_t v = 0; v < N; ++v)
        if (is_min[static_cast<std::size_t>(v)] && plateau.find(v) == v) kept.push_back(v);
    out.wells = kept;
    const auto m = static_cast<std::size_t>(kept.size());

    // elimination order: folded key, wells moved to the border
    std::vector<std::int64_t> kpos(static_cast<std::size_t>(N), -1), rpos(static_cast<std::size_t>(N), -1);
    for (std::size_t i = 0; i < m; ++i) kpos[static_cast<std::size_t>(kept[i])] = static_cast<std::int64_t>(i);
    std::vector<std::int64_t> order;
    for (std::int64_t v = 0; v < N; ++v)
        if (kpos[static_cast<std::size_t>(v)] < 0) order.push_back(v);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        return G.order_key[static_cast<std::size_t>(a)] < G.order_key[static_cast<std::size_t>(b)];
    });
    const auto nR = static_cast<std::int64_t>(order.size());
    for (std::int64_t i = 0; i < nR; ++i) rpos[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;

    std::int64_t bw = 1;
    for (const auto& e : G.edges) {
        const auto pa = rpos[static_cast<std::size_t>(e.a)], pb = rpos[static_cast<std::size_t>(e.b)];
        if (pa >= 0 && pb >= 0) bw = std::max(bw, std::abs(pa - pb));
    }
    out.bandwidth = bw;
    if (static_cast<double>(nR) * static_cast<double>(bw) * static_cast<double>(bw) / 2 > opt.max_work) {
        out.reason = "banded elimination too large (bandwidth " + std::to_string(bw) + ")";
        return out;
    }

    const auto B = static_cast<std::size_t>(bw);
    std::vector<double> U(static_cast<std::size_t>(nR) * B, 0.0);   // U[i*B + (j-i-1)] = c_ij, j > i
    std::vector<double> bord(static_cast<std::size_t>(nR) * m, 0.0);  // c_{i,k}
    std::vector<double> SKK(m * m, 0.0);                              // conductances between wells
    for (const auto& e : G.edges) {
        const double c = boltz(e.energy, e.weight);
        const auto pa = rpos[static_cast<std::size_t>(e.a)], pb = rpos[static_cast<std::size_t>(e.b)];
        const auto ka = kpos[static_cast<std::size_t>(e.a)], kb = kpos[static_cast<std::size_t>(e.b)];
        if (pa >= 0 && pb >= 0) {
            const auto lo = std::min(pa, pb), hi = std::max(pa, pb);
            U[static_cast<std::size_t>(lo) * B + static_cast<std::size_t>(hi - lo - 1)] += c;
        } else if (pa >= 0) {
            bord[static_cast<std::size_t>(pa) * m + static_cast<std::size_t>(kb)] += c;
        } else if (pb >= 0) {
            bord[static_cast<std::size_t>(pb) * m + static_cast<std::size_t>(ka)] += c;
        } else if (ka != kb) {
            SKK[static_cast<std::size_t>(ka) * m + static_cast<std::size_t>(kb)] += c;
            SKK[static_cast<std::size_t>(kb) * m + static_cast<std::size_t>(ka)] += c;
        }
    }
    const std::vector<double> bord0 = bord;
    std::vector<double> piR(static_cast<std::size_t>(nR)), piK(m);
    for (std::int64_t i = 0; i < nR; ++i) {
        const auto v = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
        piR[static_cast<std::size_t>(i)] = boltz(G.node_energy[v], G.node_weight[v]);
    }
    for (std::size_t k = 0; k < m; ++k) {
        const auto v = static_cast<std::size_t>(kept[k]);
        piK[k] = boltz(G.node_energy[v], G.node_weight[v]);
    }

    // GTH elimination: the pivot is the sum of the remaining off-diagonal conductances.
    std::vector<double> dpiv(static_cast<std::size_t>(nR));
    for (std::int64_t i = 0; i < nR; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * B;
        const std::size_t brow = static_cast<std::size_t>(i) * m;
        double d = 0.0;
        for (std::size_t a = 0; a < B; ++a) d += U[row + a];
        for (std::size_t k = 0; k < m; ++k) d += bord[brow + k];
        if (!(d > 0.0)) throw NumericalError("GTH elimination: node without remaining conductance");
        dpiv[static_cast<std::size_t>(i)] = d;
        const std::size_t reach = std::min<std::size_t>(B, static_cast<std::size_t>(nR - 1 - i));
        for (std::size_t a = 0; a < reach; ++a) {
            const double cij = U[row + a];
            if (cij == 0.0) continue;
            const double f = cij / d;
            const std::size_t j = static_cast<std::size_t>(i) + a + 1;
            double* uj = &U[j * B];
            for (std::size_t a2 = a + 1; a2 < reach; ++a2) {
                const double cil = U[row + a2];
                if (cil != 0.0) uj[a2 - a - 1] += f * cil;
            }
            for (std::size_t k = 0; k < m; ++k) bord[j * m + k] += f * bord[brow + k];
        }
        for (std::size_t k = 0; k < m; ++k) {
            const double ck = bord[brow + k];
            if (ck == 0.0) continue;
            for (std::size_t l = k + 1; l < m; ++l) {
                const double add = ck * bord[brow + l] / d;
                SKK[k * m + l] += add;
                SKK[l * m + k] += add;
            }
        }
        for (std::size_t a = 0; a < B; ++a) U[row + a] /= d;
    }

    // L_rr^{-1} b for b >= 0: forward and backward sweeps without subtraction
    auto solve = [&](std::vector<double>& x) {
        for (std::int64_t i = 0; i < nR; ++i) {
            const double yi = x[static_cast<std::size_t>(i)];
            if (yi == 0.0) continue;
            const std::size_t reach = std::min<std::size_t>(B, static_cast<std::size_t>(nR - 1 - i));
            for (std::size_t a = 0; a < reach; ++a)
                x[static_cast<std::size_t>(i) + a + 1] += U[static_cast<std::size_t>(i) * B + a] * yi;
        }
        for (std::int64_t i = 0; i < nR; ++i) x[static_cast<std::size_t>(i)] /= dpiv[static_cast<std::size_t>(i)];
        for (std::int64_t i = nR - 1; i >= 0; --i) {
            const std::size_t reach = std::min<std::size_t>(B, static_cast<std::size_t>(nR - 1 - i));
            double s = x[static_cast<std::size_t>(i)];
            for (std::size_t a = 0; a < reach; ++a)
                s += U[static_cast<std::size_t>(i) * B + a] * x[static_cast<std::size_t>(i) + a + 1];
            x[static_cast<std::size_t>(i)] = s;
        }
    };

    // harmonic extension H and the series X_j = (L^{-1} Pi)^j H
    const int terms = std::max(1, opt.series_terms);
    std::vector<std::vector<std::vector<double>>> X(static_cast<std::size_t>(terms));
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> h(static_cast<std::size_t>(nR));
        for (std::int64_t i = 0; i < nR; ++i) h[static_cast<std::size_t>(i)] = bord0[static_cast<std::size_t>(i) * m + k];
        solve(h);
        X[0].push_back(h);
    }
    for (int j = 1; j < terms; ++j)
        for (std::size_t k = 0; k < m; ++k) {
            std::vector<double> x = X[static_cast<std::size_t>(j - 1)][k];
            for (std::int64_t i = 0; i < nR; ++i) x[static_cast<std::size_t>(i)] *= piR[static_cast<std::size_t>(i)];
            solve(x);
            X[static_cast<std::size_t>(j)].push_back(std::move(x));
        }
    // W_1 = Pi_K + H^T Pi H, W_{j+1} = H^T Pi X_j
    std::vector<std::vector<double>> W(static_cast<std::size_t>(terms), std::vector<double>(m * m, 0.0));
    for (int j = 0; j < terms; ++j)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) {
                double s = 0.0;
                const auto& ha = X[0][a];
                const auto& xb = X[static_cast<std::size_t>(j)][b];
                for (std::int64_t i = 0; i < nR; ++i)
                    s += ha[static_cast<std::size_t>(i)] * piR[static_cast<std::size_t>(i)] * xb[static_cast<std::size_t>(i)];
                W[static_cast<std::size_t>(j)][a * m + b] = s;
            }
    for (std::size_t k = 0; k < m; ++k) W[0][k * m + k] += piK[k];
    for (int j = 0; j < terms; ++j)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a + 1; b < m; ++b) {
                const double s = 0.5 * (W[static_cast<std::size_t>(j)][a * m + b] + W[static_cast<std::size_t>(j)][b * m + a]);
                W[static_cast<std::size_t>(j)][a * m + b] = W[static_cast<std::size_t>(j)][b * m + a] = s;
            }

    if (m <= static_cast<std::size_t>(out.kernel_dim)) {
        out.available = true;
        return out;
    }

    // digits: enough to hold the dynamic range of the reduced data with margin
    double lo = std::numeric_limits<double>::max(), hi = 0.0;
    auto track = [&](double v) {
        if (v > 0.0) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    };
    for (double v : SKK) track(v);
    for (double v : W[0]) track(v);
    out.digits = 40 + 2 * static_cast<int>(std::ceil(std::log10(hi / lo)));
    ScopedPrecision prec(static_cast<unsigned>(out.digits));

    MpMatrix S0(m, m);
    for (std::size_t a = 0; a < m; ++a) {
        mp_real diag = 0;
        for (std::size_t b = 0; b < m; ++b) {
            if (a == b) continue;
            const mp_real c(SKK[a * m + b]);
            S0(a, b) = -c;
            diag += c;
        }
        S0(a, a) = diag;
    }
    auto pencil = [&](const mp_real& lam) {
        MpMatrix P(m, m);
        mp_real pw = 1;
        for (int j = 0; j < terms; ++j) {
            for (std::size_t e = 0; e < m * m; ++e) P.a[e] += pw * mp_real(W[static_cast<std::size_t>(j)][e]);
            pw *= lam;
        }
        return P;
    };
    std::vector<mp_real> lam = mp_generalized_eigenvalues(S0, pencil(mp_real(0)));
    const auto c0 = static_cast<std::size_t>(out.kernel_dim);
    for (std::size_t i = c0; i < m; ++i) {
        mp_real li = lam[i];
        for (int it = 0; it < 4; ++it) {
            const mp_real next = mp_generalized_eigenvalues(S0, pencil(li))[i];
            const bool settled = abs(next - li) <= abs(next) * mp_real(1e-30);
            li = next;
            if (settled) break;
        }
        out.tunneling.push_back(static_cast<double>(li));
    }
    std::sort(out.tunneling.begin(), out.tunneling.end());

    double growth = 0.0;
    for (int j = 0; j + 1 < terms; ++j) {
        const double a = detail::max_abs(W[static_cast<std::size_t>(j)]);
        const double b = detail::max_abs(W[static_cast<std::size_t>(j + 1)]);
        if (a > 0.0) growth = std::max(growth, b / a);
    }
    out.series_ratio = (out.tunneling.empty() ? 0.0 : out.tunneling.back()) * growth;
    out.available = std::pow(out.series_ratio, terms) <= opt.max_truncation;
    if (!out.available) out.reason = "Neumann series ratio " + std::to_string(out.series_ratio) + " too large for the truncation";
    return out;
}

// Exact kernel and tunneling eigenvalues of the symmetrized Laplacian in degree q where the
// complex allows it: q = 0 and q = n directly, q = 1 on T^2 through the Hodge splitting
// (its nonzero low spectrum is the union of those of degrees 0 and 2).
struct ResolvedLowSpectrum {
    bool available = false;
    std::string method;
    std::string reason;
    int kernel_dim = 0;
    std::vector<double> tunneling;
    double series_ratio = 0.0;

    std::vector<double> cluster() const {
        std::vector<double> v(static_cast<std::size_t>(kernel_dim), 0.0);
        v.insert(v.end(), tunneling.begin(), tunneling.end());
        return v;
    }
};

inline ResolvedLowSpectrum resolve_low_spectrum(const DeformedComplex& c, int q, const TunnelingOptions& opt = {}) {
    const int n = c.dimension();
    c.grid().check_degree(q);
    ResolvedLowSpectrum r;
    auto from = [&](const TunnelingSpectrum& s, const std::string& name) {
        r.available = s.available;
        r.reason = s.reason;
        r.method = name;
        r.kernel_dim = s.kernel_dim;
        r.tunneling = s.tunneling;
        r.series_ratio = s.series_ratio;
    };
    if (q == 0) {
        from(graph_low_spectrum(primal_graph(c), c.t(), opt), "gth_primal_graph");
        return r;
    }
    if (q == n) {
        from(graph_low_spectrum(dual_graph(c), c.t(), opt), "gth_dual_graph");
        return r;
    }
    if (n == 2 && q == 1) {
        const TunnelingSpectrum lo = graph_low_spectrum(primal_graph(c), c.t(), opt);
        const TunnelingSpectrum hi = graph_low_spectrum(dual_graph(c), c.t(), opt);
        r.method = "hodge_split";
        r.available = lo.available && hi.available;
        r.reason = lo.available ? hi.reason : lo.reason;
        // rank d_t = rank d (diagonal conjugation); rank d_0 = V - components, rank d_1 = F - dual components
        const std::int64_t rank0 = c.grid().cell_count(0) - lo.kernel_dim;
        const std::int64_t rank1 = c.grid().cell_count(2) - hi.kernel_dim;
        r.kernel_dim = static_cast<int>(c.grid().cell_count(1) - rank0 - rank1);
        r.tunneling = lo.tunneling;
        r.tunneling.insert(r.tunneling.end(), hi.tunneling.begin(), hi.tunneling.end());
        std::sort(r.tunneling.begin(), r.tunneling.end());
        r.series_ratio = std::max(lo.series_ratio, hi.series_ratio);
        return r;
    }
    r.method = "none";
    r.reason = "no graph structure in degree " + std::to_string(q) + " for n = " + std::to_string(n);
    return r;
}

}  // namespace witten
