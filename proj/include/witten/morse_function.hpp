#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "witten/errors.hpp"
#include "witten/torus_grid.hpp"

namespace witten {

using Hessian = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Gradient = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

enum class Preset { cos_sum, cos_sum_multi, custom_trig };

inline std::string preset_name(Preset p) {
    switch (p) {
        case Preset::cos_sum: return "cos_sum";
        case Preset::cos_sum_multi: return "cos_sum_multi";
        case Preset::custom_trig: return "custom_trig";
    }
    return "?";
}

inline Preset parse_preset(const std::string& s) {
    if (s == "cos_sum") return Preset::cos_sum;
    if (s == "cos_sum_multi") return Preset::cos_sum_multi;
    if (s == "custom_trig") return Preset::custom_trig;
    throw DomainError("unknown preset '" + s + "' (expected cos_sum, cos_sum_multi or custom_trig)");
}

// A * cos(2 pi sum_i k_i x_i / L_i + phase)
struct TrigTerm {
    double amplitude = 1.0;
    std::array<int, kMaxDim> wavevector{};
    double phase = 0.0;
};

struct MorseFunctionSpec {
    Preset preset = Preset::cos_sum;
    // cos_sum: one frequency/amplitude per axis. cos_sum_multi: a list of harmonics per axis.
    std::vector<std::vector<int>> frequencies;
    std::vector<std::vector<double>> amplitudes;
    // custom_trig only.
    std::vector<TrigTerm> terms;
};

inline MorseFunctionSpec cos_sum_spec(const std::vector<int>& freq, const std::vector<double>& amp) {
    MorseFunctionSpec s;
    s.preset = Preset::cos_sum;
    for (int k : freq) s.frequencies.push_back({k});
    for (double a : amp) s.amplitudes.push_back({a});
    return s;
}

// Exact f, grad f, Hess f for a finite trigonometric sum on the torus.
class MorseFunction {
public:
    MorseFunction(const MorseFunctionSpec& spec, int n, const std::vector<double>& lengths)
        : spec_(spec), n_(n) {
        if (n < 1 || n > kMaxDim) throw DomainError("dimension must be in 1..3");
        if (static_cast<int>(lengths.size()) != n) throw DomainError("one period length per axis required");
        for (int i = 0; i < n; ++i) L_[i] = lengths[i];
        switch (spec.preset) {
            case Preset::cos_sum:
            case Preset::cos_sum_multi: build_axis_terms(spec); break;
            case Preset::custom_trig: build_custom_terms(spec); break;
        }
        if (terms_.empty()) throw DomainError("Morse function has no terms");
    }

    int dimension() const { return n_; }
    const MorseFunctionSpec& spec() const { return spec_; }
    const std::vector<TrigTerm>& terms() const { return terms_; }
    double period(int axis) const { return L_[axis]; }

    double value(const Point& x) const {
        double f = 0.0;
        for (std::size_t t = 0; t < terms_.size(); ++t) f += terms_[t].amplitude * std::cos(phase_at(t, x));
        return f;
    }

    Gradient gradient(const Point& x) const {
        Gradient g = Gradient::Zero(n_);
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            const double s = -terms_[t].amplitude * std::sin(phase_at(t, x));
            for (int i = 0; i < n_; ++i) g[i] += s * omega_[t][i];
        }
        return g;
    }

    Hessian hessian(const Point& x) const {
        Hessian H = Hessian::Zero(n_, n_);
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            const double c = -terms_[t].amplitude * std::cos(phase_at(t, x));
            for (int i = 0; i < n_; ++i)
                for (int j = 0; j < n_; ++j) H(i, j) += c * omega_[t][i] * omega_[t][j];
        }
        return H;
    }

    // Every term depends on a single coordinate.
    bool separable() const {
        for (const auto& t : terms_) {
            int nz = 0;
            for (int i = 0; i < n_; ++i) nz += t.wavevector[i] != 0;
            if (nz != 1) return false;
        }
        return true;
    }

    // Separable case: f = sum_j g_j(x_j). Returns g_j and its second derivative.
    double axis_part(int axis, double x) const { return axis_eval(axis, x, 0); }
    double axis_second_derivative(int axis, double x) const { return axis_eval(axis, x, 2); }

    // Lipschitz bound: sup |grad f| <= sum_t |A_t| |omega_t|.
    double gradient_bound() const {
        double b = 0.0;
        for (std::size_t t = 0; t < terms_.size(); ++t) b += std::abs(terms_[t].amplitude) * omega_norm(t);
        return b;
    }

    double hessian_bound() const {
        double b = 0.0;
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            const double w = omega_norm(t);
            b += std::abs(terms_[t].amplitude) * w * w;
        }
        return b;
    }

    // max f - min f <= 2 sum |A_t|
    double oscillation_bound() const {
        double b = 0.0;
        for (const auto& t : terms_) b += 2.0 * std::abs(t.amplitude);
        return b;
    }

    MorseFunction negated() const {
        MorseFunctionSpec s;
        s.preset = Preset::custom_trig;
        for (const auto& t : terms_) s.terms.push_back({-t.amplitude, t.wavevector, t.phase});
        return MorseFunction(s, n_, {L_.begin(), L_.begin() + n_});
    }

    // f(x + shift)
    MorseFunction translated(const Point& shift) const {
        MorseFunctionSpec s;
        s.preset = Preset::custom_trig;
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            double ph = terms_[t].phase;
            for (int i = 0; i < n_; ++i) ph += omega_[t][i] * shift[i];
            s.terms.push_back({terms_[t].amplitude, terms_[t].wavevector, ph});
        }
        return MorseFunction(s, n_, {L_.begin(), L_.begin() + n_});
    }

private:
    void build_axis_terms(const MorseFunctionSpec& spec) {
        if (static_cast<int>(spec.frequencies.size()) != n_ || static_cast<int>(spec.amplitudes.size()) != n_)
            throw DomainError(preset_name(spec.preset) + " needs frequencies and amplitudes for each of the " +
                              std::to_string(n_) + " axes");
        for (int i = 0; i < n_; ++i) {
            const auto& fk = spec.frequencies[i];
            const auto& ak = spec.amplitudes[i];
            if (fk.size() != ak.size() || fk.empty())
                throw DomainError("axis " + std::to_string(i + 1) + ": frequencies and amplitudes differ in length");
            if (spec.preset == Preset::cos_sum && fk.size() != 1)
                throw DomainError("cos_sum takes a single frequency per axis; use cos_sum_multi");
            for (std::size_t m = 0; m < fk.size(); ++m) {
                if (fk[m] == 0) throw DomainError("zero frequency on axis " + std::to_string(i + 1));
                if (ak[m] == 0.0 || !std::isfinite(ak[m]))
                    throw DomainError("zero or non-finite amplitude on axis " + std::to_string(i + 1));
                TrigTerm t;
                t.amplitude = ak[m];
                t.wavevector[i] = fk[m];
                add_term(t);
            }
        }
    }

    void build_custom_terms(const MorseFunctionSpec& spec) {
        for (const auto& t : spec.terms) {
            bool any = false;
            for (int i = 0; i < n_; ++i) any = any || t.wavevector[i] != 0;
            for (int i = n_; i < kMaxDim; ++i)
                if (t.wavevector[i] != 0) throw DomainError("wavevector has components beyond the dimension");
            if (!any) throw DomainError("custom_trig term with zero wavevector");
            if (t.amplitude == 0.0 || !std::isfinite(t.amplitude) || !std::isfinite(t.phase))
                throw DomainError("custom_trig term with zero or non-finite amplitude");
            add_term(t);
        }
    }

    void add_term(const TrigTerm& t) {
        terms_.push_back(t);
        std::array<double, kMaxDim> w{};
        for (int i = 0; i < n_; ++i) w[i] = 2.0 * std::numbers::pi * t.wavevector[i] / L_[i];
        omega_.push_back(w);
    }

    double phase_at(std::size_t t, const Point& x) const {
        double ph = terms_[t].phase;
        for (int i = 0; i < n_; ++i) ph += omega_[t][i] * x[i];
        return ph;
    }

    double omega_norm(std::size_t t) const {
        double s = 0.0;
        for (int i = 0; i < n_; ++i) s += omega_[t][i] * omega_[t][i];
        return std::sqrt(s);
    }

    double axis_eval(int axis, double x, int order) const {
        if (!separable()) throw DomainError("axis decomposition needs a separable function");
        double v = 0.0;
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            if (terms_[t].wavevector[axis] == 0) continue;
            const double w = omega_[t][axis];
            const double c = terms_[t].amplitude * std::cos(w * x + terms_[t].phase);
            v += order == 0 ? c : -w * w * c;
        }
        return v;
    }

    MorseFunctionSpec spec_;
    int n_;
    std::array<double, kMaxDim> L_{};
    std::vector<TrigTerm> terms_;
    std::vector<std::array<double, kMaxDim>> omega_;
};

inline MorseFunction preset_function(const MorseFunctionSpec& spec, const std::vector<double>& lengths) {
    return MorseFunction(spec, static_cast<int>(lengths.size()), lengths);
}

struct CriticalPoint {
    Point coords{};
    std::vector<double> hessian_eigenvalues;
    Hessian eigenvectors;  // columns match hessian_eigenvalues
    int index = 0;
    double f_value = 0.0;
};

struct MorseProfile {
    std::vector<int> m;
    std::vector<CriticalPoint> points;
    int flagged_cells = 0;
    int rescued_points = 0;
};

struct CriticalPointOptions {
    double newton_tol = 1e-12;
    int max_iterations = 100;
};

inline double degeneracy_tolerance(const Hessian& H) { return 1e-8 * H.cwiseAbs().maxCoeff(); }

// Number of strictly negative eigenvalues.
inline int critical_index(const Hessian& H) {
    if (H.rows() != H.cols() || H.rows() < 1 || H.rows() > kMaxDim) throw DomainError("Hessian must be square, n <= 3");
    Eigen::SelfAdjointEigenSolver<Hessian> es(H, Eigen::EigenvaluesOnly);
    const double tol = degeneracy_tolerance(H);
    int idx = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double l = es.eigenvalues()[i];
        if (std::abs(l) <= tol) throw NotMorseError("not a Morse function: Hessian eigenvalue " + std::to_string(l) +
                                                    " within the degeneracy tolerance");
        idx += l < 0.0;
    }
    return idx;
}

namespace detail {

inline double wrap_coordinate(double x, double L) {
    double y = std::fmod(x, L);
    if (y < 0.0) y += L;
    if (L - y < 1e-13 * L || y < 1e-13 * L) y = 0.0;
    return y;
}

inline double periodic_offset(double a, double b, double L) {
    double d = std::fmod(a - b, L);
    if (d > L / 2) d -= L;
    if (d < -L / 2) d += L;
    return d;
}

// Newton on grad f = 0 with a step cap. Returns true on convergence.
inline bool newton_solve(const MorseFunction& f, Point& x, double step_cap, const CriticalPointOptions& opt) {
    const int n = f.dimension();
    const double floor_tol = std::max(opt.newton_tol, 64.0 * std::numeric_limits<double>::epsilon() * f.gradient_bound());
    for (int it = 0; it < opt.max_iterations; ++it) {
        const Gradient g = f.gradient(x);
        const double gn = g.norm();
        if (gn <= opt.newton_tol) return true;
        const Hessian H = f.hessian(x);
        Eigen::FullPivLU<Hessian> lu(H);
        if (!lu.isInvertible()) return false;
        Gradient step = lu.solve(-g);
        const double sn = step.norm();
        if (!std::isfinite(sn)) return false;
        if (sn > step_cap) step *= step_cap / sn;
        for (int i = 0; i < n; ++i) x[i] += step[i];
        if (sn < 1e-15 * step_cap && f.gradient(x).norm() <= floor_tol) return true;
    }
    return f.gradient(x).norm() <= floor_tol;
}

}  // namespace detail

inline CriticalPoint classify_point(const MorseFunction& f, const Point& x) {
    const int n = f.dimension();
    CriticalPoint cp;
    for (int i = 0; i < n; ++i) cp.coords[i] = detail::wrap_coordinate(x[i], f.period(i));
    const Hessian H = f.hessian(cp.coords);
    Eigen::SelfAdjointEigenSolver<Hessian> es(H);
    const double tol = degeneracy_tolerance(H);
    cp.eigenvectors = es.eigenvectors();
    for (int i = 0; i < n; ++i) {
        const double l = es.eigenvalues()[i];
        if (std::abs(l) <= tol) {
            std::string where;
            for (int j = 0; j < n; ++j) where += (j ? "," : "") + std::to_string(cp.coords[j]);
            throw NotMorseError("not a Morse function: degenerate critical point at (" + where + ")");
        }
        cp.hessian_eigenvalues.push_back(l);
        cp.index += l < 0.0;
    }
    cp.f_value = f.value(cp.coords);
    return cp;
}

inline std::vector<int> morse_counts(const MorseProfile& profile) {
    std::vector<int> m(profile.m.size(), 0);
    for (const auto& p : profile.points) {
        if (p.index < 0 || p.index >= static_cast<int>(m.size())) throw DomainError("critical point index out of range");
        ++m[static_cast<std::size_t>(p.index)];
    }
    int chi = 0;
    for (std::size_t j = 0; j < m.size(); ++j) chi += (j % 2 == 0 ? 1 : -1) * m[j];
    if (chi != 0)
        throw NumericalError("Morse counts have alternating sum " + std::to_string(chi) +
                             " but the torus has Euler characteristic 0: critical point set incomplete");
    return m;
}

// Newton from every vertex, periodic dedup, then a sign-change sweep over the n-cubes.
inline MorseProfile find_critical_points(const MorseFunction& f, const TorusGrid& grid,
                                         const CriticalPointOptions& opt = {}) {
    const int n = grid.dimension();
    if (f.dimension() != n) throw DomainError("function and grid dimensions differ");
    for (int i = 0; i < n; ++i)
        if (std::abs(f.period(i) - grid.length(i)) > 1e-12 * grid.length(i))
            throw DomainError("function periods do not match the grid lengths");
    const double step_cap = grid.max_spacing();
    const double dedup_radius = grid.min_spacing() / 2;

    std::vector<Point> found;
    for (std::int64_t v = 0; v < grid.vertex_count(); ++v) {
        Point x = grid.vertex_point(v);
        if (!detail::newton_solve(f, x, step_cap, opt)) continue;
        for (int i = 0; i < n; ++i) x[i] = detail::wrap_coordinate(x[i], grid.length(i));
        found.push_back(x);
    }
    std::sort(found.begin(), found.end());

    auto same = [&](const Point& a, const Point& b) {
        double d2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = detail::periodic_offset(a[i], b[i], grid.length(i));
            d2 += d * d;
        }
        return std::sqrt(d2) < dedup_radius;
    };
    std::vector<Point> unique;
    auto add_unique = [&](const Point& x) {
        for (const auto& u : unique)
            if (same(u, x)) return false;
        unique.push_back(x);
        return true;
    };
    for (const auto& x : found) add_unique(x);

    MorseProfile prof;
    // Sign-change sweep: a cube where every gradient component changes sign (or vanishes) at its
    // corners may hold a critical point. Unclaimed cubes get extra Newton seeds.
    const int corners = 1 << n;
    for (std::int64_t v = 0; v < grid.vertex_count(); ++v) {
        const MultiIndex k = grid.vertex_multi_index(v);
        std::array<double, kMaxDim> lo{}, hi{};
        lo.fill(1e300);
        hi.fill(-1e300);
        for (int c = 0; c < corners; ++c) {
            Point x{};
            for (int i = 0; i < n; ++i) x[i] = (k[i] + ((c >> i) & 1)) * grid.spacing(i);
            const Gradient g = f.gradient(x);
            for (int i = 0; i < n; ++i) {
                lo[i] = std::min(lo[i], g[i]);
                hi[i] = std::max(hi[i], g[i]);
            }
        }
        bool flagged = true;
        for (int i = 0; i < n; ++i) flagged = flagged && lo[i] <= 0.0 && hi[i] >= 0.0;
        if (!flagged) continue;
        ++prof.flagged_cells;
        auto claimed = [&]() {
            for (const auto& u : unique) {
                bool inside = true;
                for (int i = 0; i < n; ++i) {
                    const double h = grid.spacing(i);
                    const double off = detail::periodic_offset(u[i], (k[i] + 0.5) * h, grid.length(i));
                    inside = inside && std::abs(off) <= h;
                }
                if (inside) return true;
            }
            return false;
        };
        if (claimed()) continue;
        bool any_converged = false;
        for (int c = 0; c <= corners; ++c) {
            Point x{};
            for (int i = 0; i < n; ++i) {
                const double frac = c == corners ? 0.5 : (((c >> i) & 1) ? 0.75 : 0.25);
                x[i] = (k[i] + frac) * grid.spacing(i);
            }
            if (!detail::newton_solve(f, x, step_cap / 4, opt)) continue;
            any_converged = true;
            for (int i = 0; i < n; ++i) x[i] = detail::wrap_coordinate(x[i], grid.length(i));
            if (add_unique(x)) ++prof.rescued_points;
        }
        if (!any_converged)
            throw NumericalError("Newton failed from every seed in a flagged cell at vertex " + std::to_string(v));
    }

    std::sort(unique.begin(), unique.end());
    for (const auto& x : unique) prof.points.push_back(classify_point(f, x));
    prof.m.assign(static_cast<std::size_t>(n + 1), 0);
    prof.m = morse_counts(prof);
    return prof;
}

}  // namespace witten
