#pragma once

#include <toml.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "witten/eigensolver.hpp"
#include "witten/errors.hpp"
#include "witten/morse_function.hpp"
#include "witten/torus_grid.hpp"

namespace witten {

struct ManifoldConfig {
    int n = 2;
    std::vector<double> lengths;
    std::vector<int> resolutions;
};

struct DeformationConfig {
    std::vector<double> t_list;
    double C = 0.0;        // fixed-threshold constant; 0 means half of epsilon^2/4
    double epsilon = 0.1;  // trial-form cutoff radius
};

struct SolverConfig {
    int k = 0;  // 0: m_q + b_q + 4
    double tol = 1e-8;
    int max_iter = 300;
    std::uint64_t seed = 42;
    SpectralTransform transform = SpectralTransform::automatic;
};

struct ChecksConfig {
    bool structured = true;   // graph elimination for kernel and tunneling values
    bool trial_forms = true;
    bool gap_growth = true;
    bool exactness = false;   // dense + multiprecision, coarse grids only
    int dense_resolution = 0; // > 0: dense cross-check on an N^n grid
};

struct OutputConfig {
    std::string report_path;
    std::string csv_path;
    bool export_operators = false;
    std::string export_dir = ".";
};

struct RunConfig {
    ManifoldConfig manifold;
    MorseFunctionSpec morse;
    DeformationConfig deformation;
    SolverConfig solver;
    ChecksConfig checks;
    OutputConfig output;

    double fixed_C() const { return deformation.C > 0.0 ? deformation.C : 0.5 * deformation.epsilon * deformation.epsilon / 4.0; }
};

namespace detail {

inline void reject_unknown(const toml::table& t, const std::string& where, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : t) {
        (void)v;
        const std::string key(k.str());
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
}

inline const toml::table* subtable(const toml::table& root, const std::string& name, bool required) {
    const toml::node* n = root.get(name);
    if (!n) {
        if (required) throw ConfigError("missing table [" + name + "]");
        return nullptr;
    }
    const toml::table* t = n->as_table();
    if (!t) throw ConfigError("'" + name + "' must be a table");
    return t;
}

inline double get_number(const toml::node& n, const std::string& key) {
    if (auto v = n.value<double>()) return *v;
    throw ConfigError("'" + key + "' must be a number");
}

inline std::int64_t get_integer(const toml::node& n, const std::string& key) {
    if (n.is_integer()) return *n.value<std::int64_t>();
    throw ConfigError("'" + key + "' must be an integer");
}

inline bool get_bool(const toml::node& n, const std::string& key) {
    if (n.is_boolean()) return *n.value<bool>();
    throw ConfigError("'" + key + "' must be a boolean");
}

inline std::string get_string(const toml::node& n, const std::string& key) {
    if (n.is_string()) return *n.value<std::string>();
    throw ConfigError("'" + key + "' must be a string");
}

inline const toml::array& get_array(const toml::node& n, const std::string& key) {
    if (const toml::array* a = n.as_array()) return *a;
    throw ConfigError("'" + key + "' must be an array");
}

inline std::vector<double> number_list(const toml::node& n, const std::string& key) {
    std::vector<double> out;
    for (const auto& e : get_array(n, key)) out.push_back(get_number(e, key));
    return out;
}

inline std::vector<std::int64_t> integer_list(const toml::node& n, const std::string& key) {
    std::vector<std::int64_t> out;
    for (const auto& e : get_array(n, key)) out.push_back(get_integer(e, key));
    return out;
}

inline int checked_int(std::int64_t v, const std::string& key) {
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ConfigError("'" + key + "' is out of range");
    return static_cast<int>(v);
}

inline void parse_morse(const toml::table& t, MorseFunctionSpec& spec, int n) {
    reject_unknown(t, "morse", {"preset", "frequencies", "amplitudes", "terms"});
    const toml::node* p = t.get("preset");
    if (!p) throw ConfigError("missing key 'morse.preset'");
    try {
        spec.preset = parse_preset(get_string(*p, "morse.preset"));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("morse.preset: ") + e.what());
    }
    spec.frequencies.clear();
    spec.amplitudes.clear();
    spec.terms.clear();
    if (spec.preset == Preset::custom_trig) {
        if (t.get("frequencies") || t.get("amplitudes"))
            throw ConfigError("'morse.frequencies'/'morse.amplitudes' do not apply to custom_trig; use morse.terms");
        const toml::node* terms = t.get("terms");
        if (!terms) throw ConfigError("missing key 'morse.terms' for custom_trig");
        for (const auto& e : get_array(*terms, "morse.terms")) {
            const toml::table* et = e.as_table();
            if (!et) throw ConfigError("'morse.terms' entries must be tables");
            reject_unknown(*et, "morse.terms", {"amplitude", "wavevector", "phase"});
            TrigTerm term;
            if (const toml::node* a = et->get("amplitude")) term.amplitude = get_number(*a, "morse.terms.amplitude");
            if (const toml::node* ph = et->get("phase")) term.phase = get_number(*ph, "morse.terms.phase");
            const toml::node* w = et->get("wavevector");
            if (!w) throw ConfigError("missing key 'morse.terms.wavevector'");
            const auto k = integer_list(*w, "morse.terms.wavevector");
            if (static_cast<int>(k.size()) != n) throw ConfigError("'morse.terms.wavevector' needs one entry per axis");
            for (int i = 0; i < n; ++i) term.wavevector[static_cast<std::size_t>(i)] = checked_int(k[static_cast<std::size_t>(i)], "morse.terms.wavevector");
            spec.terms.push_back(term);
        }
        return;
    }
    if (t.get("terms")) throw ConfigError("'morse.terms' only applies to custom_trig");
    const toml::node* fr = t.get("frequencies");
    if (!fr) throw ConfigError("missing key 'morse.frequencies'");
    const toml::node* am = t.get("amplitudes");
    for (const auto& e : get_array(*fr, "morse.frequencies")) {
        std::vector<int> row;
        if (e.is_array()) {
            for (auto v : integer_list(e, "morse.frequencies")) row.push_back(checked_int(v, "morse.frequencies"));
        } else {
            row.push_back(checked_int(get_integer(e, "morse.frequencies"), "morse.frequencies"));
        }
        spec.frequencies.push_back(row);
    }
    if (am) {
        for (const auto& e : get_array(*am, "morse.amplitudes")) {
            if (e.is_array())
                spec.amplitudes.push_back(number_list(e, "morse.amplitudes"));
            else
                spec.amplitudes.push_back({get_number(e, "morse.amplitudes")});
        }
    } else {
        for (const auto& row : spec.frequencies) spec.amplitudes.emplace_back(row.size(), 1.0);
    }
}

}  // namespace detail

// Validates against the schema, fills defaults and checks that the pieces build.
inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
        throw ConfigError(os.str());
    }
    using namespace detail;
    reject_unknown(root, "", {"manifold", "morse", "deformation", "solver", "checks", "output"});
    RunConfig c;

    const toml::table& man = *subtable(root, "manifold", true);
    reject_unknown(man, "manifold", {"n", "lengths", "resolutions"});
    if (const toml::node* n = man.get("n")) c.manifold.n = checked_int(get_integer(*n, "manifold.n"), "manifold.n");
    if (c.manifold.n < 1 || c.manifold.n > kMaxDim) throw ConfigError("'manifold.n' must be 1, 2 or 3");
    const auto n = static_cast<std::size_t>(c.manifold.n);
    if (const toml::node* l = man.get("lengths"))
        c.manifold.lengths = number_list(*l, "manifold.lengths");
    else
        c.manifold.lengths.assign(n, 1.0);
    if (c.manifold.lengths.size() != n) throw ConfigError("'manifold.lengths' needs one entry per axis");
    for (double L : c.manifold.lengths)
        if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("'manifold.lengths' entries must be positive");
    const toml::node* res = man.get("resolutions");
    if (!res) throw ConfigError("missing key 'manifold.resolutions'");
    if (res->is_integer()) {
        c.manifold.resolutions.assign(n, checked_int(get_integer(*res, "manifold.resolutions"), "manifold.resolutions"));
    } else {
        for (auto v : integer_list(*res, "manifold.resolutions")) c.manifold.resolutions.push_back(checked_int(v, "manifold.resolutions"));
    }
    if (c.manifold.resolutions.size() != n) throw ConfigError("'manifold.resolutions' needs one entry per axis");
    for (int N : c.manifold.resolutions)
        if (N < 4) throw ConfigError("'manifold.resolutions' entries must be >= 4, got " + std::to_string(N));

    parse_morse(*subtable(root, "morse", true), c.morse, c.manifold.n);
    try {
        MorseFunction probe(c.morse, c.manifold.n, c.manifold.lengths);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("morse: ") + e.what());
    }

    if (const toml::table* d = subtable(root, "deformation", false)) {
        reject_unknown(*d, "deformation", {"t_list", "t_min", "t_max", "steps", "C", "epsilon"});
        const bool has_list = d->get("t_list") != nullptr;
        const bool has_range = d->get("t_min") || d->get("t_max") || d->get("steps");
        if (has_list && has_range) throw ConfigError("give either 'deformation.t_list' or t_min/t_max/steps, not both");
        if (has_list) {
            c.deformation.t_list = number_list(*d->get("t_list"), "deformation.t_list");
        } else if (has_range) {
            if (!d->get("t_min") || !d->get("t_max") || !d->get("steps"))
                throw ConfigError("'deformation' range needs t_min, t_max and steps");
            const double a = get_number(*d->get("t_min"), "deformation.t_min");
            const double b = get_number(*d->get("t_max"), "deformation.t_max");
            const int s = checked_int(get_integer(*d->get("steps"), "deformation.steps"), "deformation.steps");
            if (a > b) throw ConfigError("'deformation.t_min' exceeds 'deformation.t_max'");
            if (s < 1) throw ConfigError("'deformation.steps' must be >= 1");
            for (int i = 0; i < s; ++i) c.deformation.t_list.push_back(s == 1 ? a : a + (b - a) * i / (s - 1));
        }
        if (const toml::node* v = d->get("C")) c.deformation.C = get_number(*v, "deformation.C");
        if (const toml::node* v = d->get("epsilon")) c.deformation.epsilon = get_number(*v, "deformation.epsilon");
    }
    if (c.deformation.t_list.empty()) c.deformation.t_list = {20.0, 30.0, 40.0, 50.0};
    for (double t : c.deformation.t_list)
        if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("'deformation.t_list' entries must be finite and >= 0");
    if (c.deformation.C < 0.0) throw ConfigError("'deformation.C' must be >= 0");
    if (!(c.deformation.epsilon > 0.0)) throw ConfigError("'deformation.epsilon' must be > 0");

    if (const toml::table* s = subtable(root, "solver", false)) {
        reject_unknown(*s, "solver", {"k", "tol", "max_iter", "seed", "transform"});
        if (const toml::node* v = s->get("k")) c.solver.k = checked_int(get_integer(*v, "solver.k"), "solver.k");
        if (const toml::node* v = s->get("tol")) c.solver.tol = get_number(*v, "solver.tol");
        if (const toml::node* v = s->get("max_iter")) c.solver.max_iter = checked_int(get_integer(*v, "solver.max_iter"), "solver.max_iter");
        if (const toml::node* v = s->get("seed")) {
            const auto seed = get_integer(*v, "solver.seed");
            if (seed < 0) throw ConfigError("'solver.seed' must be >= 0");
            c.solver.seed = static_cast<std::uint64_t>(seed);
        }
        if (const toml::node* v = s->get("transform")) {
            const std::string m = get_string(*v, "solver.transform");
            if (m == "automatic") c.solver.transform = SpectralTransform::automatic;
            else if (m == "fold") c.solver.transform = SpectralTransform::fold;
            else if (m == "shift_invert") c.solver.transform = SpectralTransform::shift_invert;
            else throw ConfigError("'solver.transform' must be automatic, fold or shift_invert");
        }
    }
    if (c.solver.k < 0) throw ConfigError("'solver.k' must be >= 0");
    if (!(c.solver.tol > 0.0)) throw ConfigError("'solver.tol' must be > 0");
    if (c.solver.max_iter < 1) throw ConfigError("'solver.max_iter' must be >= 1");

    if (const toml::table* s = subtable(root, "checks", false)) {
        reject_unknown(*s, "checks", {"structured", "trial_forms", "gap_growth", "exactness", "dense_resolution"});
        if (const toml::node* v = s->get("structured")) c.checks.structured = get_bool(*v, "checks.structured");
        if (const toml::node* v = s->get("trial_forms")) c.checks.trial_forms = get_bool(*v, "checks.trial_forms");
        if (const toml::node* v = s->get("gap_growth")) c.checks.gap_growth = get_bool(*v, "checks.gap_growth");
        if (const toml::node* v = s->get("exactness")) c.checks.exactness = get_bool(*v, "checks.exactness");
        if (const toml::node* v = s->get("dense_resolution"))
            c.checks.dense_resolution = checked_int(get_integer(*v, "checks.dense_resolution"), "checks.dense_resolution");
        if (c.checks.dense_resolution != 0 && c.checks.dense_resolution < 4)
            throw ConfigError("'checks.dense_resolution' must be 0 or >= 4");
    }

    if (const toml::table* o = subtable(root, "output", false)) {
        reject_unknown(*o, "output", {"report_path", "csv_path", "export_operators", "export_dir"});
        if (const toml::node* v = o->get("report_path")) c.output.report_path = get_string(*v, "output.report_path");
        if (const toml::node* v = o->get("csv_path")) c.output.csv_path = get_string(*v, "output.csv_path");
        if (const toml::node* v = o->get("export_operators")) c.output.export_operators = get_bool(*v, "output.export_operators");
        if (const toml::node* v = o->get("export_dir")) c.output.export_dir = get_string(*v, "output.export_dir");
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

inline TorusGrid config_grid(const RunConfig& c) {
    return build_grid(c.manifold.n, c.manifold.lengths, c.manifold.resolutions);
}

inline MorseFunction config_function(const RunConfig& c) {
    return MorseFunction(c.morse, c.manifold.n, c.manifold.lengths);
}

}  // namespace witten
