#pragma once

#include <json.hpp>

#include <fstream>
#include <ostream>
#include <string>

#include "witten/verifier.hpp"

namespace witten {

namespace detail {

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline nlohmann::json point_json(const Point& p, int n) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < n; ++i) a.push_back(p[static_cast<std::size_t>(i)]);
    return a;
}

}  // namespace detail

inline nlohmann::json config_json(const RunConfig& c) {
    nlohmann::json j;
    j["manifold"] = {{"n", c.manifold.n}, {"lengths", c.manifold.lengths}, {"resolutions", c.manifold.resolutions}};
    nlohmann::json m = {{"preset", preset_name(c.morse.preset)}};
    if (c.morse.preset == Preset::custom_trig) {
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& t : c.morse.terms) {
            std::vector<int> k(t.wavevector.begin(), t.wavevector.begin() + c.manifold.n);
            terms.push_back({{"amplitude", t.amplitude}, {"wavevector", k}, {"phase", t.phase}});
        }
        m["terms"] = terms;
    } else {
        m["frequencies"] = c.morse.frequencies;
        m["amplitudes"] = c.morse.amplitudes;
    }
    j["morse"] = m;
    j["deformation"] = {{"t_list", c.deformation.t_list}, {"C", c.fixed_C()}, {"epsilon", c.deformation.epsilon}};
    j["solver"] = {{"k", c.solver.k},
                   {"tol", c.solver.tol},
                   {"max_iter", c.solver.max_iter},
                   {"seed", c.solver.seed},
                   {"transform", transform_name(c.solver.transform)}};
    j["checks"] = {{"structured", c.checks.structured},
                   {"trial_forms", c.checks.trial_forms},
                   {"gap_growth", c.checks.gap_growth},
                   {"exactness", c.checks.exactness},
                   {"dense_resolution", c.checks.dense_resolution}};
    return j;
}

inline nlohmann::json sweep_entry_json(const SweepEntry& e) {
    nlohmann::json j = {{"t", e.t},
                        {"q", e.q},
                        {"eigenvalues", e.eigenvalues},
                        {"residuals", e.residuals},
                        {"converged", e.converged},
                        {"iterations", e.iterations},
                        {"transform", e.transform},
                        {"seed", e.seed},
                        {"scale", e.scale},
                        {"kernel_dim", e.kernel_dim},
                        {"kernel_method", e.kernel_method},
                        {"numeric_kernel_dim", e.numeric_kernel_dim},
                        {"numeric_kernel_cut", e.numeric_kernel_cut},
                        {"kernel_ill_separated", e.kernel_ill_separated},
                        {"low_count", e.low_count},
                        {"gap_threshold", e.threshold},
                        {"gap_ratio", e.gap_ratio},
                        {"gap_clear", e.gap_clear},
                        {"fixed_threshold", e.fixed_threshold},
                        {"routes_agree", e.routes_agree},
                        {"in_window", e.in_window},
                        {"next_eigenvalue", e.next_eigenvalue}};
    if (e.fixed_count >= 0)
        j["fixed_count"] = e.fixed_count;
    else
        j["fixed_count"] = nullptr;
    if (!e.fixed_note.empty()) j["fixed_note"] = e.fixed_note;
    if (e.structured.attempted) {
        nlohmann::json s = {{"available", e.structured.available}};
        if (e.structured.available) {
            s["method"] = e.structured.method;
            s["kernel_dim"] = e.structured.kernel_dim;
            s["tunneling"] = e.structured.tunneling;
            s["series_ratio"] = e.structured.series_ratio;
        } else {
            s["reason"] = e.structured.reason;
        }
        j["structured"] = s;
    }
    return j;
}

inline nlohmann::json report_json(const VerificationRun& r) {
    const int n = r.config.manifold.n;
    nlohmann::json j;
    j["config"] = config_json(r.config);
    j["betti"] = r.betti;
    j["betti_routes"] = {{"spectral", r.betti_routes.spectral}, {"rank", r.betti_routes.rank}};
    j["morse"] = r.morse;

    nlohmann::json cps = nlohmann::json::array();
    for (const auto& p : r.profile.points)
        cps.push_back({{"coords", detail::point_json(p.coords, n)},
                       {"index", p.index},
                       {"f", p.f_value},
                       {"hessian_eigenvalues", p.hessian_eigenvalues}});
    j["critical_points"] = cps;
    j["t_window"] = {{"t_min", r.window.t_min},
                     {"t_max", r.window.t_max},
                     {"t_resolution", r.window.t_resolution},
                     {"t_overflow", r.window.t_overflow},
                     {"asserted", false}};

    nlohmann::json sweep = nlohmann::json::array();
    for (const auto& e : r.sweep) sweep.push_back(sweep_entry_json(e));
    j["sweep"] = sweep;

    const InequalityReport& iq = r.inequalities;
    nlohmann::json counts = nlohmann::json::array();
    for (const auto& c : iq.counts_match)
        counts.push_back({{"q", c.q}, {"t", c.t}, {"low_count", c.low_count}, {"m_q", c.expected}, {"ok", c.ok}});
    j["verdicts"] = {{"weak", iq.weak_ok},
                     {"weak_slack", iq.weak_slack},
                     {"strong", iq.strong_ok},
                     {"strong_lhs", iq.strong_lhs},
                     {"strong_rhs", iq.strong_rhs},
                     {"strong_slack", iq.strong_slack},
                     {"euler", iq.euler_equal},
                     {"euler_characteristic", iq.euler_characteristic},
                     {"counts_match", counts},
                     {"low_alternating_ok", r.low_alternating_ok},
                     {"passed", r.passed()}};

    nlohmann::json diag;
    if (r.trials) {
        const TrialFormDiagnostics& d = *r.trials;
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : d.points) {
            nlohmann::json samples = nlohmann::json::array();
            for (const auto& s : p.samples)
                samples.push_back({{"t", s.t},
                                   {"residual", s.residual},
                                   {"projection_error", s.projection_error},
                                   {"projection_sup", s.projection_sup}});
            pts.push_back({{"point", p.point},
                           {"index", p.index},
                           {"coords", detail::point_json(p.coords, n)},
                           {"residual_slope", p.residual_slope},
                           {"projection_slope", p.projection_slope},
                           {"samples", samples}});
        }
        nlohmann::json grams = nlohmann::json::array();
        for (const auto& g : d.gram)
            grams.push_back({{"t", g.t},
                             {"q", g.q},
                             {"points", g.points},
                             {"gram", detail::matrix_json(g.gram)},
                             {"determinant", g.determinant},
                             {"min_eigenvalue", g.min_eigenvalue},
                             {"max_offdiag", g.max_offdiag}});
        diag["trial_forms"] = {{"chart", d.chart},
                               {"epsilon", d.epsilon},
                               {"points", pts},
                               {"gram", grams},
                               {"residual_decays", d.residual_decays},
                               {"projection_decays", d.projection_decays},
                               {"gram_ok", d.gram_ok},
                               {"offdiag_ok", d.offdiag_ok}};
    }
    if (!r.gap_growth.empty()) {
        nlohmann::json gg = nlohmann::json::array();
        for (const auto& g : r.gap_growth)
            gg.push_back({{"q", g.q}, {"t", g.t}, {"lambda", g.lambda}, {"slope", g.slope}, {"positive", g.positive}, {"bound_ok", g.bound_ok}});
        diag["gap_growth"] = gg;
    }
    if (r.exactness) {
        const ExactnessReport& x = *r.exactness;
        nlohmann::json degs = nlohmann::json::array();
        for (const auto& d : x.degrees)
            degs.push_back({{"q", d.q},
                            {"window_dim", d.window_dim},
                            {"harmonic", d.harmonic},
                            {"positive_dim", d.positive_dim},
                            {"rank", d.rank},
                            {"leak", d.leak},
                            {"singular_values", d.singular_values},
                            {"cluster_values", d.cluster_values}});
        diag["exactness"] = {{"t", x.t},
                             {"lambda", x.lambda},
                             {"digits", x.digits},
                             {"degrees", degs},
                             {"alternating", x.alternating},
                             {"ranks_ok", x.ranks_ok},
                             {"alternating_ok", x.alternating_ok},
                             {"top_equality", x.top_equality},
                             {"invariant_ok", x.invariant_ok}};
    }
    if (!r.dense.empty()) {
        nlohmann::json dd = nlohmann::json::array();
        for (const auto& d : r.dense)
            dd.push_back({{"resolution", d.resolution},
                          {"t", d.t},
                          {"q", d.q},
                          {"dense_low_count", d.dense_low_count},
                          {"lanczos_low_count", d.lanczos_low_count},
                          {"expected", d.expected},
                          {"max_deviation", d.max_deviation}});
        diag["dense_cross_check"] = dd;
    }
    diag["notes"] = r.notes;
    diag["failures"] = r.failures;
    j["diagnostics"] = diag;
    return j;
}

inline void write_csv(std::ostream& out, const std::vector<SweepEntry>& sweep) {
    out << "q,t,index,lambda,residual,converged\n";
    out.precision(17);
    for (const auto& e : sweep)
        for (std::size_t i = 0; i < e.eigenvalues.size(); ++i)
            out << e.q << ',' << e.t << ',' << i << ',' << e.eigenvalues[i] << ',' << e.residuals[i] << ','
                << (e.converged[i] ? 1 : 0) << '\n';
}

inline void write_csv(const std::string& path, const std::vector<SweepEntry>& sweep) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    write_csv(out, sweep);
}

inline void write_report(const std::string& path, const VerificationRun& r) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << report_json(r).dump(2) << '\n';
}

}  // namespace witten
