#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "witten/config.hpp"
#include "witten/matrix_market.hpp"
#include "witten/oscillator.hpp"
#include "witten/report.hpp"
#include "witten/verifier.hpp"

namespace witten {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerdict = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitConfig = 3;

// Used when a command gets no --config: cos(4 pi x) + cos(2 pi y) on a 16 x 16 grid.
inline const char* kBuiltinConfig = R"(
[manifold]
n = 2
lengths = [1.0, 1.0]
resolutions = [16, 16]

[morse]
preset = "cos_sum"
frequencies = [2, 1]
)";

namespace detail {

inline RunConfig cli_config(const std::string& path, int resolution) {
    RunConfig c = path.empty() ? parse_config(kBuiltinConfig, "builtin") : load_config(path);
    if (resolution > 0) {
        if (resolution < 4) throw ConfigError("--resolution must be >= 4");
        c.manifold.resolutions.assign(static_cast<std::size_t>(c.manifold.n), resolution);
    }
    return c;
}

inline std::string fmt(double v, int prec = 10) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

inline void print_summary(std::ostream& out, const VerificationRun& r) {
    out << "betti " << format_ints(r.betti) << "  morse " << format_ints(r.morse) << '\n';
    out << "t-window (reported) [" << fmt(r.window.t_min, 4) << ", " << fmt(r.window.t_max, 4) << "]\n";
    for (const auto& e : r.sweep)
        out << "t=" << fmt(e.t, 6) << " q=" << e.q << " low=" << e.low_count << " kernel=" << e.kernel_dim << " ("
            << e.kernel_method << ") gap_ratio=" << fmt(e.gap_ratio, 4) << '\n';
    const InequalityReport& iq = r.inequalities;
    for (std::size_t q = 0; q < iq.b.size(); ++q)
        out << "q=" << q << " weak " << (iq.weak_ok[q] ? "ok" : "FAIL") << " (slack " << iq.weak_slack[q] << ")  strong "
            << (iq.strong_ok[q] ? "ok" : "FAIL") << " (slack " << iq.strong_slack[q] << ")\n";
    out << "euler " << iq.strong_lhs.back() << " = " << iq.strong_rhs.back() << (iq.euler_equal ? " ok" : " FAIL") << '\n';
    for (const auto& n : r.notes) out << "note: " << n << '\n';
    for (const auto& f : r.failures) out << "FAIL: " << f << '\n';
    out << (r.passed() ? "VERDICT PASS" : "VERDICT FAIL") << '\n';
}

inline void export_operators(const VerificationRun& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const TorusGrid grid = config_grid(r.config);
    const MorseFunction f = config_function(r.config);
    for (double t : r.config.deformation.t_list) {
        const DeformedComplex c(grid, f, t);
        for (int q = 0; q <= c.dimension(); ++q)
            write_matrix_market(dir + "/laplacian_q" + std::to_string(q) + "_t" + fmt(t, 6) + ".mtx", c.laplacian(q).matrix);
    }
}

}  // namespace detail

// Parses args (without the program name) and runs one subcommand.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Discrete Witten deformation lab on flat tori"};
    app.require_subcommand(1);

    std::string config_path;
    int resolution = 0;

    auto* verify = app.add_subcommand("verify", "full sweep with Morse inequality verdicts");
    std::string report_path, csv_path;
    bool json_stdout = false;
    verify->add_option("--config", config_path, "TOML configuration")->required();
    verify->add_option("--report", report_path, "JSON report path (overrides output.report_path)");
    verify->add_option("--csv", csv_path, "CSV spectra path (overrides output.csv_path)");
    verify->add_flag("--json", json_stdout, "print the JSON report instead of the summary");

    auto* spectrum = app.add_subcommand("spectrum", "eigen-table for one (q, t)");
    int sq = 0, sk = 0;
    double st = 0.0;
    spectrum->add_option("--config", config_path, "TOML configuration (default: builtin)");
    spectrum->add_option("--resolution", resolution, "override the grid resolution on every axis");
    spectrum->add_option("--q", sq, "form degree")->required();
    spectrum->add_option("--t", st, "deformation parameter")->required();
    spectrum->add_option("--k", sk, "number of eigenvalues (default m_q + b_q + 4)");

    auto* sweep = app.add_subcommand("sweep", "CSV spectra across the configured t values");
    std::string sweep_out;
    sweep->add_option("--config", config_path, "TOML configuration (default: builtin)");
    sweep->add_option("--resolution", resolution, "override the grid resolution on every axis");
    sweep->add_option("--out", sweep_out, "CSV path (default: stdout)");

    auto* osc = app.add_subcommand("oscillator", "spectrum of the flat model operator");
    ModelOperatorSpec ms;
    int count = 5;
    osc->add_option("--n", ms.n, "dimension")->required();
    osc->add_option("--r", ms.r, "number of descending axes")->required();
    osc->add_option("--q", ms.q, "form degree")->required();
    osc->add_option("--t", ms.t, "deformation parameter")->required();
    osc->add_option("--count", count, "number of distinct levels");

    auto* cps = app.add_subcommand("critical-points", "critical points, indices and Hessian spectra");
    cps->add_option("--config", config_path, "TOML configuration (default: builtin)");
    cps->add_option("--resolution", resolution, "override the grid resolution on every axis");

    auto* exp = app.add_subcommand("export-operator", "write d_t and the Laplacian as MatrixMarket files");
    int eq = 0;
    double et = 0.0;
    std::string edir = ".";
    exp->add_option("--config", config_path, "TOML configuration (default: builtin)");
    exp->add_option("--resolution", resolution, "override the grid resolution on every axis");
    exp->add_option("--q", eq, "form degree")->required();
    exp->add_option("--t", et, "deformation parameter")->required();
    exp->add_option("--dir", edir, "output directory");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (*verify) {
            RunConfig c = detail::cli_config(config_path, 0);
            if (!report_path.empty()) c.output.report_path = report_path;
            if (!csv_path.empty()) c.output.csv_path = csv_path;
            const VerificationRun r = run_sweep(c);
            if (!c.output.report_path.empty()) write_report(c.output.report_path, r);
            if (!c.output.csv_path.empty()) write_csv(c.output.csv_path, r.sweep);
            if (c.output.export_operators) detail::export_operators(r, c.output.export_dir);
            if (json_stdout)
                out << report_json(r).dump(2) << '\n';
            else
                detail::print_summary(out, r);
            return r.passed() ? kExitOk : kExitVerdict;
        }
        if (*spectrum) {
            const RunConfig c = detail::cli_config(config_path, resolution);
            const TorusGrid grid = config_grid(c);
            const MorseFunction f = config_function(c);
            grid.check_degree(sq);
            const MorseProfile prof = find_critical_points(f, grid);
            const std::vector<int> b = betti_numbers(grid, c.solver.seed);
            DegreeOptions opt = degree_options(c, hessian_min(prof));
            if (sk > 0) opt.k = sk;
            const DeformedComplex dc(grid, f, st);
            const SweepEntry e = analyze_degree(dc, sq, b[static_cast<std::size_t>(sq)], prof.m[static_cast<std::size_t>(sq)], opt);
            out << "# q=" << sq << " t=" << st << " transform=" << e.transform << " seed=" << e.seed << " scale=" << detail::fmt(e.scale)
                << '\n';
            out << "index,lambda,residual,converged\n";
            for (std::size_t i = 0; i < e.eigenvalues.size(); ++i)
                out << i << ',' << detail::fmt(e.eigenvalues[i], 17) << ',' << detail::fmt(e.residuals[i], 3) << ','
                    << (e.converged[i] ? 1 : 0) << '\n';
            out << "# kernel_dim=" << e.kernel_dim << " (" << e.kernel_method << ") low_count=" << e.low_count
                << " gap_ratio=" << detail::fmt(e.gap_ratio, 4) << " b_q=" << b[static_cast<std::size_t>(sq)]
                << " m_q=" << prof.m[static_cast<std::size_t>(sq)] << '\n';
            return kExitOk;
        }
        if (*sweep) {
            RunConfig c = detail::cli_config(config_path, resolution);
            const TorusGrid grid = config_grid(c);
            const MorseFunction f = config_function(c);
            const MorseProfile prof = find_critical_points(f, grid);
            const std::vector<int> b = betti_numbers(grid, c.solver.seed);
            const DegreeOptions opt = degree_options(c, hessian_min(prof));
            const auto& ts = c.deformation.t_list;
            std::vector<std::vector<SweepEntry>> slots(ts.size());
            parallel_for(ts.size(), [&](std::size_t i) {
                const DeformedComplex dc(grid, f, ts[i]);
                for (int q = 0; q <= grid.dimension(); ++q)
                    slots[i].push_back(analyze_degree(dc, q, b[static_cast<std::size_t>(q)], prof.m[static_cast<std::size_t>(q)], opt));
            });
            std::vector<SweepEntry> all;
            for (auto& s : slots)
                for (auto& e : s) all.push_back(std::move(e));
            if (sweep_out.empty())
                write_csv(out, all);
            else
                write_csv(sweep_out, all);
            return kExitOk;
        }
        if (*osc) {
            const ModelSpectrum s = model_spectrum(ms, count);
            const ModelKernel k = model_kernel(ms);
            out << "level,eigenvalue,multiplicity,witness\n";
            for (std::size_t i = 0; i < s.entries.size(); ++i)
                out << i << ',' << detail::fmt(s.entries[i].eigenvalue, 12) << ',' << s.entries[i].multiplicity << ','
                    << format_witness(s.entries[i].witness, ms.n) << '\n';
            out << "# kernel dimension " << k.dimension << ", generator " << k.generator << '\n';
            return kExitOk;
        }
        if (*cps) {
            const RunConfig c = detail::cli_config(config_path, resolution);
            const MorseFunction f = config_function(c);
            const MorseProfile prof = find_critical_points(f, config_grid(c));
            const int n = c.manifold.n;
            out << "point,index,f,coords,hessian_eigenvalues\n";
            for (std::size_t i = 0; i < prof.points.size(); ++i) {
                const CriticalPoint& p = prof.points[i];
                out << i << ',' << p.index << ',' << detail::fmt(p.f_value, 12) << ",(";
                for (int j = 0; j < n; ++j) out << (j ? " " : "") << detail::fmt(p.coords[static_cast<std::size_t>(j)], 12);
                out << "),(";
                for (std::size_t j = 0; j < p.hessian_eigenvalues.size(); ++j) out << (j ? " " : "") << detail::fmt(p.hessian_eigenvalues[j], 12);
                out << ")\n";
            }
            out << "# m = " << format_ints(prof.m) << '\n';
            return kExitOk;
        }
        if (*exp) {
            const RunConfig c = detail::cli_config(config_path, resolution);
            const TorusGrid grid = config_grid(c);
            grid.check_degree(eq);
            const DeformedComplex dc(grid, config_function(c), et);
            const int n = dc.dimension();
            std::filesystem::create_directories(edir);
            const std::string tag = "_q" + std::to_string(eq) + "_t" + detail::fmt(et, 6) + ".mtx";
            std::vector<std::string> written;
            const std::string lap = edir + "/laplacian" + tag;
            write_matrix_market(lap, dc.laplacian(eq).matrix);
            written.push_back(lap);
            // d_t in degrees q-1 and q so the re-imported pair can be checked for d_t o d_t = 0.
            std::vector<std::pair<int, std::string>> d_files;
            for (int p : {eq - 1, eq}) {
                if (p < 0 || p >= n) continue;
                const std::string path = edir + "/coboundary_q" + std::to_string(p) + "_t" + detail::fmt(et, 6) + ".mtx";
                write_matrix_market(path, dc.deformed_coboundary(p));
                d_files.emplace_back(p, path);
                written.push_back(path);
            }
            for (const auto& w : written) out << "wrote " << w << '\n';
            if (d_files.size() == 2) {
                const SparseMatrix a = read_matrix_market(d_files[0].second);
                const SparseMatrix bm = read_matrix_market(d_files[1].second);
                const SparseMatrix prod = bm * a;
                double worst = 0.0, size = 0.0;
                for (Eigen::Index k = 0; k < prod.outerSize(); ++k)
                    for (SparseMatrix::InnerIterator it(prod, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
                for (Eigen::Index k = 0; k < a.outerSize(); ++k)
                    for (SparseMatrix::InnerIterator it(a, k); it; ++it) size = std::max(size, std::abs(it.value()));
                for (Eigen::Index k = 0; k < bm.outerSize(); ++k)
                    for (SparseMatrix::InnerIterator it(bm, k); it; ++it) size = std::max(size, std::abs(it.value()));
                const double tol = 1e-12 * size * size;
                out << "d_t^2 check on re-import: max |entry| = " << detail::fmt(worst, 3) << (worst <= tol ? " ok" : " FAIL") << '\n';
                if (worst > tol) return kExitNumerical;
            }
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}

}  // namespace witten
