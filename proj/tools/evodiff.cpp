#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "evodiff/common.hpp"
#include "evodiff/config.hpp"
#include "evodiff/diagnostics.hpp"
#include "evodiff/io.hpp"
#include "evodiff/kernel.hpp"
#include "evodiff/solver.hpp"

namespace {

using namespace evodiff;

struct Built {
    AppConfig cfg;
    GrowthLaw law;
    ReactionModel model;
    Grid grid;
    StateField initial;
    SolveOptions opts;
};

Built build_all(const std::string& config_path) {
    AppConfig cfg = load_config(config_path);
    GrowthLaw law = make_growth(cfg.growth);
    ReactionModel model = make_model(cfg.model);
    Grid grid = make_grid(cfg.grid);
    StateField initial = make_initial(cfg, grid, model);
    SolveOptions opts = make_solve_options(cfg);
    return Built{std::move(cfg), std::move(law), std::move(model), std::move(grid),
                 std::move(initial), std::move(opts)};
}

int exit_code(Termination t) {
    switch (t) {
    case Termination::Completed: return 0;
    case Termination::BlowupDetected: return 2;
    case Termination::Error: return 1;
    }
    return 1;
}

/// Every hypothesis of the underlying estimates that this run provably does
/// not satisfy at face value, recorded so the manifest alone explains what
/// a result can and cannot be compared against.
std::vector<std::string> active_deviations(const Built& b) {
    std::vector<std::string> dev;
    dev.push_back("box-boundary: the reference domain is an axis-aligned box, so the boundary "
                  "is only piecewise smooth (edges and corners carry no surface measure)");
    if (b.cfg.growth.jacobian == "standard-det")
        dev.push_back("jacobian-mode: standard-det volume factor; the dilution rate is twice "
                      "the square-root convention");
    if (b.cfg.model.flux_convention == "plain")
        dev.push_back("flux-convention: plain ghost closure (boundary flux not scaled by "
                      "1/d_i)");
    const GrowthBounds bounds = b.law.bounds_on(0.0, b.opts.t_end);
    if (bounds.k1 <= 0.0)
        dev.push_back(strfmt("k1-relaxation: dilution-rate lower bound k1 = %g is not strictly "
                             "positive on [0, %g]",
                             bounds.k1, b.opts.t_end));
    double min0 = 0.0;
    for (const auto& c : b.initial.comp)
        for (double v : c) min0 = std::min(min0, v);
    if (min0 < 0.0)
        dev.push_back(strfmt("sign-indefinite initial data: min u0 = %g < 0, outside the "
                             "nonnegativity theory",
                             min0));
    return dev;
}

int cmd_run(const std::string& config_path) {
    Built b = build_all(config_path);
    const Trajectory traj = run(b.law, b.grid, b.model, b.initial, b.opts);

    namespace fs = std::filesystem;
    fs::create_directories(b.cfg.output.directory);
    const std::string base = (fs::path(b.cfg.output.directory) / b.cfg.output.prefix).string();

    std::size_t snapshot_files = 0;
    if (b.cfg.output.snapshots) {
        for (std::size_t k = 0; k < traj.snapshots.size(); ++k)
            write_snapshot(traj.snapshots[k], b.grid, base + strfmt("_snap_%04zu.bin", k));
        snapshot_files = traj.snapshots.size();
    }
    if (b.cfg.output.diagnostics)
        write_diagnostics_csv(traj.records, base + "_diagnostics.csv");

    RunManifest man;
    man.config_hash = config_hash(b.cfg);
    man.code_version = kVersion;
    man.deviations = active_deviations(b);
    man.termination = to_string(traj.termination);
    man.message = traj.message;
    man.wall_seconds = traj.wall_seconds;
    man.steps = traj.steps;
    man.warnings = traj.warnings;
    man.config_text = write_config(b.cfg);
    write_manifest(man, base + "_manifest.json");

    std::printf("run: %s\n", to_string(traj.termination));
    if (!traj.message.empty()) std::printf("  %s\n", traj.message.c_str());
    const double t_final = traj.records.empty() ? b.initial.t : traj.records.back().t;
    std::printf("  steps = %zu, final t = %.6g, wall = %.3f s\n", traj.steps, t_final,
                traj.wall_seconds);
    for (const auto& w : traj.warnings) std::printf("  warning: %s\n", w.c_str());
    std::printf("  wrote %zu snapshot(s), %s, %s\n", snapshot_files,
                b.cfg.output.diagnostics ? (base + "_diagnostics.csv").c_str() : "no CSV",
                (base + "_manifest.json").c_str());
    return exit_code(traj.termination);
}

const char* verdict_word(Verdict v) { return to_string(v); }

int cmd_check(const std::string& config_path, std::string report_path) {
    Built b = build_all(config_path);
    const std::size_t m = b.model.m;

    std::vector<ConditionReport> reports;
    reports.push_back(check_quasi_positivity(b.model));

    std::vector<double> weights = b.model.meta.b;
    if (weights.empty()) weights.assign(m, 1.0);
    reports.push_back(check_intermediate_sums(b.model, weights));

    const double K = b.model.meta.K;
    std::vector<std::vector<double>> a_vectors;
    if (m == 1) {
        a_vectors.push_back({1.0});
    } else {
        std::vector<double> base(m, K);
        base.back() = 1.0;
        a_vectors.push_back(base);
        for (std::size_t j = 0; j + 1 < m; ++j) {
            std::vector<double> v = base;
            v[j] = 2.0 * K;
            a_vectors.push_back(v);
        }
    }
    reports.push_back(check_VL(b.model, K, a_vectors));
    reports.push_back(check_polynomial_bound(b.model));

    bool any_fail = false;
    std::printf("model \"%s\" (%zu components)\n", b.model.name.c_str(), m);
    for (const auto& r : reports) {
        any_fail = any_fail || r.verdict == Verdict::Fail;
        std::printf("%-28s %-12s %s\n", r.condition.c_str(), verdict_word(r.verdict),
                    r.sample_domain.c_str());
        for (const auto& [key, value] : r.fitted)
            std::printf("    %s = %.12g\n", key.c_str(), value);
        if (r.verdict == Verdict::Fail) {
            std::string point;
            for (std::size_t k = 0; k < r.witness.size(); ++k)
                point += (k ? ", " : "") + strfmt("%.12g", r.witness[k]);
            std::printf("    witness %s = %.12g at (%s)\n", r.witness_field.c_str(),
                        r.witness_value, point.c_str());
        }
    }

    if (report_path.empty()) {
        std::filesystem::create_directories(b.cfg.output.directory);
        report_path = (std::filesystem::path(b.cfg.output.directory) /
                       (b.cfg.output.prefix + "_check.json"))
                          .string();
    }
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json e;
        e["condition"] = r.condition;
        e["verdict"] = verdict_word(r.verdict);
        e["sample_domain"] = r.sample_domain;
        e["witness"] = r.witness;
        e["witness_field"] = r.witness_field;
        e["witness_value"] = r.witness_value;
        e["fitted"] = r.fitted;
        j.push_back(e);
    }
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw IoError(strfmt("cannot open \"%s\" for writing", report_path.c_str()));
    out << j.dump(2) << "\n";
    std::printf("report written to %s\n", report_path.c_str());
    return any_fail ? 1 : 0;
}

int cmd_lyapunov(const std::string& config_path, int p_override, double theta_override) {
    Built b = build_all(config_path);
    const std::size_t m = b.model.m;
    const int p = p_override > 0 ? p_override : b.cfg.diagnostics.lyapunov_p;
    const double K = b.model.meta.K;

    std::vector<double> theta = default_theta(b.model);
    if (theta_override > 0.0) theta.assign(theta.size(), theta_override);

    std::printf("model \"%s\": p = %d, K = %.12g%s\n", b.model.name.c_str(), p, K,
                b.model.meta.has_sum_certificate() ? "" : " (heuristic, no certificate)");
    if (m < 2) {
        std::printf("single component: P(z) = z^%d, no pairing weights\n", p);
        return 0;
    }
    std::printf("pair,D,Dtilde,theta_threshold,theta\n");
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double D = b.model.d[j];
        const double Dt = b.model.d[m - 1];
        std::printf("(%zu,%zu),%.12g,%.12g,%.12g,%.12g\n", j + 1, m, D, Dt,
                    theta_threshold(D, Dt, K), theta[j]);
    }
    std::printf("\npair,beta,B11,B12,B22,det,positive_definite\n");
    for (std::size_t j = 0; j + 1 < m; ++j) {
        for (int beta = 0; beta < p; ++beta) {
            const BMatrix B = b_matrix_posdef(theta[j], b.model.d[j], b.model.d[m - 1], beta);
            std::printf("(%zu,%zu),%d,%.12g,%.12g,%.12g,%.12g,%s\n", j + 1, m, beta, B.a11,
                        B.a12, B.a22, B.det, B.positive_definite ? "true" : "false");
        }
    }
    const std::vector<double> ones(m, 1.0);
    std::printf("\nP(1,...,1) = %.12g\n", lyapunov_P_m(ones, p, theta));
    std::printf("P on initial data = %.12g\n",
                lyapunov_P_field(b.grid, b.initial, p, theta));
    return 0;
}

int cmd_dual_check(const std::string& config_path, std::string pair_text, double T_override,
                   double tol_rel, const std::string& xi_text) {
    Built b = build_all(config_path);
    const std::size_t m = b.model.m;
    if (m < 2) throw ValidationError("the duality comparison needs at least two components");

    std::size_t iu = 0, iv = m - 1;
    if (!pair_text.empty()) {
        int a = 0, c = 0;
        if (std::sscanf(pair_text.c_str(), "%d,%d", &a, &c) != 2 || a < 1 || c < 1 ||
            static_cast<std::size_t>(a) > m || static_cast<std::size_t>(c) > m || a == c)
            throw ValidationError(strfmt("--pair expects \"i,j\" with distinct 1-based "
                                         "components in 1..%zu",
                                         m));
        iu = static_cast<std::size_t>(a) - 1;
        iv = static_cast<std::size_t>(c) - 1;
    }

    const double T = T_override > 0.0 ? T_override : b.opts.t_end;
    if (T > b.law.horizon())
        throw ValidationError(strfmt("T = %g exceeds the growth horizon %g", T,
                                     b.law.horizon()));
    SolveOptions opts = b.opts;
    opts.t_end = T;
    // Aim for ~128 stored snapshots so the time trapezoid of the comparison
    // stays well resolved without holding every step in memory.
    std::size_t est_steps;
    if (opts.stepper == Stepper::ExplicitRK4) {
        const double sdt =
            opts.dt > 0.0 ? opts.dt : stable_dt(b.law, b.grid, b.model.d, 0.0, T, opts.safety);
        est_steps = static_cast<std::size_t>(T / sdt) + 1;
    } else {
        est_steps = opts.dt > 0.0 ? static_cast<std::size_t>(T / opts.dt) + 1 : 256;
    }
    opts.snapshot_every = static_cast<int>(std::max<std::size_t>(1, est_steps / 128));

    const Trajectory traj = run(b.law, b.grid, b.model, b.initial, opts);
    if (traj.termination != Termination::Completed) {
        std::printf("primal run did not complete: %s\n", traj.message.c_str());
        return exit_code(traj.termination);
    }

    std::vector<double> xi(b.grid.num_nodes(), 1.0);
    if (!xi_text.empty()) {
        static const std::vector<std::string> all_vars = {"x", "y", "z"};
        const std::vector<std::string> vars(all_vars.begin(),
                                            all_vars.begin() + b.grid.dim());
        Expression expr = Expression::parse(xi_text, vars, b.model.constants);
        std::vector<double> coords(static_cast<std::size_t>(b.grid.dim()));
        for (std::size_t q = 0; q < xi.size(); ++q) {
            const auto pos = b.grid.position(q);
            for (int k = 0; k < b.grid.dim(); ++k)
                coords[static_cast<std::size_t>(k)] = pos[static_cast<std::size_t>(k)];
            xi[q] = expr.eval(coords);
            if (xi[q] < 0.0)
                throw ValidationError(strfmt("xi must be nonnegative, got %g at node %zu",
                                             xi[q], q));
        }
    }
    const double scale =
        normalize_dual_source(b.grid, xi, b.cfg.diagnostics.lyapunov_p, T);

    DualConfig dcfg;
    dcfg.xi = xi;
    dcfg.D = b.model.d[iu];
    dcfg.Dtilde = b.model.d[iv];
    dcfg.L1 = b.model.meta.L1;
    dcfg.L2 = std::max(dcfg.L1, dcfg.Dtilde * dcfg.L1 / dcfg.D);
    dcfg.T = T;

    std::vector<double> times;
    for (const auto& s : traj.snapshots) times.push_back(s.t);
    const std::vector<StateField> phi = dual_solve(dcfg, b.law, b.grid, times);

    const DualityResult res = duality_check(traj.snapshots, iu, iv, phi, xi, b.law, b.grid,
                                            dcfg.D, dcfg.Dtilde, dcfg.L1, dcfg.L2, tol_rel);

    std::printf("pair (%zu,%zu), T = %g, D = %g, Dtilde = %g, L1 = %g, L2 = %g\n", iu + 1,
                iv + 1, T, dcfg.D, dcfg.Dtilde, dcfg.L1, dcfg.L2);
    std::printf("xi scaled by %.12g (unit conjugate norm)\n", scale);
    for (const auto& [key, value] : res.terms)
        std::printf("  %-22s % .12e\n", key.c_str(), value);
    std::printf("duality comparison: %s (lhs - rhs = %.3e, tolerance %.3e)\n",
                res.pass ? "PASS" : "FAIL", res.residual,
                tol_rel * std::abs(res.rhs) + 1e-12);
    return res.pass ? 0 : 1;
}

BoundaryGeometry pick_geometry(const std::string& name, int n, int segments) {
    if (name == "interval") return BoundaryGeometry::interval(0.0, 1.0);
    if (name == "circle") return BoundaryGeometry::circle({0.0, 0.0}, 1.0, segments);
    if (!name.empty())
        throw ValidationError(strfmt("unknown geometry \"%s\" (known: interval, circle)",
                                     name.c_str()));
    return n == 2 ? BoundaryGeometry::circle({0.0, 0.0}, 1.0, segments)
                  : BoundaryGeometry::interval(0.0, 1.0);
}

int cmd_kernel(const std::string& op, int n, const std::string& geometry_name,
               const std::string& mode_name, double T, int rows, int segments) {
    const ExponentMode mode =
        mode_name == "standard" ? ExponentMode::Standard : ExponentMode::PaperLiteral;
    if (mode_name != "standard" && mode_name != "paper-literal")
        throw ValidationError(strfmt("unknown mode \"%s\" (known: paper-literal, standard)",
                                     mode_name.c_str()));

    if (op == "cn") {
        std::printf("n,h0,h0_closed,relative_gap,cn\n");
        for (int k = 1; k <= 3; ++k) {
            if (n != 0 && k != n) continue;
            const H0Result r = h0_and_cn(k);
            std::printf("%d,%.15g,%.15g,%.3e,%.15g\n", k, r.h0, r.h0_closed, r.relative_gap,
                        r.cn);
        }
        return 0;
    }

    const int dim = n == 0 ? 1 : n;
    const BoundaryGeometry geo = pick_geometry(geometry_name, dim, segments);

    if (op == "verify-z0") {
        const KernelContext ctx = make_kernel_context(dim, geo, mode);
        const FundamentalReport r = verify_fundamental(ctx);
        std::printf("mode,matched_residual,displayed_residual,flagged\n");
        std::printf("%s,%.6e,%.6e,%s\n", mode_name.c_str(), r.matched_residual,
                    r.displayed_residual, r.flagged ? "true" : "false");
        if (r.flagged)
            std::printf("# the literal exponent does not annihilate the matched operator; "
                        "standard mode does\n");
        return 0;
    }

    if (geo.dim() != dim)
        throw ValidationError(strfmt("geometry is %d-dimensional, --n is %d", geo.dim(), dim));
    const KernelContext ctx = make_kernel_context(dim, geo, mode);
    const double horizon = T > 0.0 ? T : 1.0;

    if (op == "j-test") {
        const auto bnodes = geo.nodes();
        const auto& Q = bnodes.front();
        auto f = [](double, const std::array<double, 2>&) { return 1.0; };
        std::printf("eps,J_eps\n");
        for (double frac : {0.2, 0.1, 0.05, 0.025, 0.0125}) {
            const double eps = frac * horizon;
            std::printf("%.10g,%.12g\n", eps,
                        j_epsilon(f, eps, Q.y, Q.normal, horizon, ctx));
        }
        return 0;
    }

    if (op == "density" || op == "reconstruct") {
        if (rows < 2) throw ValidationError("--rows must be at least 2");
        const std::size_t nodes = geo.nodes().size();
        const std::vector<std::vector<double>> gamma(
            static_cast<std::size_t>(rows), std::vector<double>(nodes, 1.0));
        const DensityResult density = solve_density(gamma, horizon, ctx);
        if (op == "density") {
            std::printf("t,node,g\n");
            for (std::size_t k = 0; k < density.times.size(); ++k)
                for (std::size_t q = 0; q < nodes; ++q)
                    std::printf("%.10g,%zu,%.12g\n", density.times[k], q, density.g[k][q]);
            std::printf("# cn = %.12g, condition_estimate = %.6g, max_residual = %.3e\n",
                        density.cn, density.condition_estimate, density.max_residual);
            return 0;
        }
        std::printf("x1,x2,t,phi\n");
        const std::vector<std::array<double, 2>> probes =
            dim == 1 ? std::vector<std::array<double, 2>>{{0.5, 0.0}, {0.25, 0.0}}
                     : std::vector<std::array<double, 2>>{{0.0, 0.0}, {0.5, 0.0}};
        for (const auto& x : probes)
            for (double frac : {0.5, 1.0}) {
                const double t = frac * horizon;
                const double value =
                    classical_solution(density, std::span(x.data(), static_cast<std::size_t>(dim)), t, ctx);
                std::printf("%.10g,%.10g,%.10g,%.12g\n", x[0], x[1], t, value);
            }
        return 0;
    }

    throw ValidationError(strfmt("unknown kernel op \"%s\" (known: cn, verify-z0, j-test, "
                                 "density, reconstruct)",
                                 op.c_str()));
}

int cmd_convergence(const std::string& case_id, bool list) {
    if (list) {
        for (const auto& name : convergence_case_names()) std::printf("%s\n", name.c_str());
        return 0;
    }
    const ConvergenceResult res = manufactured_convergence(case_id);
    std::printf("case %s\n", res.case_id.c_str());
    std::printf("nodes,error,order\n");
    for (std::size_t k = 0; k < res.levels.size(); ++k) {
        if (k == 0)
            std::printf("%d,%.6e,-\n", res.levels[k], res.errors[k]);
        else
            std::printf("%d,%.6e,%.3f\n", res.levels[k], res.errors[k], res.orders[k - 1]);
    }
    std::printf("overall order = %.3f%s%s\n", res.overall_order, res.exact ? " (exact)" : "",
                res.degraded ? " (degraded)" : "");
    if (!res.note.empty()) std::printf("%s\n", res.note.c_str());
    return 0;
}

int cmd_export(const std::string& config_path, const std::string& what) {
    Built b = build_all(config_path);
    const Trajectory traj = run(b.law, b.grid, b.model, b.initial, b.opts);
    if (traj.termination == Termination::Error) {
        std::printf("run failed: %s\n", traj.message.c_str());
        return 1;
    }
    const auto paths =
        export_plotdata(traj, b.grid, what, b.cfg.output.directory, b.cfg.output.prefix);
    for (const auto& p : paths) std::printf("%s\n", p.c_str());
    return exit_code(traj.termination);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reaction-diffusion systems with nonlinear boundary mass transport on "
                 "dilationally evolving boxes"};
    app.require_subcommand(1);

    std::string config_path, report_path, pair_text, xi_text, what = "diagnostics";
    std::string case_id, kernel_op = "cn", geometry_name, mode_name = "paper-literal";
    int p_override = 0, n = 0, rows = 33, segments = 64;
    double theta_override = 0.0, T = 0.0, tol_rel = 1e-2;
    bool list_cases = false;
    int rc = 0;

    auto* c_run = app.add_subcommand("run", "integrate a configured system and persist "
                                            "snapshots, diagnostics and the manifest");
    c_run->add_option("config", config_path, "config file")->required();
    c_run->callback([&] { rc = cmd_run(config_path); });

    auto* c_check = app.add_subcommand("check", "sample the structural conditions of the "
                                                "configured reaction system");
    c_check->add_option("config", config_path, "config file")->required();
    c_check->add_option("--report", report_path, "machine-readable report path");
    c_check->callback([&] { rc = cmd_check(config_path, report_path); });

    auto* c_lyap = app.add_subcommand("lyapunov", "pairing-weight thresholds and comparison "
                                                  "matrices of the configured system");
    c_lyap->add_option("config", config_path, "config file")->required();
    c_lyap->add_option("--p", p_override, "polynomial degree override");
    c_lyap->add_option("--theta", theta_override, "pairing weight override");
    c_lyap->callback([&] { rc = cmd_lyapunov(config_path, p_override, theta_override); });

    auto* c_dual = app.add_subcommand("dual-check", "integrate the backward dual problem and "
                                                    "evaluate the duality comparison");
    c_dual->add_option("config", config_path, "config file")->required();
    c_dual->add_option("--pair", pair_text, "1-based component pair, e.g. 1,3");
    c_dual->add_option("--T", T, "comparison horizon (default: time.t_end)");
    c_dual->add_option("--tol", tol_rel, "relative tolerance of the comparison");
    c_dual->add_option("--xi", xi_text, "dual source expression in x, y, z (default 1)");
    c_dual->callback([&] { rc = cmd_dual_check(config_path, pair_text, T, tol_rel, xi_text); });

    auto* c_kernel = app.add_subcommand("kernel", "heat-potential layer toolbox (CSV output)");
    c_kernel->add_option("--op", kernel_op, "cn | verify-z0 | j-test | density | reconstruct");
    c_kernel->add_option("--n", n, "space dimension (cn: 0 = all)");
    c_kernel->add_option("--geometry", geometry_name, "interval | circle");
    c_kernel->add_option("--mode", mode_name, "paper-literal | standard");
    c_kernel->add_option("--T", T, "time horizon");
    c_kernel->add_option("--rows", rows, "density time rows");
    c_kernel->add_option("--segments", segments, "circle segments");
    c_kernel->callback(
        [&] { rc = cmd_kernel(kernel_op, n, geometry_name, mode_name, T, rows, segments); });

    auto* c_conv = app.add_subcommand("convergence", "manufactured-solution refinement study");
    c_conv->add_option("case", case_id, "case id");
    c_conv->add_flag("--list", list_cases, "list known cases");
    c_conv->callback([&] {
        if (!list_cases && case_id.empty())
            throw ValidationError("convergence needs a case id (or --list)");
        rc = cmd_convergence(case_id, list_cases);
    });

    auto* c_export = app.add_subcommand("export", "re-run a config and export plot data");
    c_export->add_option("config", config_path, "config file")->required();
    c_export->add_option("--what", what, "diagnostics | slice | series");
    c_export->callback([&] { rc = cmd_export(config_path, what); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        for (const auto& msg : e.messages()) std::fprintf(stderr, "error: %s\n", msg.c_str());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}
