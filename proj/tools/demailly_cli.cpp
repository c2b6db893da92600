// Command-line driver: run a continuity-method scenario, verify the discrete
// identities and estimates without running a path, or cross-check the
// full-matrix solver against the decoupled scalar route on diagonal data.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "demailly/bundle_ops.hpp"
#include "demailly/config.hpp"
#include "demailly/errors.hpp"
#include "demailly/output.hpp"
#include "demailly/snapshot.hpp"

using namespace demailly;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string preset;
    int n = 0;
    long long seed = -1;
    bool snapshots = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("CONFIG", args.config_path, "scenario config file (key = value)");
    cmd->add_option("--config", args.config_path, "scenario config file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--preset", args.preset, "preset name (overrides the file)");
    cmd->add_option("--n", args.n, "grid points per side");
    cmd->add_option("--seed", args.seed, "random seed");
    cmd->add_flag("--snapshots", args.snapshots, "emit DMLY snapshots");
}

ScenarioConfig resolve_config(const CommonArgs& args) {
    ScenarioConfig config;
    if (!args.config_path.empty()) config = load_config(args.config_path);
    if (!args.preset.empty()) config.preset = args.preset;
    if (args.n > 0) config.n = args.n;
    if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
    if (args.snapshots) config.emit_snapshots = true;
    if (!args.out_dir.empty()) config.out_dir = args.out_dir;
    if (config.preset.empty() && !config.rank)
        throw ValidationError("preset", "given (or an explicit scenario in a config file)");
    return config;
}

int cmd_run(const CommonArgs& args) {
    ScenarioConfig config = resolve_config(args);
    Scenario scenario = build_scenario(config);

    SnapshotSink sink;
    if (config.emit_snapshots) {
        std::filesystem::create_directories(config.out_dir);
        sink = [&](const PathCheckpoint& cp, int accepted) {
            char name[64];
            std::snprintf(name, sizeof name, "/snapshot_%06d.dmly", accepted);
            write_snapshot(config.out_dir + name,
                           snapshot_from_checkpoint(cp, scenario.params.rank));
        };
    }

    PathResult res = run_path(scenario.params, scenario.state0, scenario.path, std::nullopt, sink);
    int code = write_outputs(res.records, res.outcome, config.out_dir);

    std::cout << "outcome: ";
    switch (res.outcome.status) {
    case PathStatus::Success:
        std::cout << "Success (t = 1, residual " << res.outcome.best_norm << ")\n";
        break;
    case PathStatus::Destabilized:
        std::cout << "Destabilized at t = " << res.outcome.t_reached
                  << " (rank pi = " << res.outcome.report->rank_pi
                  << ", deg Q = " << res.outcome.report->degQ_estimate << ")\n";
        break;
    case PathStatus::Stalled:
        std::cout << "Stalled at t = " << res.outcome.t_reached << " (best residual "
                  << res.outcome.best_norm << ")\n";
        break;
    }
    std::cout << "accepted steps: " << res.records.size() << "\n";
    std::cout << "outputs: " << config.out_dir << "/records.csv, outcome.txt\n";
    return code;
}

struct CheckPrinter {
    int failures = 0;
    void operator()(const std::string& name, bool pass, const std::string& detail) {
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << "\n";
        if (!pass) ++failures;
    }
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

int cmd_verify(const CommonArgs& args) {
    ScenarioConfig config = resolve_config(args);
    CheckPrinter check;

    // Spectral infrastructure at the configured grid.
    {
        GridSpec g(config.n);
        ScalarField s(g);
        for (int jx = 0; jx < g.n; ++jx)
            for (int jy = 0; jy < g.n; ++jy) s.at(jx, jy) = std::sin(2 * M_PI * g.x(jx));
        ScalarField ls = laplacian(s);
        double err = 0.0;
        for (int p = 0; p < g.size(); ++p)
            err = std::max(err, std::abs(ls.v[p] + 2 * M_PI * M_PI * s.v[p]));
        check("laplacian eigenfunction", err < 1e-10, "error " + num(err));

        ScalarField rho = band_limited_random(g, config.seed + 7, 5, 2.0);
        ScalarField u = poisson_solve(rho);
        ScalarField back = laplacian(u);
        double rerr = 0.0;
        double m = mean(rho);
        for (int p = 0; p < g.size(); ++p)
            rerr = std::max(rerr, std::abs(back.v[p] - (rho.v[p] - m)));
        check("poisson round trip", rerr < 1e-10, "error " + num(rerr));
    }

    Scenario scenario = build_scenario(config);
    const SystemParams& params = scenario.params;
    const GridSpec g = params.beta.grid;

    {
        double norm = residual(scenario.state0, params, 0.0).norm;
        check("t = 0 setup residual", norm < 1e-10, "norm " + num(norm));
    }
    {
        HermitianMatrixField init =
            random_hermitian_band_limited(g, params.rank, config.seed + 11, 2, 0.15, true);
        HermitianMatrixField h2 = solve_cushioned(params.c0, params.A, 1e-11, &init);
        double diff = 0.0;
        for (int p = 0; p < g.size(); ++p)
            diff = std::max(diff, (h2.at(p) - scenario.state0.H.at(p)).norm());
        check("cushioned solve initialization independence", diff < 1e-6, "diff " + num(diff));
        if (scenario.fields.diagonal) {
            double dd = 0.0;
            for (int p = 0; p < g.size(); ++p)
                dd = std::max(dd, (scenario.state0.H.at(p) + params.c0.at(p)).norm());
            check("constant diagonal cushioned solution H0 = -c0", dd < 1e-10, "diff " + num(dd));
        }
    }
    {
        DeltanormResult dn = verify_deltanorm(scenario.state0, params);
        check("norm-comparison inequality at t = 0", dn.pass,
              "max violation " + num(dn.max_violation) + ", slack " + num(dn.slack));
    }
    {
        double res_coarse = 0.0, res_fine = 0.0;
        for (int stage = 0; stage < 2; ++stage) {
            int n = stage == 0 ? 32 : 64;
            GridSpec gg(n);
            HermitianMatrixField h = gapped_random_hermitian(gg, 2, config.seed + 21, 0.5, 5);
            ConnectionData a = [&] {
                if (params.rank == 2 && scenario.fields.A.a01.max_norm() > 0.0) {
                    // reuse the preset connection when it is constant
                    MatrixFormField a01(gg, 2, FormKind::DzbarCoeff);
                    for (int p = 0; p < gg.size(); ++p) a01.at(p) = scenario.fields.A.a01.at(0);
                    return ConnectionData(std::move(a01));
                }
                Eigen::MatrixXcd nil = Eigen::MatrixXcd::Zero(2, 2);
                nil(0, 1) = 0.5;
                MatrixFormField a01(gg, 2, FormKind::DzbarCoeff);
                for (int p = 0; p < gg.size(); ++p) a01.at(p) = nil;
                return ConnectionData(std::move(a01));
            }();
            LaplaceIdentityResult lr = verify_laplace_identity(h, a, 0.5);
            (stage == 0 ? res_coarse : res_fine) = lr.max_masked_residual;
        }
        bool ok = res_coarse / res_fine >= 4.0;
        check("eigenvalue-laplacian identity refinement 32 -> 64", ok,
              "residuals " + num(res_coarse) + " -> " + num(res_fine));
    }
    {
        // h-hermiticity of g (Lambda i F0 + D) on connection-consistent data.
        HermitianMatrixField h = gapped_random_hermitian(g, 2, config.seed + 31, 0.5, 2);
        HermitianMatrixField f0 = connection_curvature(scenario.fields.A);
        MatrixFormField d = demailly_D(h, scenario.fields.A);
        HermitianMatrixField gexp = exp_herm(h);
        double asym = 0.0;
        for (int p = 0; p < g.size(); ++p) {
            Eigen::MatrixXcd x = gexp.at(p) * (f0.at(p) + d.at(p));
            asym = std::max(asym, (x - x.adjoint()).norm());
        }
        double tol = 1e-8 + 100.0 / (static_cast<double>(g.n) * g.n);
        check("curvature h-hermiticity", asym < tol, "asym " + num(asym));
    }

    std::cout << (check.failures == 0 ? "verify: all checks passed\n"
                                      : "verify: FAILURES present\n");
    return check.failures == 0 ? 0 : 1;
}

int cmd_oracle(const CommonArgs& args) {
    ScenarioConfig config = resolve_config(args);
    Scenario scenario = build_scenario(config);
    if (!scenario.fields.diagonal) {
        std::cerr << "oracle: scenario is not diagonal (A != 0); nothing to compare\n";
        return 1;
    }
    const SystemParams& params = scenario.params;
    const GridSpec g = params.beta.grid;
    CheckPrinter check;

    NewtonOptions opt;
    opt.tol = config.newton_tol;
    opt.max_iter = config.max_newton;

    MetricState state_m = scenario.state0;
    ScalarField f_ds;
    std::vector<ScalarField> u_ds;
    bool have_ds = false;

    std::vector<DiagnosticsRecord> records;
    std::vector<double> osc_history;
    EstimateConstants consts = assemble_constants(params);

    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        NewtonResult m = newton_solve(state_m, params, t, opt);
        DirectSumResult ds = solve_direct_sum(scenario.fields.beta_i, params.alpha,
                                              scenario.lambda_exp, params.a0, t, opt,
                                              have_ds ? &f_ds : nullptr,
                                              have_ds ? &u_ds : nullptr);
        const bool m_ok = m.status == NewtonStatus::Converged;
        const bool ds_ok = ds.status == NewtonStatus::Converged;
        if (!m_ok && !ds_ok) {
            std::cout << "[NOTE] both routes stop before t = " << t
                      << " (consistent: no solution reachable)\n";
            break;
        }
        if (m_ok != ds_ok) {
            check("solvability agreement at t = " + num(t), false,
                  m_ok ? "matrix route solved, scalar route failed"
                       : "scalar route solved, matrix route failed");
            break;
        }
        state_m = m.state;
        f_ds = ds.f;
        u_ds.assign(ds.u.begin(), ds.u.end() - 1);
        have_ds = true;

        double fdiff = 0.0;
        for (int p = 0; p < g.size(); ++p)
            fdiff = std::max(fdiff, std::abs(state_m.f.v[p] - ds.f.v[p]));
        EigenField eig = eig_sorted(state_m.H);
        double ediff = 0.0;
        for (int p = 0; p < g.size(); ++p) {
            std::vector<double> us;
            for (const ScalarField& u : ds.u) us.push_back(u.v[p]);
            std::sort(us.begin(), us.end(), std::greater<>());
            for (int i = 0; i < params.rank; ++i)
                ediff = std::max(ediff, std::abs(us[i] - eig.lambda(p, i)));
        }
        check("matrix vs direct-sum at t = " + num(t), fdiff < 1e-6 && ediff < 1e-6,
              "f diff " + num(fdiff) + ", eig diff " + num(ediff));

        records.push_back(record(state_m, params, consts, t, m.iters, m.norm));
        ScalarField umax = ds.u[0];
        for (int p = 0; p < g.size(); ++p)
            for (const ScalarField& u : ds.u) umax.v[p] = std::max(umax.v[p], u.v[p]);
        osc_history.push_back(oscillation(umax));
    }

    CheckReport report = verify_apriori_bounds(records, params, consts, &osc_history);
    for (const CheckResult& c : report.checks) {
        if (!c.applicable) continue;
        check("estimate " + c.name, c.pass,
              "measured " + num(c.measured) + " vs bound " + num(c.bound));
    }
    return check.failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"continuity-method laboratory for the coupled curvature system"};
    app.require_subcommand(1);

    CommonArgs run_args, verify_args, oracle_args;
    CLI::App* run = app.add_subcommand("run", "drive a scenario from t = 0 to t = 1");
    add_common(run, run_args);
    CLI::App* verify = app.add_subcommand("verify", "identity and invariant checks, no path");
    add_common(verify, verify_args);
    CLI::App* oracle = app.add_subcommand("oracle", "matrix vs direct-sum comparison");
    add_common(oracle, oracle_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (verify->parsed()) return cmd_verify(verify_args);
        if (oracle->parsed()) return cmd_oracle(oracle_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
