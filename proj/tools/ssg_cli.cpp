// Command line front end: solve, evaluate-stationarity, experiment, plot,
// constants, selftest.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "ssg/checks.hpp"
#include "ssg/harness.hpp"
#include "ssg/stationarity.hpp"

namespace fs = std::filesystem;
using namespace ssg;

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    int threads = 0;
};

ExperimentConfig load_with_overrides(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args.config_path);
    if (args.seed_set) {
        cfg.seed = args.seed;
        cfg.seeds.clear();
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.threads > 0) cfg.threads = args.threads;
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
    auto* opt = cmd->add_option("--config", args.config_path, "experiment config (JSON)");
    if (config_required) opt->required();
    cmd->add_option("--seed", args.seed, "override the config seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--out", args.out_dir, "output directory override");
    cmd->add_option("--threads", args.threads, "worker threads for grid cells");
}

int cmd_solve(const CommonArgs& args) {
    ExperimentConfig cfg = load_with_overrides(args);
    // single run: first grid cell, first seed
    cfg.policy.eps_grid.resize(1);
    cfg.policy.eta_grid.resize(1);
    if (!cfg.solver.rho_hat_grid.empty()) cfg.solver.rho_hat_grid.resize(1);
    cfg.seeds.clear();
    ExperimentResult res = run_experiment(cfg);
    const RunOutcome& run = res.runs.front();
    if (run.failed) {
        std::cerr << "run failed: " << run.error << "\n";
        return 1;
    }
    std::cout << "trace: " << run.csv_path << "\n"
              << "final objective:      " << run.final_objective << "\n"
              << "final infeasibility:  " << run.final_infeasibility << "\n";
    return 0;
}

int cmd_experiment(const CommonArgs& args) {
    ExperimentConfig cfg = load_with_overrides(args);
    ExperimentResult res = run_experiment(cfg);
    int failures = 0;
    for (const auto& r : res.runs) failures += r.failed ? 1 : 0;
    std::cout << res.runs.size() << " runs, " << failures << " failed\n"
              << "summary: " << res.summary_path << "\n";
    if (!res.runs.empty() && !res.runs[res.winner].failed) {
        const RunOutcome& w = res.runs[res.winner];
        std::cout << "winner: " << w.run_id << " (objective " << w.final_objective << ")\n";
    }
    return failures == static_cast<int>(res.runs.size()) ? 1 : 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& point_path, long inner_iters) {
    ExperimentConfig cfg = load_with_overrides(args);
    BuiltProblem built = build_problem(cfg.problem);
    Vector x = built.x0;
    if (!point_path.empty()) {
        std::ifstream in(point_path);
        if (!in) {
            std::cerr << "cannot open point file " << point_path << "\n";
            return 1;
        }
        x.clear();
        double v;
        while (in >> v) x.push_back(v);
    }
    EvaluatorOptions opts;
    opts.rho_hat = cfg.stationarity.rho_hat;
    opts.rho_tilde = cfg.stationarity.rho_tilde;
    opts.inner_iters = inner_iters > 0 ? inner_iters : cfg.stationarity.inner_iterations;
    RngStream rng(cfg.seed);
    NearStationarityReport rep = near_stationarity(built.instance, x, rng, opts);
    std::cout << "distance ||xhat - x||: " << rep.distance << "\n"
              << "multiplier estimate:   " << rep.multiplier_estimate << "\n"
              << "kkt residual:          " << rep.kkt_residual << "\n"
              << "refinement delta:      " << rep.refinement_delta
              << (rep.refinement_delta < 0.01 ? "" : "  [exceeds the 1% stability rule]") << "\n"
              << "inner iterations used: " << rep.inner_iters_used << "\n";
    return 0;
}

int cmd_constants(const CommonArgs& args, double rho_hat_arg) {
    ExperimentConfig cfg = load_with_overrides(args);
    BuiltProblem built = build_problem(cfg.problem);
    const ProblemConstants& k = built.instance.constants;
    const double rho_hat = rho_hat_arg > 0.0 ? rho_hat_arg : 2.0 * std::max(k.rho, 1.0);
    ConstantReport rep = compute_constant_report(k, rho_hat);
    auto print = [](const char* name, const std::optional<double>& v) {
        std::cout << "  " << name << ": ";
        if (v)
            std::cout << *v << "\n";
        else
            std::cout << "(not derivable from the declared constants)\n";
    };
    std::cout << "problem " << cfg.problem.type << " with M=" << k.M << " rho=" << k.rho
              << " rho_hat=" << rho_hat << "\n";
    print("Lambda        ", rep.lambda);
    print("Lambda'       ", rep.lambda_prime);
    print("Lambda''      ", rep.lambda_double_prime);
    print("nu            ", rep.nu);
    print("nu'           ", rep.nu_prime);
    print("C             ", rep.c);
    print("C'            ", rep.c_prime);
    return 0;
}

int cmd_plot(const std::vector<std::string>& csvs, const std::string& metric,
             const std::string& x_axis, bool log_y, const std::string& out_path) {
    PlotSpec spec;
    spec.metric = metric;
    spec.x_axis = x_axis;
    spec.log_y = log_y;
    spec.title = metric;
    emit_plot(csvs, spec, out_path);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_selftest() {
    int failures = 0;
    auto report = [&failures](const char* name, const CheckResult& res) {
        std::cout << (res.ok ? "[ok]   " : "[FAIL] ") << name;
        if (!res.ok) {
            std::cout << "  (" << res.detail << ")";
            ++failures;
        }
        std::cout << "\n";
    };

    RngStream rng(2024);

    ProblemInstance ball;
    ball.dimension = 3;
    ball.projection = ball_projection(1.5);
    ball.objective = scad_oracle();
    ball.constraint = scad_oracle();
    auto sampler3 = [](RngStream& r) { return r.uniform_vector(3, -4.0, 4.0); };
    report("projection(ball): non-expansive, idempotent",
           check_projection(ball, sampler3, rng));

    auto scad_kinks = [](const Vector& x) {
        double d = std::numeric_limits<double>::infinity();
        for (double e : x) d = std::min({d, std::abs(e), std::abs(std::abs(e) - 2.0)});
        return d;
    };
    report("scad: finite-difference subgradients",
           check_subgradient_fd(scad_oracle(), sampler3, scad_kinks, rng));
    report("scad: 2-weak convexity",
           check_midpoint_weak_convexity(scad_oracle(), 2.0, sampler3, rng));

    auto data = std::make_shared<LinearClassifierData>();
    data->dimension = 4;
    for (int i = 0; i < 24; ++i) {
        SparseVector row;
        row.entries.emplace_back(0, i % 2 == 0 ? 1.0 : -1.0);
        for (std::size_t j = 1; j < 4; ++j) row.entries.emplace_back(j, rng.uniform(-1.0, 1.0));
        if (i < 12) {
            data->features.push_back(row);
            data->labels.push_back(i % 3 == 0 ? -1 : 1);
        } else if (i % 2 == 0) {
            data->group_p.push_back(row);
        } else {
            data->group_u.push_back(row);
        }
    }
    Oracle dp = dp_oracle(data);
    auto sampler4 = [](RngStream& r) { return r.uniform_vector(4, -1.5, 1.5); };
    auto dp_kink = [&dp](const Vector& x) { return dp.eval(x).value; };
    report("dp oracle: finite-difference subgradients",
           check_subgradient_fd(dp, sampler4, dp_kink, rng));
    report("dp oracle: beta-weak convexity",
           check_midpoint_weak_convexity(dp, lipschitz_constants(*data).beta, sampler4, rng));

    Oracle hinge = hinge_erm_oracle(data);
    auto hinge_kink = [&data](const Vector& x) {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < data->features.size(); ++i)
            d = std::min(d, std::abs(data->labels[i] * data->features[i].dot(x) - 1.0));
        return d;
    };
    report("hinge erm: finite-difference subgradients",
           check_subgradient_fd(hinge, sampler4, hinge_kink, rng));
    report("hinge erm: convexity", check_midpoint_weak_convexity(hinge, 0.0, sampler4, rng));

    std::cout << (failures == 0 ? "selftest passed" : "selftest FAILED") << "\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"switching subgradient solver for weakly convex constrained problems"};
    app.require_subcommand(1);

    CommonArgs solve_args, exp_args, eval_args, const_args;
    std::string eval_point;
    long eval_inner = 0;
    double const_rho_hat = 0.0;

    CLI::App* solve = app.add_subcommand("solve", "run one solver configuration");
    add_common(solve, solve_args);

    CLI::App* experiment = app.add_subcommand("experiment", "run a parameter grid with seeds");
    add_common(experiment, exp_args);

    CLI::App* evaluate =
        app.add_subcommand("evaluate-stationarity", "estimate ||xhat(x) - x|| at a point");
    add_common(evaluate, eval_args);
    evaluate->add_option("--point", eval_point, "whitespace-separated coordinates file");
    evaluate->add_option("--inner-iterations", eval_inner, "subproblem iterations (default 2500)");

    CLI::App* constants = app.add_subcommand("constants", "print the derivable analytic constants");
    add_common(constants, const_args);
    constants->add_option("--rho-hat", const_rho_hat, "regularization strength (default 2 max(rho,1))");

    std::vector<std::string> plot_csvs;
    std::string plot_metric = "objective", plot_x = "iterations", plot_out = "plot.svg";
    bool plot_log = false;
    CLI::App* plot = app.add_subcommand("plot", "render run CSVs as an SVG");
    plot->add_option("--csv", plot_csvs, "input CSV files")->required()->expected(-1);
    plot->add_option("--metric", plot_metric, "objective | infeasibility | near_stationarity");
    plot->add_option("--x", plot_x, "iterations | cpu");
    plot->add_flag("--log-y", plot_log, "log scale on y");
    plot->add_option("--out", plot_out, "output SVG path");

    app.add_subcommand("selftest", "run the sampling-based invariant suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(solve_args);
        if (experiment->parsed()) return cmd_experiment(exp_args);
        if (evaluate->parsed()) return cmd_evaluate(eval_args, eval_point, eval_inner);
        if (constants->parsed()) return cmd_constants(const_args, const_rho_hat);
        if (plot->parsed()) return cmd_plot(plot_csvs, plot_metric, plot_x, plot_log, plot_out);
        return cmd_selftest();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
