#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ssg/core.hpp"
#include "ssg/data.hpp"
#include "ssg/ipp.hpp"
#include "ssg/problems.hpp"
#include "ssg/schedules.hpp"
#include "ssg/solver.hpp"
#include "ssg/stationarity.hpp"

namespace ssg {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ProblemConfig {
    std::string type;  // dp | roc | two_ball | l1_quadratic
    // datasets
    std::string dataset_path;
    GroupRule group_rule;
    std::uint64_t split_seed = 13;
    bool standardize = false;  // per-feature scaling to [-1, 1]
    // dp
    double lambda = 0.2;
    double kappa = 0.02;
    // roc
    double kappa_frac = 0.001;
    double radius_mult = 5.0;
    long pretrain_iters = 2000;
    double pretrain_eta = 1.0;
    std::size_t grid_size = 400;
    // two_ball
    Vector center1, center2, coefficients;
    double radius = 1.0;
    double box_halfwidth = 0.0;
    // l1_quadratic: f = ||x - anchor||_1, g = ||x||^2 - 1, X = ball(ball_radius)
    Vector anchor;
    double ball_radius = 3.0;
};

struct SolverConfig {
    std::string type = "ssg";  // ssg | sssg | ipp-ssg
    long iterations = 1000;
    long checkpoint_count = 100;
    long batch_size = 1;
    long inner_iterations = 100;          // ipp
    std::vector<double> rho_hat_grid;     // ipp; empty -> max(rho,1) * {1, 1.5, 2}
    double rho_tilde = -1.0;              // ipp; <0 -> by constraint convexity class
};

struct PolicyConfig {
    std::string mode = "static";  // static | diminishing
    std::string output = "I";     // I | II
    std::vector<double> eps_grid{0.0};
    std::vector<double> eta_grid{1e-3};
    bool polyak_constraint = false;
    double polyak_scale = 1.0;
    double start_fraction = 0.0;  // S = floor(fraction * T)
};

struct StationarityConfig {
    bool enabled = false;
    long points = 100;  // equally spaced metric rows carrying a measurement
    long inner_iterations = 2500;
    double rho_hat = 0.0;    // 0 -> default 2 max(rho, 1)
    double rho_tilde = -1.0; // <0 -> by constraint convexity class
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds;  // empty -> {seed}
    std::string out_dir = "out";
    int threads = 1;
    ProblemConfig problem;
    SolverConfig solver;
    PolicyConfig policy;
    StationarityConfig stationarity;

    std::vector<std::uint64_t> effective_seeds() const {
        return seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds;
    }
};

inline void from_json_vector(const json& j, Vector& v) {
    v.clear();
    for (const auto& e : j) v.push_back(e.get<double>());
}

inline GroupRule parse_group_rule(const json& j) {
    GroupRule r;
    r.feature_index = j.value("feature", 0);
    const std::string kind = j.value("kind", "equals");
    if (kind == "equals") {
        r.kind = GroupRule::Kind::equals;
        r.value = j.value("value", 1.0);
    } else if (kind == "in_range") {
        r.kind = GroupRule::Kind::in_range;
        r.lo = j.at("lo").get<double>();
        r.hi = j.at("hi").get<double>();
    } else {
        throw ParseError("group_rule: unknown kind '" + kind + "'");
    }
    return r;
}

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    c.seed = j.value("seed", c.seed);
    if (j.contains("seeds"))
        for (const auto& s : j.at("seeds")) c.seeds.push_back(s.get<std::uint64_t>());
    c.out_dir = j.value("out_dir", c.out_dir);
    c.threads = j.value("threads", c.threads);

    const json& p = j.at("problem");
    c.problem.type = p.at("type").get<std::string>();
    c.problem.dataset_path = p.value("dataset", "");
    if (p.contains("group_rule")) c.problem.group_rule = parse_group_rule(p.at("group_rule"));
    c.problem.split_seed = p.value("split_seed", c.problem.split_seed);
    c.problem.standardize = p.value("standardize", false);
    c.problem.lambda = p.value("lambda", c.problem.lambda);
    c.problem.kappa = p.value("kappa", c.problem.kappa);
    c.problem.kappa_frac = p.value("kappa_frac", c.problem.kappa_frac);
    c.problem.radius_mult = p.value("radius_mult", c.problem.radius_mult);
    c.problem.pretrain_iters = p.value("pretrain_iters", c.problem.pretrain_iters);
    c.problem.pretrain_eta = p.value("pretrain_eta", c.problem.pretrain_eta);
    c.problem.grid_size = p.value("grid_size", c.problem.grid_size);
    if (p.contains("center1")) from_json_vector(p.at("center1"), c.problem.center1);
    if (p.contains("center2")) from_json_vector(p.at("center2"), c.problem.center2);
    if (p.contains("coefficients")) from_json_vector(p.at("coefficients"), c.problem.coefficients);
    c.problem.radius = p.value("radius", c.problem.radius);
    c.problem.box_halfwidth = p.value("box_halfwidth", c.problem.box_halfwidth);
    if (p.contains("anchor")) from_json_vector(p.at("anchor"), c.problem.anchor);
    c.problem.ball_radius = p.value("ball_radius", c.problem.ball_radius);

    if (j.contains("solver")) {
        const json& s = j.at("solver");
        c.solver.type = s.value("type", c.solver.type);
        c.solver.iterations = s.value("iterations", c.solver.iterations);
        c.solver.checkpoint_count = s.value("checkpoint_count", c.solver.checkpoint_count);
        c.solver.batch_size = s.value("batch_size", c.solver.batch_size);
        c.solver.inner_iterations = s.value("inner_iterations", c.solver.inner_iterations);
        if (s.contains("rho_hat_grid"))
            for (const auto& v : s.at("rho_hat_grid")) c.solver.rho_hat_grid.push_back(v.get<double>());
        c.solver.rho_tilde = s.value("rho_tilde", c.solver.rho_tilde);
    }
    if (j.contains("policy")) {
        const json& q = j.at("policy");
        c.policy.mode = q.value("mode", c.policy.mode);
        c.policy.output = q.value("output", c.policy.output);
        if (q.contains("eps_grid")) {
            c.policy.eps_grid.clear();
            for (const auto& v : q.at("eps_grid")) c.policy.eps_grid.push_back(v.get<double>());
        }
        if (q.contains("eta_grid")) {
            c.policy.eta_grid.clear();
            for (const auto& v : q.at("eta_grid")) c.policy.eta_grid.push_back(v.get<double>());
        }
        c.policy.polyak_constraint = q.value("polyak_constraint", false);
        c.policy.polyak_scale = q.value("polyak_scale", 1.0);
        c.policy.start_fraction = q.value("start_fraction", 0.0);
    }
    if (j.contains("stationarity")) {
        const json& q = j.at("stationarity");
        c.stationarity.enabled = q.value("enabled", false);
        c.stationarity.points = q.value("points", c.stationarity.points);
        c.stationarity.inner_iterations = q.value("inner_iterations", c.stationarity.inner_iterations);
        c.stationarity.rho_hat = q.value("rho_hat", 0.0);
        c.stationarity.rho_tilde = q.value("rho_tilde", -1.0);
    }
    if (c.policy.eps_grid.empty() || c.policy.eta_grid.empty())
        throw ParseError("config: policy grids must be nonempty");
    if (c.solver.checkpoint_count > c.solver.iterations)
        throw ParseError("config: checkpoint_count exceeds iteration count");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("config: cannot open " + path);
    json j;
    in >> j;
    return parse_config(j);
}

inline json policy_to_json(const StepsizePolicy& p) {
    json j;
    j["kind"] = to_string(p.kind);
    j["output"] = p.output_mode == OutputMode::output_i ? "I" : "II";
    j["T"] = p.total_iterations;
    j["S"] = p.start_index;
    j["diminishing"] = p.diminishing;
    j["eps_base"] = p.eps_base;
    j["eta_base"] = p.eta_base;
    j["constraint_step"] = p.constraint_step == ConstraintStep::same_as_objective
                               ? "same"
                               : (p.constraint_step == ConstraintStep::polyak ? "polyak"
                                                                              : "scaled_polyak");
    j["polyak_scale"] = p.polyak_scale;
    j["batch_size"] = p.batch_size;
    j["parameters"] = p.parameters;
    if (!p.warnings.empty()) j["warnings"] = p.warnings;
    return j;
}

inline StepsizePolicy policy_from_json(const json& j) {
    StepsizePolicy p;
    const std::string kind = j.value("kind", "manual_grid");
    for (int k = 0; k <= static_cast<int>(PolicyKind::manual_grid); ++k)
        if (kind == to_string(static_cast<PolicyKind>(k))) p.kind = static_cast<PolicyKind>(k);
    p.output_mode = j.value("output", "I") == std::string("II") ? OutputMode::output_ii
                                                                : OutputMode::output_i;
    p.total_iterations = j.at("T").get<long>();
    p.start_index = j.value("S", 0L);
    p.diminishing = j.value("diminishing", false);
    p.eps_base = j.at("eps_base").get<double>();
    p.eta_base = j.at("eta_base").get<double>();
    const std::string cs = j.value("constraint_step", "same");
    p.constraint_step = cs == "polyak" ? ConstraintStep::polyak
                        : cs == "scaled_polyak" ? ConstraintStep::scaled_polyak
                                                : ConstraintStep::same_as_objective;
    p.polyak_scale = j.value("polyak_scale", 1.0);
    p.batch_size = j.value("batch_size", 1L);
    if (j.contains("parameters"))
        p.parameters = j.at("parameters").get<std::map<std::string, double>>();
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// Problem construction
// ---------------------------------------------------------------------------

struct BuiltProblem {
    ProblemInstance instance;
    Vector x0;
    std::shared_ptr<const LinearClassifierData> data;  // when dataset-backed
    // two-ball extras for feasible-start sampling
    bool sample_x0_in_ball = false;
    Vector ball_center;
    double ball_radius = 0.0;
};

inline std::string resolve_dataset_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::exists(path)) return path;
    if (const char* dir = std::getenv("SSG_DATA_DIR")) {
        const fs::path alt = fs::path(dir) / fs::path(path).filename();
        if (fs::exists(alt)) return alt.string();
    }
    throw ParseError("dataset not found: " + path + " (set SSG_DATA_DIR to override)");
}

inline LinearClassifierData load_split_dataset(const ProblemConfig& cfg) {
    std::ifstream in(resolve_dataset_path(cfg.dataset_path));
    LinearClassifierData raw = parse_libsvm(in);
    if (cfg.standardize) {
        std::vector<double> scale(raw.dimension, 0.0);
        for (const auto& row : raw.features)
            for (const auto& [i, v] : row.entries) scale[i] = std::max(scale[i], std::abs(v));
        for (auto& row : raw.features)
            for (auto& [i, v] : row.entries)
                if (scale[i] > 0.0) v /= scale[i];
    }
    return split_dataset(raw, cfg.group_rule, cfg.split_seed).data;
}

inline BuiltProblem build_problem(const ProblemConfig& cfg) {
    BuiltProblem built;
    if (cfg.type == "dp") {
        auto data = std::make_shared<LinearClassifierData>(load_split_dataset(cfg));
        built.data = data;
        built.instance = dp_problem(data, cfg.lambda, cfg.kappa);
        built.x0.assign(data->dimension, 0.0);
    } else if (cfg.type == "roc") {
        auto data = std::make_shared<LinearClassifierData>(load_split_dataset(cfg));
        built.data = data;
        PretrainResult pre = erm_pretrain(data, cfg.pretrain_iters, cfg.pretrain_eta);
        built.instance = roc_problem(data, pre.loss, cfg.kappa_frac, cfg.radius_mult, pre.x,
                                     cfg.grid_size);
        built.x0 = pre.x;
    } else if (cfg.type == "two_ball") {
        TwoBallInstance inst = synthetic_two_ball(cfg.center1, cfg.center2, cfg.radius,
                                                  cfg.coefficients, cfg.box_halfwidth);
        built.instance = inst.problem;
        built.x0 = inst.center1;
        built.sample_x0_in_ball = true;
        built.ball_center = inst.center1;
        built.ball_radius = inst.radius;
    } else if (cfg.type == "l1_quadratic") {
        ProblemInstance p;
        p.dimension = cfg.anchor.size();
        p.projection = ball_projection(cfg.ball_radius);
        p.objective.weak_convexity = 0.0;
        p.objective.eval = [anchor = cfg.anchor](const Vector& x) {
            SubgradientResult r;
            r.subgradient.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x[i] - anchor[i];
                r.value += std::abs(d);
                r.subgradient[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            }
            return r;
        };
        p.constraint.weak_convexity = 0.0;
        p.constraint.eval = [](const Vector& x) {
            SubgradientResult r;
            r.value = norm_sq(x) - 1.0;
            r.subgradient = scaled(x, 2.0);
            return r;
        };
        p.constants.M = std::max(std::sqrt(static_cast<double>(p.dimension)),
                                 2.0 * cfg.ball_radius);
        p.constants.rho = 0.0;
        p.constants.D = 2.0 * cfg.ball_radius;
        p.constants.mu = 2.0;
        p.constants.x_feas = Vector(p.dimension, 0.0);
        p.constants.g_feas_value = -1.0;
        built.instance = std::move(p);
        built.x0.assign(cfg.anchor.size(), 0.0);
    } else {
        throw ParseError("problem: unknown type '" + cfg.type + "'");
    }
    return built;
}

// Random point in a ball, used for feasible starts on the synthetic instance.
inline Vector sample_in_ball(const Vector& center, double radius, RngStream& rng) {
    Vector d = rng.normal_vector(center.size());
    const double n = norm(d);
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(center.size()));
    Vector x = center;
    if (n > 0.0) axpy(r / n, d, x);
    return x;
}

// ---------------------------------------------------------------------------
// Metrics and CSV
// ---------------------------------------------------------------------------

constexpr const char* kCsvHeader = "run_id,seed,iteration,wall_clock_s,objective,infeasibility,near_stationarity";

struct MetricsRow {
    std::string run_id;
    std::uint64_t seed = 0;
    long iteration = 0;
    double wall_clock_s = 0.0;
    double objective = 0.0;
    double infeasibility = 0.0;
    std::optional<double> near_stationarity;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open for writing: " + path);
    out << kCsvHeader << "\n";
    for (const auto& r : rows) {
        out << r.run_id << ',' << r.seed << ',' << r.iteration << ','
            << format_double(r.wall_clock_s) << ',' << format_double(r.objective) << ','
            << format_double(r.infeasibility) << ','
            << (r.near_stationarity ? format_double(*r.near_stationarity) : std::string()) << "\n";
    }
}

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw ParseError("csv: missing column '" + name + "'");
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open: " + path);
    CsvTable t;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (line.empty()) continue;
        if (!line.empty() && line.back() == ',') cells.push_back("");
        if (header) {
            t.columns = cells;
            header = false;
        } else {
            t.rows.push_back(cells);
        }
    }
    if (t.columns.empty()) throw ParseError("csv: empty file " + path);
    return t;
}

// Equally spaced 0-based checkpoint iterations: floor((k+1) T / n) - 1.
inline std::vector<long> equally_spaced_iterations(long total, long count) {
    std::vector<long> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long k = 0; k < count; ++k) {
        long idx = (total / count) * (k + 1) + ((total % count) * (k + 1)) / count - 1;
        idx = std::max<long>(idx, 0);
        if (out.empty() || idx != out.back()) out.push_back(idx);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct GridCell {
    std::size_t index = 0;
    double eps = 0.0;
    double eta = 0.0;
    double rho_hat = 0.0;  // ipp only
};

struct RunOutcome {
    GridCell cell;
    std::uint64_t seed = 0;
    std::string run_id;
    std::string csv_path;
    double final_objective = std::numeric_limits<double>::quiet_NaN();
    double final_infeasibility = std::numeric_limits<double>::quiet_NaN();
    bool failed = false;
    std::string error;
};

struct ExperimentResult {
    std::vector<RunOutcome> runs;
    std::string summary_path;
    std::size_t winner = 0;  // index into runs
};

namespace detail {

inline StepsizePolicy cell_policy(const ExperimentConfig& cfg, const GridCell& cell, long t_total) {
    const bool diminishing = cfg.policy.mode == "diminishing";
    const OutputMode mode =
        cfg.policy.output == "II" ? OutputMode::output_ii : OutputMode::output_i;
    const long s = static_cast<long>(cfg.policy.start_fraction * static_cast<double>(t_total));
    return schedule_manual(cell.eps, cell.eta, t_total, std::min(s, t_total - 1), diminishing,
                           mode,
                           cfg.policy.polyak_constraint ? ConstraintStep::polyak
                                                        : ConstraintStep::same_as_objective,
                           cfg.policy.polyak_scale);
}

inline SolverTrace execute_cell(const ExperimentConfig& cfg, const BuiltProblem& built,
                                const GridCell& cell, RngStream& rng, const Vector& x0,
                                const std::vector<long>& checkpoints) {
    CheckpointPlan plan;
    plan.every = 0;
    plan.at = &checkpoints;
    if (cfg.solver.type == "ssg") {
        return ssg_run(built.instance, cell_policy(cfg, cell, cfg.solver.iterations), x0, rng,
                       plan);
    }
    if (cfg.solver.type == "sssg") {
        return sssg_run(built.instance, cell_policy(cfg, cell, cfg.solver.iterations), x0,
                        cfg.solver.batch_size, rng, plan);
    }
    if (cfg.solver.type == "ipp-ssg") {
        const long inner = cfg.solver.inner_iterations;
        const long outer = std::max<long>(1, cfg.solver.iterations / inner);
        const double rho = built.instance.constants.rho;
        const double rho_tilde =
            cfg.solver.rho_tilde >= 0.0
                ? cfg.solver.rho_tilde
                : (built.instance.constraint.weak_convexity > 0.0 ? cell.rho_hat : 0.0);
        StepsizePolicy inner_policy = cell_policy(cfg, cell, inner);
        inner_policy.output_mode = built.instance.constraint.weak_convexity > 0.0
                                       ? OutputMode::output_ii
                                       : OutputMode::output_i;
        IppResult r = ipp_run(built.instance, outer, inner_policy, inner, cell.rho_hat, rho_tilde,
                              x0, rng);
        (void)rho;
        return std::move(r.trace);
    }
    throw ParseError("solver: unknown type '" + cfg.solver.type + "'");
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    BuiltProblem built = build_problem(cfg.problem);

    // grid: eps x eta (x rho_hat for ipp)
    std::vector<GridCell> cells;
    std::vector<double> rho_hats{0.0};
    if (cfg.solver.type == "ipp-ssg") {
        rho_hats = cfg.solver.rho_hat_grid;
        if (rho_hats.empty()) {
            const double base = std::max(built.instance.constants.rho, 1.0);
            rho_hats = {base, 1.5 * base, 2.0 * base};
        }
    }
    std::size_t idx = 0;
    for (double rh : rho_hats)
        for (double eps : cfg.policy.eps_grid)
            for (double eta : cfg.policy.eta_grid) cells.push_back({idx++, eps, eta, rh});

    const std::vector<std::uint64_t> seeds = cfg.effective_seeds();
    const std::vector<long> checkpoints =
        equally_spaced_iterations(cfg.solver.iterations, cfg.solver.checkpoint_count);
    std::vector<long> stat_set;
    if (cfg.stationarity.enabled)
        stat_set = equally_spaced_iterations(cfg.solver.iterations,
                                             std::min(cfg.stationarity.points,
                                                      cfg.solver.checkpoint_count));

    struct Task {
        GridCell cell;
        std::uint64_t seed;
        std::size_t seed_index;
    };
    std::vector<Task> tasks;
    for (const auto& cell : cells)
        for (std::size_t si = 0; si < seeds.size(); ++si) tasks.push_back({cell, seeds[si], si});

    std::vector<RunOutcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            RunOutcome& out = outcomes[i];
            out.cell = task.cell;
            out.seed = task.seed;
            {
                std::ostringstream id;
                id << cfg.name << "_cell" << task.cell.index << "_seed" << task.seed;
                out.run_id = id.str();
            }
            out.csv_path = (fs::path(cfg.out_dir) / (out.run_id + ".csv")).string();
            try {
                RngStream rng =
                    RngStream(cfg.seed).substream(task.cell.index).substream(task.seed_index);
                Vector x0 = built.x0;
                if (built.sample_x0_in_ball)
                    x0 = sample_in_ball(built.ball_center, 0.9 * built.ball_radius, rng);

                const double cpu0 = detail::process_cpu_seconds();
                SolverTrace trace =
                    detail::execute_cell(cfg, built, task.cell, rng, x0, checkpoints);

                EvaluatorOptions ev;
                ev.rho_hat = cfg.stationarity.rho_hat;
                ev.rho_tilde = cfg.stationarity.rho_tilde;
                ev.inner_iters = cfg.stationarity.inner_iterations;

                std::vector<MetricsRow> rows;
                std::size_t stat_cursor = 0;
                for (std::size_t k = 0; k < trace.checkpoint_iterations.size(); ++k) {
                    MetricsRow row;
                    row.run_id = out.run_id;
                    row.seed = task.seed;
                    row.iteration = trace.checkpoint_iterations[k];
                    row.objective = trace.checkpoint_f[k];
                    const Vector& x = trace.checkpoint_points[k];
                    row.infeasibility =
                        std::max(0.0, eval_constraint(built.instance, x).value);
                    row.wall_clock_s = trace.checkpoint_cpu_s.empty()
                                           ? 0.0
                                           : trace.checkpoint_cpu_s[k] - cpu0;
                    while (stat_cursor < stat_set.size() && stat_set[stat_cursor] < row.iteration)
                        ++stat_cursor;
                    if (cfg.stationarity.enabled && stat_cursor < stat_set.size() &&
                        stat_set[stat_cursor] == row.iteration) {
                        RngStream ev_rng = rng.substream(1000 + k);
                        row.near_stationarity =
                            near_stationarity(built.instance, x, ev_rng, ev).distance;
                    }
                    rows.push_back(std::move(row));
                }
                write_csv(out.csv_path, rows);
                if (!rows.empty()) {
                    out.final_objective = rows.back().objective;
                    out.final_infeasibility = rows.back().infeasibility;
                }
            } catch (const std::exception& e) {
                out.failed = true;
                out.error = e.what();
            }
        }
    };

    const int n_threads = std::max(1, cfg.threads);
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    ExperimentResult result;
    result.runs = std::move(outcomes);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        const RunOutcome& r = result.runs[i];
        if (!r.failed && r.final_objective < best) {
            best = r.final_objective;
            result.winner = i;
        }
    }

    result.summary_path = (fs::path(cfg.out_dir) / (cfg.name + "_summary.csv")).string();
    std::ofstream sum(result.summary_path, std::ios::binary);
    sum << "run_id,seed,cell,eps,eta,rho_hat,final_objective,final_infeasibility,failed,winner\n";
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        const RunOutcome& r = result.runs[i];
        sum << r.run_id << ',' << r.seed << ',' << r.cell.index << ','
            << format_double(r.cell.eps) << ',' << format_double(r.cell.eta) << ','
            << format_double(r.cell.rho_hat) << ','
            << (r.failed ? "" : format_double(r.final_objective)) << ','
            << (r.failed ? "" : format_double(r.final_infeasibility)) << ','
            << (r.failed ? 1 : 0) << ',' << (i == result.winner ? 1 : 0) << "\n";
    }
    return result;
}

// ---------------------------------------------------------------------------
// SVG plots: one curve per CSV, metric vs iterations or CPU time.
// ---------------------------------------------------------------------------

struct PlotSpec {
    std::string metric = "objective";  // objective | infeasibility | near_stationarity
    std::string x_axis = "iterations"; // iterations | cpu
    bool log_y = false;
    std::string title;
};

inline void emit_plot(const std::vector<std::string>& csv_paths, const PlotSpec& spec,
                      const std::string& out_path) {
    if (csv_paths.empty()) throw ParseError("emit_plot: no input CSVs");
    struct Curve {
        std::string label;
        std::vector<double> x, y;
    };
    std::vector<Curve> curves;
    for (const auto& path : csv_paths) {
        CsvTable t = read_csv(path);
        const std::size_t xi =
            t.column(spec.x_axis == "cpu" ? "wall_clock_s" : "iteration");
        const std::size_t yi = t.column(spec.metric);
        Curve c;
        c.label = std::filesystem::path(path).stem().string();
        for (const auto& row : t.rows) {
            if (yi >= row.size() || row[yi].empty()) continue;
            const double y = std::stod(row[yi]);
            if (spec.log_y && y <= 0.0) continue;
            c.x.push_back(std::stod(row[xi]));
            c.y.push_back(spec.log_y ? std::log10(y) : y);
        }
        if (c.x.empty()) throw ParseError("emit_plot: no plottable rows in " + path +
                                          " for metric '" + spec.metric + "'");
        curves.push_back(std::move(c));
    }

    double xmin = curves[0].x[0], xmax = xmin, ymin = curves[0].y[0], ymax = ymin;
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            xmin = std::min(xmin, c.x[i]);
            xmax = std::max(xmax, c.x[i]);
            ymin = std::min(ymin, c.y[i]);
            ymax = std::max(ymax, c.y[i]);
        }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;

    const double w = 720, h = 480, ml = 70, mr = 160, mt = 40, mb = 50;
    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto sy = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ParseError("emit_plot: cannot write " + out_path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>"
        << (spec.title.empty() ? spec.metric : spec.title) << "</text>\n";
    // axes
    out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
        << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
        << "' stroke='black'/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 4.0;
        const double yv = ymin + (ymax - ymin) * k / 4.0;
        out << "<text x='" << sx(xv) << "' y='" << h - mb + 18
            << "' text-anchor='middle' font-size='11'>" << format_double(xv) << "</text>\n";
        out << "<text x='" << ml - 6 << "' y='" << sy(yv) + 4
            << "' text-anchor='end' font-size='11'>"
            << (spec.log_y ? "1e" + format_double(yv) : format_double(yv)) << "</text>\n";
    }
    out << "<text x='" << (ml + w - mr) / 2 << "' y='" << h - 10
        << "' text-anchor='middle' font-size='12'>"
        << (spec.x_axis == "cpu" ? "cpu time (s)" : "iterations") << "</text>\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        out << "<polyline fill='none' stroke='" << palette[c % 8] << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < curves[c].x.size(); ++i)
            out << sx(curves[c].x[i]) << ',' << sy(curves[c].y[i]) << ' ';
        out << "'/>\n";
        out << "<text x='" << w - mr + 10 << "' y='" << mt + 16 * (c + 1) << "' font-size='11' fill='"
            << palette[c % 8] << "'>" << curves[c].label << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace ssg
