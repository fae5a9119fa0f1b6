#pragma once

#include <algorithm>
#include <cstdint>
#include <ctime>
#include <string>
#include <vector>

#include "ssg/core.hpp"
#include "ssg/schedules.hpp"

namespace ssg {

// ---------------------------------------------------------------------------
// Traces and output sampling
// ---------------------------------------------------------------------------

// Pre-drawn eta-weighted output candidate, maintained while streaming so huge
// runs need no per-iteration storage (weighted reservoir sampling).
struct ReservoirSample {
    long tau = -1;
    Vector x;
    double total_weight = 0.0;
    long count = 0;
};

struct SolverTrace {
    long total_iterations = 0;  // T
    long start_index = 0;       // S
    std::vector<long> index_set_i;  // t >= S with g(x_t) <= eps_t (omega_bar in stochastic mode)
    std::vector<long> index_set_j;
    std::vector<double> eta_sequence;  // eta_t for t in [0, T)
    std::vector<double> g_values;      // g(x_t), or omega_bar_t in stochastic mode
    std::vector<long> checkpoint_iterations;
    std::vector<Vector> checkpoint_points;
    std::vector<double> checkpoint_f;
    std::vector<double> checkpoint_cpu_s;  // process CPU time when the checkpoint was taken
    Vector x0;       // starting point after projection
    Vector x_final;  // x_T
    std::uint64_t seed = 0;
    long batch_size = 0;  // 0 for deterministic runs
    bool stochastic = false;
    bool zero_constraint_subgradient_seen = false;  // Polyak branch hit a stationary point of g_+
    bool converged = true;                          // feasibility runs only
    long iterations_run = 0;
    bool lean = false;  // per-iteration sequences dropped; reservoirs carry the output draw
    ReservoirSample reservoir_i, reservoir_ij;
    double min_g_running = std::numeric_limits<double>::infinity();

    // checkpointed iterate for iteration t, or nullptr
    const Vector* checkpoint_at(long t) const {
        auto it = std::lower_bound(checkpoint_iterations.begin(), checkpoint_iterations.end(), t);
        if (it == checkpoint_iterations.end() || *it != t) return nullptr;
        return &checkpoint_points[static_cast<std::size_t>(it - checkpoint_iterations.begin())];
    }

    double min_g_seen() const {
        double m = min_g_running;
        for (double g : g_values) m = std::min(m, g);
        return m;
    }
};

struct OutputSample {
    long tau = 0;
    Vector x_tau;  // empty when the iterate was not checkpointed; see materialize_iterate
    OutputMode mode = OutputMode::output_i;
};

// eta_t / sum(eta_s) categorical draw over I (Output I) or I u J (Output II).
// A lean trace carries one pre-drawn candidate per mode instead of the
// per-iteration weights; it is returned as-is.
inline OutputSample sample_output(const SolverTrace& trace, OutputMode mode, RngStream& rng) {
    if (trace.lean) {
        const ReservoirSample& r =
            mode == OutputMode::output_i ? trace.reservoir_i : trace.reservoir_ij;
        if (r.tau < 0) {
            if (mode == OutputMode::output_i)
                throw OracleError(
                    "sample_output: no nearly feasible iterate was recorded (min g seen = " +
                    std::to_string(trace.min_g_seen()) + ")");
            throw OracleError("sample_output: trace has no recorded iterations");
        }
        OutputSample s;
        s.tau = r.tau;
        s.x_tau = r.x;
        s.mode = mode;
        return s;
    }
    std::vector<long> indices = trace.index_set_i;
    if (mode == OutputMode::output_ii) {
        indices.insert(indices.end(), trace.index_set_j.begin(), trace.index_set_j.end());
        std::sort(indices.begin(), indices.end());
    }
    if (indices.empty()) {
        if (mode == OutputMode::output_i)
            throw OracleError("sample_output: no nearly feasible iterate was recorded (min g seen = " +
                              std::to_string(trace.min_g_seen()) + ")");
        throw OracleError("sample_output: trace has no recorded iterations");
    }
    double total = 0.0;
    for (long t : indices) total += trace.eta_sequence[static_cast<std::size_t>(t)];
    if (total <= 0.0) throw OracleError("sample_output: total stepsize weight is zero");
    const double u = rng.uniform() * total;
    double acc = 0.0;
    long chosen = indices.back();
    for (long t : indices) {
        acc += trace.eta_sequence[static_cast<std::size_t>(t)];
        if (u < acc) {
            chosen = t;
            break;
        }
    }
    OutputSample s;
    s.tau = chosen;
    s.mode = mode;
    if (const Vector* p = trace.checkpoint_at(chosen)) s.x_tau = *p;
    return s;
}

// ---------------------------------------------------------------------------
// Polyak stepsize
// ---------------------------------------------------------------------------

inline double polyak_step(double g_value, double subgrad_norm_sq, double scale = 1.0) {
    if (g_value < 0.0) throw ContractError("polyak_step: g value must be nonnegative (pass g_+)");
    if (subgrad_norm_sq < 0.0) throw ContractError("polyak_step: negative squared norm");
    if (subgrad_norm_sq == 0.0) return 0.0;
    return scale * g_value / subgrad_norm_sq;
}

// Checkpoint placement: every `every`-th iteration, or an explicit sorted
// list of iteration indices (used by the harness to hit exact metric rows).
// record_sequences = false switches the run to lean mode: per-iteration
// sequences are dropped and the output draw is maintained by streaming
// reservoirs instead (memory stays O(d) at any T).
struct CheckpointPlan {
    long every = 1;                // <= 0 disables periodic checkpoints
    const std::vector<long>* at = nullptr;  // sorted, optional
    bool record_sequences = true;

    bool wants(long t, std::size_t& cursor) const {
        if (at) {
            while (cursor < at->size() && (*at)[cursor] < t) ++cursor;
            return cursor < at->size() && (*at)[cursor] == t;
        }
        return every > 0 && t % every == 0;
    }
};

namespace detail {

inline double process_cpu_seconds() {
    return static_cast<double>(std::clock()) / CLOCKS_PER_SEC;
}

// Single-pass weighted reservoir: after processing items with weights w_t the
// held candidate is distributed with P(tau = t) = w_t / sum(w).
inline void reservoir_update(ReservoirSample& r, double weight, long t, const Vector& x,
                             RngStream& rng) {
    if (weight <= 0.0) return;
    r.total_weight += weight;
    ++r.count;
    if (r.tau < 0 || rng.uniform() < weight / r.total_weight) {
        r.tau = t;
        r.x = x;
    }
}

inline double resolve_constraint_eta(const StepsizePolicy& policy, long t, double g_value,
                                     double subgrad_norm_sq, bool* zero_subgradient) {
    switch (policy.constraint_step) {
        case ConstraintStep::same_as_objective:
            return policy.eta_objective(t);
        case ConstraintStep::polyak:
        case ConstraintStep::scaled_polyak: {
            if (subgrad_norm_sq == 0.0 && zero_subgradient) *zero_subgradient = true;
            const double scale =
                policy.constraint_step == ConstraintStep::polyak ? 1.0 : policy.polyak_scale;
            return polyak_step(std::max(g_value, 0.0), subgrad_norm_sq, scale);
        }
    }
    return policy.eta_objective(t);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Algorithm 1 (deterministic switching subgradient)
// ---------------------------------------------------------------------------

inline SolverTrace ssg_run(const ProblemInstance& problem, const StepsizePolicy& policy,
                           const Vector& x0, const RngStream& rng,
                           const CheckpointPlan& checkpoints = {}) {
    policy.validate();
    require_dimension(problem, x0, "ssg_run");
    const long t_total = policy.total_iterations;
    const long s_start = policy.start_index;

    SolverTrace trace;
    trace.total_iterations = t_total;
    trace.start_index = s_start;
    trace.seed = rng.seed();
    trace.lean = !checkpoints.record_sequences;
    if (!trace.lean) {
        trace.eta_sequence.reserve(static_cast<std::size_t>(t_total));
        trace.g_values.reserve(static_cast<std::size_t>(t_total));
    }
    RngStream reservoir_rng = rng.substream(2);

    Vector x = project(problem, x0);
    trace.x0 = x;
    std::size_t checkpoint_cursor = 0;

    for (long t = 0; t < t_total; ++t) {
        const SubgradientResult g = eval_constraint(problem, x);
        if (trace.lean)
            trace.min_g_running = std::min(trace.min_g_running, g.value);
        else
            trace.g_values.push_back(g.value);

        if (checkpoints.wants(t, checkpoint_cursor)) {
            trace.checkpoint_iterations.push_back(t);
            trace.checkpoint_points.push_back(x);
            trace.checkpoint_f.push_back(eval_objective(problem, x).value);
            trace.checkpoint_cpu_s.push_back(detail::process_cpu_seconds());
        }

        const double eps_t = policy.epsilon(t);
        double eta = 0.0;
        const Vector* step_direction = nullptr;
        bool in_i = false;
        SubgradientResult f;
        if (g.value <= eps_t) {
            in_i = true;
            f = eval_objective(problem, x);
            step_direction = &f.subgradient;
            eta = policy.eta_objective(t);
            if (!trace.lean && t >= s_start) trace.index_set_i.push_back(t);
        } else {
            step_direction = &g.subgradient;
            eta = detail::resolve_constraint_eta(policy, t, g.value, norm_sq(g.subgradient),
                                                 &trace.zero_constraint_subgradient_seen);
            if (!trace.lean && t >= s_start) trace.index_set_j.push_back(t);
        }
        if (trace.lean) {
            if (t >= s_start) {
                if (in_i) detail::reservoir_update(trace.reservoir_i, eta, t, x, reservoir_rng);
                detail::reservoir_update(trace.reservoir_ij, eta, t, x, reservoir_rng);
            }
        } else {
            trace.eta_sequence.push_back(eta);
        }

        Vector next = x;
        axpy(-eta, *step_direction, next);
        next = project(problem, next);
        if (!is_finite(next))
            throw OracleError("ssg_run: non-finite iterate at iteration " + std::to_string(t));
        x = std::move(next);
    }
    trace.x_final = x;
    trace.iterations_run = t_total;
    return trace;
}

// ---------------------------------------------------------------------------
// Algorithm 2 (stochastic switching subgradient)
//
// Per iteration: draw B value samples of g, average into omega_bar, switch on
// omega_bar <= eps_t, then draw one stochastic subgradient of the selected
// function. The value and subgradient draws use separate sub-streams so a
// batch-size change leaves the subgradient noise untouched. With sigma = 0,
// B = 1 and no stochastic hooks installed, the trace is bit-identical to
// ssg_run with matching stepsizes.
// ---------------------------------------------------------------------------

inline SolverTrace sssg_run(const ProblemInstance& problem, const StepsizePolicy& policy,
                            const Vector& x0, long batch_size, const RngStream& rng,
                            const CheckpointPlan& checkpoints = {}) {
    policy.validate();
    require_dimension(problem, x0, "sssg_run");
    if (batch_size < 1) throw ContractError("sssg_run: batch size must be >= 1");
    const long t_total = policy.total_iterations;
    const long s_start = policy.start_index;

    RngStream rng_value = rng.substream(0);
    RngStream rng_subgrad = rng.substream(1);

    SolverTrace trace;
    trace.total_iterations = t_total;
    trace.start_index = s_start;
    trace.seed = rng.seed();
    trace.batch_size = batch_size;
    trace.stochastic = true;
    trace.lean = !checkpoints.record_sequences;
    RngStream reservoir_rng = rng.substream(2);

    Vector x = project(problem, x0);
    trace.x0 = x;
    std::size_t checkpoint_cursor = 0;

    for (long t = 0; t < t_total; ++t) {
        double omega_bar = 0.0;
        if (problem.constraint.has_stochastic_value()) {
            for (long b = 0; b < batch_size; ++b)
                omega_bar += problem.constraint.sample_value(x, rng_value);
            omega_bar /= static_cast<double>(batch_size);
        } else {
            omega_bar = eval_constraint(problem, x).value;
        }
        if (trace.lean)
            trace.min_g_running = std::min(trace.min_g_running, omega_bar);
        else
            trace.g_values.push_back(omega_bar);

        if (checkpoints.wants(t, checkpoint_cursor)) {
            trace.checkpoint_iterations.push_back(t);
            trace.checkpoint_points.push_back(x);
            trace.checkpoint_f.push_back(eval_objective(problem, x).value);
            trace.checkpoint_cpu_s.push_back(detail::process_cpu_seconds());
        }

        const double eps_t = policy.epsilon(t);
        double eta = 0.0;
        bool in_i = false;
        Vector xi;
        if (omega_bar <= eps_t) {
            in_i = true;
            xi = problem.objective.has_stochastic_subgradient()
                     ? problem.objective.sample_subgradient(x, rng_subgrad)
                     : eval_objective(problem, x).subgradient;
            eta = policy.eta_objective(t);
            if (!trace.lean && t >= s_start) trace.index_set_i.push_back(t);
        } else {
            xi = problem.constraint.has_stochastic_subgradient()
                     ? problem.constraint.sample_subgradient(x, rng_subgrad)
                     : eval_constraint(problem, x).subgradient;
            eta = detail::resolve_constraint_eta(policy, t, omega_bar, norm_sq(xi),
                                                 &trace.zero_constraint_subgradient_seen);
            if (!trace.lean && t >= s_start) trace.index_set_j.push_back(t);
        }
        if (!is_finite(xi)) throw OracleError("sssg_run: non-finite stochastic subgradient at " +
                                              std::to_string(t));
        if (trace.lean) {
            if (t >= s_start) {
                if (in_i) detail::reservoir_update(trace.reservoir_i, eta, t, x, reservoir_rng);
                detail::reservoir_update(trace.reservoir_ij, eta, t, x, reservoir_rng);
            }
        } else {
            trace.eta_sequence.push_back(eta);
        }

        Vector next = x;
        axpy(-eta, xi, next);
        next = project(problem, next);
        if (!is_finite(next))
            throw OracleError("sssg_run: non-finite iterate at iteration " + std::to_string(t));
        x = std::move(next);
    }
    trace.x_final = x;
    trace.iterations_run = t_total;
    return trace;
}

// Recover x_tau for a trace that stored only sparse checkpoints by re-running
// deterministically to tau (the seed recorded in the trace replays stochastic
// draws exactly).
inline Vector materialize_iterate(const ProblemInstance& problem, const StepsizePolicy& policy,
                                  const SolverTrace& trace, long tau) {
    if (tau < 0 || tau >= trace.total_iterations)
        throw ContractError("materialize_iterate: tau out of range");
    if (const Vector* p = trace.checkpoint_at(tau)) return *p;
    StepsizePolicy truncated = policy;
    truncated.total_iterations = std::max<long>(tau, 1);
    truncated.start_index = 0;
    if (tau == 0) return trace.x0;
    CheckpointPlan none;
    none.every = 0;
    if (trace.stochastic) {
        SolverTrace r = sssg_run(problem, truncated, trace.x0, trace.batch_size,
                                 RngStream(trace.seed), none);
        return r.x_final;
    }
    SolverTrace r = ssg_run(problem, truncated, trace.x0, RngStream(trace.seed), none);
    return r.x_final;
}

inline OutputSample sample_output_point(const ProblemInstance& problem,
                                        const StepsizePolicy& policy, const SolverTrace& trace,
                                        OutputMode mode, RngStream& rng) {
    OutputSample s = sample_output(trace, mode, rng);
    if (s.x_tau.empty()) s.x_tau = materialize_iterate(problem, policy, trace, s.tau);
    return s;
}

// ---------------------------------------------------------------------------
// Pure feasibility solver: projected subgradient on g_+ with Polyak stepsize.
// Stops once g_+(x) <= target. Within the error-bound basin the squared
// distance to S contracts by at least 1 - nu^2/(8 M^2) per step.
// ---------------------------------------------------------------------------

inline SolverTrace polyak_feasibility_run(const ProblemInstance& problem, const Vector& x0,
                                          long max_iters, double target) {
    require_dimension(problem, x0, "polyak_feasibility_run");
    SolverTrace trace;
    trace.total_iterations = max_iters;
    trace.start_index = 0;

    Vector x = project(problem, x0);
    trace.x0 = x;
    trace.checkpoint_iterations.push_back(0);
    trace.checkpoint_points.push_back(x);

    long t = 0;
    for (; t < max_iters; ++t) {
        const SubgradientResult g = eval_constraint(problem, x);
        const double g_plus = std::max(g.value, 0.0);
        trace.g_values.push_back(g.value);
        if (g_plus <= target) {
            trace.converged = true;
            break;
        }
        // subgradient of g_+ coincides with that of g where g > 0
        const double eta = polyak_step(g_plus, norm_sq(g.subgradient));
        if (eta == 0.0) trace.zero_constraint_subgradient_seen = true;
        trace.eta_sequence.push_back(eta);
        Vector next = x;
        axpy(-eta, g.subgradient, next);
        x = project(problem, next);
        trace.checkpoint_iterations.push_back(t + 1);
        trace.checkpoint_points.push_back(x);
        if (eta == 0.0) break;  // stationary point of g_+; iterate would repeat
    }
    trace.iterations_run = t;
    trace.x_final = x;
    const double final_g = std::max(eval_constraint(problem, x).value, 0.0);
    trace.converged = final_g <= target;
    return trace;
}

}  // namespace ssg
