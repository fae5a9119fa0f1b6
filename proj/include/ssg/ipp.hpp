#pragma once

#include <memory>
#include <string>
#include <utility>

#include "ssg/core.hpp"
#include "ssg/schedules.hpp"
#include "ssg/solver.hpp"

namespace ssg {

// ---------------------------------------------------------------------------
// Quadratically regularized subproblem centered at a point:
//   min f(y) + rho_hat/2 ||y - c||^2  s.t.  g(y) + rho_tilde/2 ||y - c||^2 <= 0
// Valid regimes: rho_tilde = 0 with rho_hat > rho, or rho_hat = rho_tilde > rho.
// ---------------------------------------------------------------------------

struct ProxSubproblem {
    const ProblemInstance* base = nullptr;
    Vector center;
    double rho_hat = 0.0;
    double rho_tilde = 0.0;
};

inline void validate_prox_regime(double base_rho, double rho_hat, double rho_tilde) {
    if (rho_hat <= base_rho)
        throw RegimeError("prox subproblem: need rho_hat > rho of the base problem");
    if (rho_tilde != 0.0 && (rho_tilde <= base_rho || rho_tilde > rho_hat))
        throw RegimeError("prox subproblem: rho_tilde must be 0 or in (rho, rho_hat]");
}

inline ProblemInstance build_prox_subproblem(const ProblemInstance& problem, const Vector& center,
                                             double rho_hat, double rho_tilde) {
    validate_prox_regime(problem.constants.rho, rho_hat, rho_tilde);
    require_dimension(problem, center, "build_prox_subproblem");

    auto regularize = [](const Oracle& base, Vector c, double w) {
        Oracle out;
        out.weak_convexity = 0.0;  // convex (in fact strongly convex) by construction
        out.eval = [base_eval = base.eval, c = std::move(c), w](const Vector& y) {
            SubgradientResult r = base_eval(y);
            double q = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double d = y[i] - c[i];
                q += d * d;
                r.subgradient[i] += w * d;
            }
            r.value += 0.5 * w * q;
            return r;
        };
        return out;
    };

    ProblemInstance sub;
    sub.dimension = problem.dimension;
    sub.projection = problem.projection;
    sub.objective = regularize(problem.objective, center, rho_hat);
    sub.constraint = rho_tilde == 0.0 ? problem.constraint
                                      : regularize(problem.constraint, center, rho_tilde);
    if (rho_tilde == 0.0) sub.constraint.weak_convexity = problem.constraint.weak_convexity;

    sub.constants = problem.constants;
    sub.constants.rho = rho_tilde == 0.0 ? problem.constraint.weak_convexity : 0.0;
    sub.constants.mu = rho_hat - problem.constants.rho;  // strong convexity of the new objective
    if (problem.constants.D)
        sub.constants.M = problem.constants.M + std::max(rho_hat, rho_tilde) * *problem.constants.D;
    if (rho_tilde != 0.0) {
        // the base Slater witness does not transfer once the constraint is regularized
        sub.constants.g_feas_value.reset();
        sub.constants.x_feas.reset();
    }
    return sub;
}

// ---------------------------------------------------------------------------
// Inner solvers for the proximal-point outer loop
// ---------------------------------------------------------------------------

class InnerSolver {
public:
    virtual ~InnerSolver() = default;
    virtual Vector solve(const ProxSubproblem& sub, long iterations, RngStream& rng) const = 0;
};

// SSG on the regularized subproblem; next center is the policy's Output I/II sample.
class SsgInnerSolver : public InnerSolver {
public:
    explicit SsgInnerSolver(StepsizePolicy policy) : policy_(std::move(policy)) {}

    Vector solve(const ProxSubproblem& sub, long iterations, RngStream& rng) const override {
        ProblemInstance p = build_prox_subproblem(*sub.base, sub.center, sub.rho_hat, sub.rho_tilde);
        StepsizePolicy policy = policy_;
        policy.total_iterations = iterations;
        policy.start_index = std::min(policy.start_index, iterations - 1);
        SolverTrace trace = ssg_run(p, policy, sub.center, rng);
        return sample_output_point(p, policy, trace, policy.output_mode, rng).x_tau;
    }

    const StepsizePolicy& policy() const { return policy_; }

private:
    StepsizePolicy policy_;
};

// Parameter schedule of the ConEx inner solver: theta_t = t/(t+1),
// eta_t = c1 (t+1), tau_t = c2/(t+1). The update rules live in the cited prior
// work; this slot only carries the configuration.
struct ConexSchedule {
    double c1 = 0.0;
    double c2 = 0.0;
    double theta(long t) const { return static_cast<double>(t) / (t + 1.0); }
    double eta(long t) const { return c1 * (t + 1.0); }
    double tau(long t) const { return c2 / (t + 1.0); }
};

class ConexInnerSolver : public InnerSolver {
public:
    explicit ConexInnerSolver(ConexSchedule schedule) : schedule_(schedule) {}

    Vector solve(const ProxSubproblem&, long, RngStream&) const override {
        throw NotImplementedError("ConEx inner solver is an adapter slot; only its parameter "
                                  "schedule is carried here");
    }

    const ConexSchedule& schedule() const { return schedule_; }

private:
    ConexSchedule schedule_;
};

// ---------------------------------------------------------------------------
// Inexact proximal point outer loop (IPP-SSG by default). The returned trace
// concatenates all inner iterations so iteration counts line up with the
// single-loop method's.
// ---------------------------------------------------------------------------

struct IppResult {
    SolverTrace trace;            // concatenated inner iterations
    std::vector<Vector> centers;  // outer centers, length outer_iters + 1
};

inline IppResult ipp_run(const ProblemInstance& problem, long outer_iters,
                         const StepsizePolicy& inner_policy, long inner_iters, double rho_hat,
                         double rho_tilde, const Vector& x0, RngStream& rng) {
    if (inner_iters < 1) throw ContractError("ipp_run: inner_iters must be >= 1");
    if (outer_iters < 1) throw ContractError("ipp_run: outer_iters must be >= 1");
    validate_prox_regime(problem.constants.rho, rho_hat, rho_tilde);

    IppResult result;
    SolverTrace& all = result.trace;
    all.total_iterations = outer_iters * inner_iters;
    all.start_index = 0;
    all.seed = rng.seed();

    Vector center = project(problem, x0);
    all.x0 = center;
    result.centers.push_back(center);

    for (long k = 0; k < outer_iters; ++k) {
        ProblemInstance sub = build_prox_subproblem(problem, center, rho_hat, rho_tilde);
        StepsizePolicy policy = inner_policy;
        policy.total_iterations = inner_iters;
        policy.start_index = std::min(policy.start_index, inner_iters - 1);

        RngStream inner_rng = rng.substream(static_cast<std::uint64_t>(k));
        SolverTrace trace = ssg_run(sub, policy, center, inner_rng);

        const long offset = k * inner_iters;
        for (long t : trace.index_set_i) all.index_set_i.push_back(offset + t);
        for (long t : trace.index_set_j) all.index_set_j.push_back(offset + t);
        all.eta_sequence.insert(all.eta_sequence.end(), trace.eta_sequence.begin(),
                                trace.eta_sequence.end());
        // log infeasibility of the original problem along the inner path
        for (std::size_t i = 0; i < trace.checkpoint_points.size(); ++i) {
            all.checkpoint_iterations.push_back(offset + trace.checkpoint_iterations[i]);
            all.checkpoint_points.push_back(trace.checkpoint_points[i]);
            all.checkpoint_f.push_back(eval_objective(problem, trace.checkpoint_points[i]).value);
            all.g_values.push_back(eval_constraint(problem, trace.checkpoint_points[i]).value);
        }

        try {
            center = sample_output_point(sub, policy, trace, policy.output_mode, inner_rng).x_tau;
        } catch (const OracleError& e) {
            throw OracleError("ipp_run: outer iteration " + std::to_string(k) + ": " + e.what());
        }
        result.centers.push_back(center);
    }
    all.x_final = center;
    all.iterations_run = all.total_iterations;
    return result;
}

}  // namespace ssg
