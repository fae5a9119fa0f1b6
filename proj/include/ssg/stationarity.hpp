#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "ssg/core.hpp"
#include "ssg/ipp.hpp"
#include "ssg/schedules.hpp"
#include "ssg/solver.hpp"

namespace ssg {

// ---------------------------------------------------------------------------
// Near-stationarity: estimate xhat(x), the solution of the regularized
// subproblem centered at x, and report ||xhat(x) - x|| together with a
// multiplier estimate and a KKT residual. The subproblem is solved with the
// switching subgradient method and the LAST iterate is the estimate; a second
// run with doubled iterations measures refinement stability.
// ---------------------------------------------------------------------------

struct NearStationarityReport {
    double distance = 0.0;  // ||xhat(x) - x|| from the longer run
    Vector x_hat;
    double multiplier_estimate = 0.0;
    double kkt_residual = 0.0;
    double refinement_delta = 0.0;  // |d2 - d1| / max(d2, eps_machine)
    long inner_iters_used = 0;
};

namespace detail {

// Tangential component of a step direction v at p: the displacement the
// projection actually allows, (p - proj(p - delta v)) / delta.
inline Vector tangential_step(const ProblemInstance& problem, const Vector& p, const Vector& v,
                              double delta) {
    Vector probe = p;
    axpy(-delta, v, probe);
    Vector projected = project(problem, probe);
    Vector t(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) t[i] = (p[i] - projected[i]) / delta;
    return t;
}

// Last iterate of SSG on the regularized subproblem. The subproblem objective
// is (rho_hat - rho)-strongly convex, so the classic 1/(mu (t+2)) stepsize
// applies on the objective branch; the constraint branch uses a Polyak step on
// the subproblem's g_+. The feasibility band is a tiny constant: a Polyak step
// on a curved constraint approaches the boundary from outside without ever
// crossing it, so an exact-zero band would starve the objective branch.
inline Vector solve_subproblem_last_iterate(const ProblemInstance& sub, const Vector& center,
                                            double mu_hat, long iters) {
    Vector x = project(sub, center);
    const double g0 = eval_constraint(sub, x).value;
    const double eps_band = 1e-9 * std::max(1.0, std::abs(g0));
    bool ever_feasible = false;
    for (long t = 0; t < iters; ++t) {
        const SubgradientResult g = eval_constraint(sub, x);
        double eta = 0.0;
        const Vector* dir = nullptr;
        SubgradientResult f;
        if (g.value <= eps_band) {
            ever_feasible = true;
            f = eval_objective(sub, x);
            dir = &f.subgradient;
            eta = 1.0 / (mu_hat * (t + 2.0));
        } else {
            dir = &g.subgradient;
            eta = polyak_step(g.value, norm_sq(g.subgradient));
            if (eta == 0.0) {
                // stationary point of the subproblem's g_+ while infeasible
                throw OracleError("near_stationarity: subproblem looks infeasible (g stalled at " +
                                  std::to_string(g.value) + ")");
            }
        }
        axpy(-eta, *dir, x);
        x = project(sub, x);
        if (!is_finite(x))
            throw OracleError("near_stationarity: non-finite inner iterate at " + std::to_string(t));
    }
    if (!ever_feasible)
        throw OracleError("near_stationarity: subproblem constraint never satisfied; the center may "
                          "be too infeasible for the chosen regime");
    return x;
}

}  // namespace detail

// dist-to-normal-cone residual of v = a + lambda_hat b at x_hat, measured as the
// norm of the projected step the feasible set still allows:
//   ||(x_hat - proj_X(x_hat - delta v)) / delta||.
// Zero iff v lies in -N_X(x_hat); at interior points it equals ||v||.
inline double kkt_residual(const ProblemInstance& problem, const Vector& x_hat,
                           const Vector& x_center, double rho_hat, double rho_tilde,
                           double lambda_hat, double delta = 1e-6) {
    if (lambda_hat < 0.0) throw ContractError("kkt_residual: multiplier must be nonnegative");
    const SubgradientResult f = eval_objective(problem, x_hat);
    const SubgradientResult g = eval_constraint(problem, x_hat);
    Vector v(problem.dimension);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = x_hat[i] - x_center[i];
        v[i] = f.subgradient[i] + rho_hat * d + lambda_hat * (g.subgradient[i] + rho_tilde * d);
    }
    return norm(detail::tangential_step(problem, x_hat, v, delta));
}

struct EvaluatorOptions {
    double rho_hat = 0.0;    // 0 -> default 2 max(rho, 1)
    double rho_tilde = -1.0; // <0 -> 0 for convex constraints, rho_hat otherwise
    long inner_iters = 2500;
    double probe_delta = 1e-6;
};

inline double default_evaluator_rho_hat(const ProblemInstance& problem) {
    return 2.0 * std::max(problem.constants.rho, 1.0);
}

inline double default_evaluator_rho_tilde(const ProblemInstance& problem, double rho_hat) {
    return problem.constraint.weak_convexity > 0.0 ? rho_hat : 0.0;
}

inline NearStationarityReport near_stationarity(const ProblemInstance& problem, const Vector& x,
                                                double rho_hat, double rho_tilde, long inner_iters,
                                                RngStream& rng, double probe_delta = 1e-6) {
    (void)rng;  // the evaluator is deterministic; kept for interface stability
    require_dimension(problem, x, "near_stationarity");
    validate_prox_regime(problem.constants.rho, rho_hat, rho_tilde);

    ProblemInstance sub = build_prox_subproblem(problem, x, rho_hat, rho_tilde);
    const double mu_hat = rho_hat - problem.constants.rho;

    const Vector y1 = detail::solve_subproblem_last_iterate(sub, x, mu_hat, inner_iters);
    const Vector y2 = detail::solve_subproblem_last_iterate(sub, x, mu_hat, 2 * inner_iters);
    const double d1 = dist(y1, x);
    const double d2 = dist(y2, x);

    NearStationarityReport report;
    report.x_hat = y2;
    report.distance = d2;
    report.refinement_delta =
        std::abs(d2 - d1) / std::max(d2, std::numeric_limits<double>::epsilon());
    report.inner_iters_used = 2 * inner_iters;

    // lambda_hat >= 0 minimizing ||t(a) + lambda t(b)|| over the tangential parts
    const SubgradientResult f = eval_objective(problem, y2);
    const SubgradientResult g = eval_constraint(problem, y2);
    Vector a(problem.dimension), b(problem.dimension);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = y2[i] - x[i];
        a[i] = f.subgradient[i] + rho_hat * d;
        b[i] = g.subgradient[i] + rho_tilde * d;
    }
    const Vector ta = detail::tangential_step(problem, y2, a, probe_delta);
    const Vector tb = detail::tangential_step(problem, y2, b, probe_delta);
    const double tb_sq = norm_sq(tb);
    report.multiplier_estimate = tb_sq > 0.0 ? std::max(0.0, -dot(ta, tb) / tb_sq) : 0.0;
    report.kkt_residual = kkt_residual(problem, y2, x, rho_hat, rho_tilde,
                                       report.multiplier_estimate, probe_delta);
    return report;
}

inline NearStationarityReport near_stationarity(const ProblemInstance& problem, const Vector& x,
                                                RngStream& rng,
                                                const EvaluatorOptions& opts = {}) {
    const double rho_hat = opts.rho_hat > 0.0 ? opts.rho_hat : default_evaluator_rho_hat(problem);
    const double rho_tilde =
        opts.rho_tilde >= 0.0 ? opts.rho_tilde : default_evaluator_rho_tilde(problem, rho_hat);
    return near_stationarity(problem, x, rho_hat, rho_tilde, opts.inner_iters, rng,
                             opts.probe_delta);
}

}  // namespace ssg
