#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssg/core.hpp"

namespace ssg {

// ---------------------------------------------------------------------------
// Stepsize / tolerance policies
// ---------------------------------------------------------------------------

enum class PolicyKind {
    static_convex,
    diminishing_convex,
    strongly_convex_static,
    strongly_convex_diminishing,
    weakly_convex_switching,
    bounded_s_convex_switching,
    stochastic_static,
    stochastic_diminishing,
    manual_grid,
};

enum class OutputMode { output_i, output_ii };

// How eta is resolved on the constraint branch (t in J).
enum class ConstraintStep {
    same_as_objective,  // eta_t as on I
    polyak,             // g(x_t) / ||zeta_g||^2
    scaled_polyak,      // polyak_scale * g(x_t) / ||zeta_g||^2
};

struct StepsizePolicy {
    PolicyKind kind = PolicyKind::manual_grid;
    OutputMode output_mode = OutputMode::output_i;
    long total_iterations = 0;  // T
    long start_index = 0;       // S
    bool diminishing = false;   // per-t value = base / sqrt(t+1)
    double eps_base = 0.0;
    double eta_base = 0.0;
    ConstraintStep constraint_step = ConstraintStep::same_as_objective;
    double polyak_scale = 1.0;
    long batch_size = 1;                       // stochastic B
    std::map<std::string, double> parameters;  // constants the policy was built from
    std::vector<std::string> warnings;

    double epsilon(long t) const { return diminishing ? eps_base / std::sqrt(t + 1.0) : eps_base; }

    double eta_objective(long t) const { return diminishing ? eta_base / std::sqrt(t + 1.0) : eta_base; }

    void validate() const {
        if (total_iterations < 1) throw RegimeError("policy: T must be >= 1");
        if (start_index < 0 || start_index >= total_iterations)
            throw RegimeError("policy: need 0 <= S < T");
        if (eta_base <= 0.0) throw RegimeError("policy: eta must be positive");
        if (eps_base < 0.0) throw RegimeError("policy: epsilon must be nonnegative");
    }
};

inline const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::static_convex: return "static_convex";
        case PolicyKind::diminishing_convex: return "diminishing_convex";
        case PolicyKind::strongly_convex_static: return "strongly_convex_static";
        case PolicyKind::strongly_convex_diminishing: return "strongly_convex_diminishing";
        case PolicyKind::weakly_convex_switching: return "weakly_convex_switching";
        case PolicyKind::bounded_s_convex_switching: return "bounded_s_convex_switching";
        case PolicyKind::stochastic_static: return "stochastic_static";
        case PolicyKind::stochastic_diminishing: return "stochastic_diminishing";
        case PolicyKind::manual_grid: return "manual_grid";
    }
    return "unknown";
}

namespace detail {

inline long ceil_to_iterations(double value, const char* what) {
    if (!std::isfinite(value) || value < 0.0)
        throw RegimeError(std::string(what) + ": invalid iteration count");
    if (value > 4.0e18) throw RegimeError(std::string(what) + ": iteration count overflows");
    long n = static_cast<long>(std::ceil(value));
    return std::max<long>(n, 1);
}

inline long round_up_even(long n) { return (n % 2 == 0) ? n : n + 1; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Multiplier bounds and sharpness constants
// ---------------------------------------------------------------------------

// Lambda = (M D + rho_hat D^2) / (-g_feas), valid under Slater with bounded X.
inline double lambda_bound_convex(double m, double diameter, double rho_hat, double g_feas) {
    if (g_feas >= 0.0) throw RegimeError("lambda_bound_convex: Slater point must have g < 0");
    if (diameter < 0.0 || m < 0.0 || rho_hat <= 0.0)
        throw RegimeError("lambda_bound_convex: need M >= 0, D >= 0, rho_hat > 0");
    return (m * diameter + rho_hat * diameter * diameter) / (-g_feas);
}

struct WeaklyConvexBound {
    double lambda_prime = 0.0;     // 2 M / sqrt(2 theta (rho_hat - rho))
    double prox_radius = 0.0;      // M / rho_hat, bound on ||xhat(x) - x||
};

inline WeaklyConvexBound lambda_bound_weakly_convex(double m, double theta, double rho_hat,
                                                    double rho) {
    if (theta <= 0.0) throw RegimeError("lambda_bound_weakly_convex: theta must be positive");
    if (rho_hat <= rho) throw RegimeError("lambda_bound_weakly_convex: need rho_hat > rho");
    WeaklyConvexBound b;
    b.lambda_prime = 2.0 * m / std::sqrt(2.0 * theta * (rho_hat - rho));
    b.prox_radius = m / rho_hat;
    return b;
}

struct NuResult {
    double value = 0.0;
    bool exceeds_two_m = false;  // inconsistent with a real instance when true
};

// nu = sqrt(2 theta (rho_hat - rho)); must satisfy nu <= 2M on any real instance.
inline double nu_sharpness(double theta, double rho_hat, double rho) {
    if (theta <= 0.0) throw RegimeError("nu_sharpness: theta must be positive");
    if (rho_hat <= rho) throw RegimeError("nu_sharpness: need rho_hat > rho");
    return std::sqrt(2.0 * theta * (rho_hat - rho));
}

inline NuResult nu_sharpness(double theta, double rho_hat, double rho, double m) {
    NuResult r;
    r.value = nu_sharpness(theta, rho_hat, rho);
    r.exceeds_two_m = r.value > 2.0 * m;
    return r;
}

// Multiplier bound with linear equality constraints folded into
// g = max{h, ||Ax-b||_inf}.
inline double lambda_bound_equality(double m, double diameter, double rho_hat, double h_feas,
                                    long num_equalities, double pinv_norm,
                                    double dist_boundary) {
    if (h_feas >= 0.0) throw RegimeError("lambda_bound_equality: need h(x_feas) < 0");
    if (dist_boundary <= 0.0) throw RegimeError("lambda_bound_equality: need dist to boundary > 0");
    if (num_equalities < 1) throw RegimeError("lambda_bound_equality: need l >= 1");
    const double md = m * diameter + rho_hat * diameter * diameter;
    return md / (-h_feas) +
           std::sqrt(static_cast<double>(num_equalities)) * pinv_norm *
               ((m * m * diameter + rho_hat * m * diameter * diameter) / (-h_feas) +
                md / dist_boundary + m + rho_hat * diameter);
}

// Bound on the multiplier when S (not X) is bounded: (M + rho_hat (D + nu')) D / (-g_feas).
inline double lambda_bound_bounded_sublevel(double m, double diameter, double rho_hat,
                                            double nu_prime, double g_feas) {
    if (g_feas >= 0.0) throw RegimeError("lambda_bound_bounded_sublevel: need g(x_feas) < 0");
    return (m + rho_hat * (diameter + nu_prime)) * diameter / (-g_feas);
}

// nu' = -g(x_feas) / D, the global sharpness constant of g_+ when S is bounded.
inline double nu_prime_sharpness(double g_feas, double diameter) {
    if (g_feas >= 0.0) throw RegimeError("nu_prime_sharpness: need g(x_feas) < 0");
    if (diameter <= 0.0) throw RegimeError("nu_prime_sharpness: need D > 0");
    return -g_feas / diameter;
}

// ---------------------------------------------------------------------------
// Schedule constructors
// ---------------------------------------------------------------------------

// Convex g, static parameters:
//   S = 0, eps_t = eps^2 (rho_hat - rho)/(1+Lambda),
//   eta_t = 2 eps^2 (rho_hat - rho) / (5 (1+Lambda) M^2),
//   T = ceil(25 M^2 D^2 (1+Lambda)^2 / (4 eps^4 (rho_hat - rho)^2)), Output I.
inline StepsizePolicy schedule_convex_static(double eps, double m, double diameter, double rho,
                                             double rho_hat, double lambda) {
    if (rho_hat <= rho) throw RegimeError("schedule_convex_static: need rho_hat > rho");
    if (eps <= 0.0) throw RegimeError("schedule_convex_static: need eps > 0");
    const double gap = rho_hat - rho;
    StepsizePolicy p;
    p.kind = PolicyKind::static_convex;
    p.output_mode = OutputMode::output_i;
    p.eps_base = eps * eps * gap / (1.0 + lambda);
    p.eta_base = 2.0 * eps * eps * gap / (5.0 * (1.0 + lambda) * m * m);
    p.total_iterations = detail::ceil_to_iterations(
        25.0 * m * m * diameter * diameter * (1.0 + lambda) * (1.0 + lambda) /
            (4.0 * std::pow(eps, 4) * gap * gap),
        "schedule_convex_static");
    p.start_index = 0;
    p.parameters = {{"eps", eps}, {"M", m}, {"D", diameter},
                    {"rho", rho}, {"rho_hat", rho_hat}, {"Lambda", lambda}};
    p.validate();
    return p;
}

// Convex g, diminishing parameters:
//   T = ceil(50 M^2 D^2 (1+Lambda)^2 / (eps^4 (rho_hat - rho)^2)) rounded up to even,
//   S = T/2, eps_t = 5 M D / sqrt(t+1), eta_t = D / (M sqrt(t+1)), Output I.
inline StepsizePolicy schedule_convex_diminishing(double eps, double m, double diameter,
                                                  double rho, double rho_hat, double lambda) {
    if (rho_hat <= rho) throw RegimeError("schedule_convex_diminishing: need rho_hat > rho");
    if (eps <= 0.0) throw RegimeError("schedule_convex_diminishing: need eps > 0");
    const double gap = rho_hat - rho;
    StepsizePolicy p;
    p.kind = PolicyKind::diminishing_convex;
    p.output_mode = OutputMode::output_i;
    p.diminishing = true;
    p.eps_base = 5.0 * m * diameter;
    p.eta_base = diameter / m;
    p.total_iterations = detail::round_up_even(detail::ceil_to_iterations(
        50.0 * m * m * diameter * diameter * (1.0 + lambda) * (1.0 + lambda) /
            (std::pow(eps, 4) * gap * gap),
        "schedule_convex_diminishing"));
    p.start_index = p.total_iterations / 2;
    p.parameters = {{"eps", eps}, {"M", m}, {"D", diameter},
                    {"rho", rho}, {"rho_hat", rho_hat}, {"Lambda", lambda}};
    p.validate();
    return p;
}

enum class ScheduleVariant { static_step, diminishing_step };

// Strongly convex g: eps_t = 0 always, Output II.
//   static:      eta_t = eps^2 min{rho_hat - rho, mu/2} / M^2,
//                T = ceil(M^2 D^2 / (eps^4 min{(rho_hat-rho)^2, mu^2/4})), S = 0.
//   diminishing: eta_t = D / (M sqrt(t+1)),
//                T = ceil(4 M^2 D^2 / (eps^4 min{...})) rounded up to even, S = T/2.
inline StepsizePolicy schedule_strongly_convex(double eps, double m, double diameter, double rho,
                                               double rho_hat, double mu,
                                               ScheduleVariant variant) {
    if (mu <= 0.0) throw RegimeError("schedule_strongly_convex: need mu > 0");
    if (rho_hat <= rho) throw RegimeError("schedule_strongly_convex: need rho_hat > rho");
    if (eps <= 0.0) throw RegimeError("schedule_strongly_convex: need eps > 0");
    const double gap = std::min(rho_hat - rho, mu / 2.0);
    StepsizePolicy p;
    p.output_mode = OutputMode::output_ii;
    p.eps_base = 0.0;
    if (variant == ScheduleVariant::static_step) {
        p.kind = PolicyKind::strongly_convex_static;
        p.eta_base = eps * eps * gap / (m * m);
        p.total_iterations = detail::ceil_to_iterations(
            m * m * diameter * diameter / (std::pow(eps, 4) * gap * gap),
            "schedule_strongly_convex");
        p.start_index = 0;
    } else {
        p.kind = PolicyKind::strongly_convex_diminishing;
        p.diminishing = true;
        p.eta_base = diameter / m;
        p.total_iterations = detail::round_up_even(detail::ceil_to_iterations(
            4.0 * m * m * diameter * diameter / (std::pow(eps, 4) * gap * gap),
            "schedule_strongly_convex"));
        p.start_index = p.total_iterations / 2;
    }
    p.parameters = {{"eps", eps}, {"M", m}, {"D", diameter},
                    {"rho", rho}, {"rho_hat", rho_hat}, {"mu", mu}};
    p.validate();
    return p;
}

// Optional inputs for deriving T of the weakly convex switching schedule.
struct WeaklyConvexTheoryInputs {
    double f_initial = 0.0;  // f(x0)
    double f_lower = 0.0;    // inf f over X
    double rho_hat = 0.0;
    double lambda_prime = 0.0;
};

// Weakly convex g (uniform Slater): constant eps_t and eta on I, Polyak on J, Output II.
//   eps_t    = (nu/4) min{eps^2/M, nu/(4 rho)}
//   eta_t(I) = (nu/(4 M^2)) min{eps^2/M, nu/(4 rho)}
//   eta_t(J) = g(x_t)/||zeta_g||^2   (resolved at runtime)
//   T = ceil(8 M^2 (f(x0) - f_lower + 3M^2/(2 rho_hat)) /
//            (rho_hat (1+Lambda') nu eps^2 min{eps^2/M, nu/(4 rho)}))
inline StepsizePolicy schedule_weakly_convex(double eps, double m, double rho, double nu,
                                             long total_iterations,
                                             std::optional<double> eps_bar = std::nullopt) {
    if (nu <= 0.0) throw RegimeError("schedule_weakly_convex: need nu > 0");
    if (eps <= 0.0) throw RegimeError("schedule_weakly_convex: need eps > 0");
    const double cap = rho > 0.0 ? nu / (4.0 * rho) : std::numeric_limits<double>::infinity();
    const double level = std::min(eps * eps / m, cap);
    StepsizePolicy p;
    p.kind = PolicyKind::weakly_convex_switching;
    p.output_mode = OutputMode::output_ii;
    p.eps_base = nu / 4.0 * level;
    p.eta_base = nu / (4.0 * m * m) * level;
    p.constraint_step = ConstraintStep::polyak;
    p.total_iterations = total_iterations;
    p.start_index = 0;
    p.parameters = {{"eps", eps}, {"M", m}, {"rho", rho}, {"nu", nu}};
    if (eps_bar && eps > *eps_bar)
        p.warnings.push_back("eps exceeds the declared eps_bar; the uniform Slater guarantee may not apply");
    p.validate();
    return p;
}

inline StepsizePolicy schedule_weakly_convex(double eps, double m, double rho, double nu,
                                             const WeaklyConvexTheoryInputs& theory,
                                             std::optional<double> eps_bar = std::nullopt) {
    if (theory.rho_hat <= rho) throw RegimeError("schedule_weakly_convex: need rho_hat > rho");
    const double cap = rho > 0.0 ? nu / (4.0 * rho) : std::numeric_limits<double>::infinity();
    const double level = std::min(eps * eps / m, cap);
    const double t_val =
        8.0 * m * m * (theory.f_initial - theory.f_lower + 3.0 * m * m / (2.0 * theory.rho_hat)) /
        (theory.rho_hat * (1.0 + theory.lambda_prime) * nu * eps * eps * level);
    StepsizePolicy p = schedule_weakly_convex(
        eps, m, rho, nu, detail::ceil_to_iterations(t_val, "schedule_weakly_convex"), eps_bar);
    p.parameters["rho_hat"] = theory.rho_hat;
    p.parameters["Lambda_prime"] = theory.lambda_prime;
    return p;
}

// Convex g with bounded S (instead of bounded X): scaled Polyak on J, Output I.
//   eps_t    = (nu'/2) min{eps^2/M, nu'}
//   eta_t(I) = (nu'/(2 M^2)) min{eps^2/M, nu'}
//   eta_t(J) = nu' g(x_t) / (2 M ||zeta_g||^2)
//   T = ceil(8 M^3 D^2 / (nu'^3 min{eps^4/M^2, nu'^2})) + 1
inline StepsizePolicy schedule_bounded_s_convex(double eps, double m, double nu_prime,
                                                double diameter) {
    if (nu_prime <= 0.0) throw RegimeError("schedule_bounded_s_convex: need nu_prime > 0");
    if (eps <= 0.0) throw RegimeError("schedule_bounded_s_convex: need eps > 0");
    const double level = std::min(eps * eps / m, nu_prime);
    StepsizePolicy p;
    p.kind = PolicyKind::bounded_s_convex_switching;
    p.output_mode = OutputMode::output_i;
    p.eps_base = nu_prime / 2.0 * level;
    p.eta_base = nu_prime / (2.0 * m * m) * level;
    p.constraint_step = ConstraintStep::scaled_polyak;
    p.polyak_scale = nu_prime / (2.0 * m);
    p.total_iterations =
        detail::ceil_to_iterations(8.0 * std::pow(m, 3) * diameter * diameter /
                                       (std::pow(nu_prime, 3) * level * level),
                                   "schedule_bounded_s_convex") +
        1;
    p.start_index = 0;
    p.parameters = {{"eps", eps}, {"M", m}, {"nu_prime", nu_prime}, {"D", diameter}};
    p.validate();
    return p;
}

enum class StochasticVariant {
    semi,  // deterministic constraint values, stochastic subgradients (B = 1)
    full,  // both value and subgradient oracles stochastic (mini-batch B)
};

enum class StochasticCase { case_i, case_ii };

// E lower bound shared by the stochastic Case II theorems; the additive head is
// 4 for the semi-stochastic variant and 8 for the fully stochastic one.
inline double stochastic_e_constant(double delta, StochasticVariant variant) {
    if (delta <= 0.0 || delta >= 1.0) throw RegimeError("stochastic_e_constant: need delta in (0,1)");
    const double l8 = std::log(8.0 / delta);
    const double l4 = std::log(4.0 / delta);
    const double head = variant == StochasticVariant::semi ? 4.0 : 8.0;
    const double pi = 3.14159265358979323846;
    return head + 2.0 * pi / std::sqrt(6.0) * std::max(std::sqrt(12.0 * l8), 4.0 / 3.0 * l8) +
           8.0 * std::sqrt(3.0 * l4);
}

// Stochastic schedules. Case I reuses the static convex parameters with a
// delta-dependent T; Case II uses eps_t = E M D / sqrt(t+1) with the E bound above.
// The batch size B is 1 for the semi variant; for the full variant it is
//   Case I:  B = 300 sigma^2 ln(4T/delta) (1+Lambda)^4 / (eps^4 (rho_hat-rho)^2)
//   Case II: B = 3 T sigma^2 ln(2T/delta) (1+Lambda)^2 / (2 M^2 D^2)
// rounded up and never below 1.
inline StepsizePolicy schedule_stochastic(double eps, double m, double diameter, double rho,
                                          double rho_hat, double lambda, double delta,
                                          double sigma, StochasticVariant variant,
                                          StochasticCase which_case) {
    if (delta <= 0.0 || delta >= 1.0) throw RegimeError("schedule_stochastic: need delta in (0,1)");
    if (sigma < 0.0) throw RegimeError("schedule_stochastic: need sigma >= 0");
    if (rho_hat <= rho) throw RegimeError("schedule_stochastic: need rho_hat > rho");
    if (eps <= 0.0) throw RegimeError("schedule_stochastic: need eps > 0");
    const double gap = rho_hat - rho;
    const double l8 = std::log(8.0 / delta);
    const double l4 = std::log(4.0 / delta);
    const double x2 = m * m * diameter * diameter * (1.0 + lambda) * (1.0 + lambda) /
                      (std::pow(eps, 4) * gap * gap);

    StepsizePolicy p;
    if (which_case == StochasticCase::case_i) {
        p = schedule_convex_static(eps, m, diameter, rho, rho_hat, lambda);
        p.kind = PolicyKind::stochastic_static;
        const double t_val = std::max({25.0 / 4.0 * x2,
                                       std::max(12.0 * l8, 16.0 / 9.0 * l8 * l8),
                                       300.0 * l4 * x2});
        p.total_iterations = detail::ceil_to_iterations(t_val, "schedule_stochastic");
    } else {
        const double e_const = stochastic_e_constant(delta, variant);
        p.kind = PolicyKind::stochastic_diminishing;
        p.output_mode = OutputMode::output_i;
        p.diminishing = true;
        p.eps_base = e_const * m * diameter;
        p.eta_base = diameter / m;
        p.total_iterations = detail::round_up_even(detail::ceil_to_iterations(
            2.0 * e_const * e_const * x2, "schedule_stochastic"));
        p.start_index = p.total_iterations / 2;
        p.parameters["E"] = e_const;
    }

    long batch = 1;
    if (variant == StochasticVariant::full) {
        const double t = static_cast<double>(p.total_iterations);
        double b_val = 0.0;
        if (which_case == StochasticCase::case_i)
            b_val = 300.0 * sigma * sigma * std::log(4.0 * t / delta) * std::pow(1.0 + lambda, 4) /
                    (std::pow(eps, 4) * gap * gap);
        else
            b_val = 3.0 * t * sigma * sigma * std::log(2.0 * t / delta) *
                    (1.0 + lambda) * (1.0 + lambda) / (2.0 * m * m * diameter * diameter);
        batch = std::max<long>(1, static_cast<long>(std::ceil(b_val)));
    }
    p.batch_size = batch;

    p.parameters["eps"] = eps;
    p.parameters["M"] = m;
    p.parameters["D"] = diameter;
    p.parameters["rho"] = rho;
    p.parameters["rho_hat"] = rho_hat;
    p.parameters["Lambda"] = lambda;
    p.parameters["delta"] = delta;
    p.parameters["sigma"] = sigma;
    p.parameters["B"] = static_cast<double>(batch);
    p.validate();
    return p;
}

// Hand-tuned grids: the experiment protocol tunes (eps_t, eta_t) instead of
// deriving them from constants.
inline StepsizePolicy schedule_manual(double eps_base, double eta_base, long total_iterations,
                                      long start_index, bool diminishing, OutputMode mode,
                                      ConstraintStep constraint_step = ConstraintStep::same_as_objective,
                                      double polyak_scale = 1.0) {
    StepsizePolicy p;
    p.kind = PolicyKind::manual_grid;
    p.output_mode = mode;
    p.diminishing = diminishing;
    p.eps_base = eps_base;
    p.eta_base = eta_base;
    p.total_iterations = total_iterations;
    p.start_index = start_index;
    p.constraint_step = constraint_step;
    p.polyak_scale = polyak_scale;
    p.parameters = {{"eps_base", eps_base}, {"eta_base", eta_base}};
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// ConstantReport: everything derivable from an instance's declared constants
// ---------------------------------------------------------------------------

struct ConstantReport {
    std::optional<double> lambda;               // bounded X, convex g
    std::optional<double> lambda_prime;         // uniform Slater, weakly convex g
    std::optional<double> lambda_double_prime;  // bounded S, convex g
    std::optional<double> lambda_eq;            // equality-constraint variant
    std::optional<double> nu;
    std::optional<double> nu_prime;
    std::optional<double> c;        // 2 sqrt((1+Lambda')/(rho_hat-rho))
    std::optional<double> c_prime;  // sqrt(nu'(1+Lambda'')/(2M(rho_hat-rho)))
};

inline ConstantReport compute_constant_report(const ProblemConstants& k, double rho_hat) {
    ConstantReport r;
    const double m = k.M;
    const double rho = k.rho;
    if (k.D && k.g_feas_value && *k.g_feas_value < 0.0)
        r.lambda = lambda_bound_convex(m, *k.D, rho_hat, *k.g_feas_value);
    if (k.theta && rho_hat > rho) {
        r.lambda_prime = lambda_bound_weakly_convex(m, *k.theta, rho_hat, rho).lambda_prime;
        r.nu = nu_sharpness(*k.theta, rho_hat, rho);
        r.c = 2.0 * std::sqrt((1.0 + *r.lambda_prime) / (rho_hat - rho));
    }
    if (k.D && k.g_feas_value && *k.g_feas_value < 0.0 && *k.D > 0.0) {
        r.nu_prime = nu_prime_sharpness(*k.g_feas_value, *k.D);
        r.lambda_double_prime =
            lambda_bound_bounded_sublevel(m, *k.D, rho_hat, *r.nu_prime, *k.g_feas_value);
        if (rho_hat > rho)
            r.c_prime = std::sqrt(*r.nu_prime * (1.0 + *r.lambda_double_prime) /
                                  (2.0 * m * (rho_hat - rho)));
    }
    return r;
}

}  // namespace ssg
