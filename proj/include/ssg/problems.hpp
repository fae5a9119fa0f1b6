#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ssg/core.hpp"

namespace ssg {

// ---------------------------------------------------------------------------
// Sparse feature rows
// ---------------------------------------------------------------------------

struct SparseVector {
    std::vector<std::pair<std::size_t, double>> entries;  // (index, value)

    double dot(const Vector& x) const {
        double s = 0.0;
        for (const auto& [i, v] : entries) s += v * x[i];
        return s;
    }

    void add_to(Vector& x, double alpha) const {
        for (const auto& [i, v] : entries) x[i] += alpha * v;
    }

    double norm() const {
        double s = 0.0;
        for (const auto& [i, v] : entries) s += v * v;
        return std::sqrt(s);
    }

    double get(std::size_t index) const {
        for (const auto& [i, v] : entries)
            if (i == index) return v;
        return 0.0;
    }
};

struct LinearClassifierData {
    std::size_t dimension = 0;
    std::vector<SparseVector> features;  // a_i, the constraint/training set D
    std::vector<int> labels;             // +-1
    std::vector<SparseVector> group_p;   // protected group features
    std::vector<SparseVector> group_u;   // unprotected group features
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double sigmoid_derivative(double z) {
    const double s = sigmoid(z);
    return s * (1.0 - s);
}

// ---------------------------------------------------------------------------
// Hinge ERM: L(x) = (1/n) sum (1 - b_i x.a_i)_+ . Margins exactly at the kink
// contribute a zero subgradient (strict inequality in the active set).
// ---------------------------------------------------------------------------

inline Oracle hinge_erm_oracle(std::shared_ptr<const LinearClassifierData> data) {
    if (!data || data->features.empty()) throw ContractError("hinge_erm_oracle: empty data");
    Oracle o;
    o.weak_convexity = 0.0;
    o.eval = [data](const Vector& x) {
        SubgradientResult r;
        r.subgradient.assign(x.size(), 0.0);
        const double inv_n = 1.0 / static_cast<double>(data->features.size());
        double loss = 0.0;
        for (std::size_t i = 0; i < data->features.size(); ++i) {
            const double margin = data->labels[i] * data->features[i].dot(x);
            if (margin < 1.0) {
                loss += 1.0 - margin;
                data->features[i].add_to(r.subgradient, -inv_n * data->labels[i]);
            }
        }
        r.value = loss * inv_n;
        return r;
    };
    return o;
}

struct PretrainResult {
    double loss = 0.0;  // best loss value seen, used as L*
    Vector x;           // iterate achieving it
};

// Plain subgradient descent on the hinge ERM with eta_t = eta / sqrt(t+1),
// returning the best iterate. Pretraining is unconstrained.
inline PretrainResult erm_pretrain(std::shared_ptr<const LinearClassifierData> data, long iters,
                                   double eta) {
    Oracle loss = hinge_erm_oracle(data);
    Vector x(data->dimension, 0.0);
    PretrainResult best{loss.eval(x).value, x};
    for (long t = 0; t < iters; ++t) {
        SubgradientResult r = loss.eval(x);
        if (r.value < best.loss) {
            best.loss = r.value;
            best.x = x;
        }
        axpy(-eta / std::sqrt(t + 1.0), r.subgradient, x);
    }
    const double final_loss = loss.eval(x).value;
    if (final_loss < best.loss) best = {final_loss, x};
    return best;
}

// ---------------------------------------------------------------------------
// Threshold grid for the ROC-based fairness measure: 400 points equally spaced
// on [m - (M-m)/2, M + (M-m)/2] where m, M are the extreme scores of the
// pretrained model on the constraint set.
// ---------------------------------------------------------------------------

struct ThetaGrid {
    std::vector<double> thresholds;
    bool degenerate = false;  // all scores equal; single-point grid
};

inline ThetaGrid theta_grid(const LinearClassifierData& data, const Vector& x_erm,
                            std::size_t count = 400) {
    if (data.features.empty()) throw ContractError("theta_grid: empty data");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& a : data.features) {
        const double s = a.dot(x_erm);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    ThetaGrid grid;
    if (hi == lo) {
        grid.thresholds = {lo};
        grid.degenerate = true;
        return grid;
    }
    const double pad = 0.5 * (hi - lo);
    const double lower = lo - pad;
    const double upper = hi + pad;
    grid.thresholds.resize(count);
    for (std::size_t k = 0; k < count; ++k)
        grid.thresholds[k] = lower + (upper - lower) * static_cast<double>(k) /
                                         static_cast<double>(count - 1);
    return grid;
}

// ---------------------------------------------------------------------------
// Group fairness oracles.
//   R(x)  = max_theta |mean_p sigma(x.a - theta) - mean_u sigma(x.a - theta)|
//   R0(x) = the single-threshold (theta = 0) case, the demographic parity proxy
// Ties over theta take the lowest index; the absolute-value kink takes the
// zero subgradient.
// ---------------------------------------------------------------------------

namespace detail {

inline SubgradientResult sigmoid_gap_at_threshold(const LinearClassifierData& data,
                                                  const Vector& x, double theta) {
    double mean_p = 0.0, mean_u = 0.0;
    for (const auto& a : data.group_p) mean_p += sigmoid(a.dot(x) - theta);
    for (const auto& a : data.group_u) mean_u += sigmoid(a.dot(x) - theta);
    mean_p /= static_cast<double>(data.group_p.size());
    mean_u /= static_cast<double>(data.group_u.size());

    SubgradientResult r;
    const double gap = mean_p - mean_u;
    r.value = std::abs(gap);
    r.subgradient.assign(x.size(), 0.0);
    const double sign = gap > 0.0 ? 1.0 : (gap < 0.0 ? -1.0 : 0.0);
    if (sign != 0.0) {
        const double wp = sign / static_cast<double>(data.group_p.size());
        const double wu = -sign / static_cast<double>(data.group_u.size());
        for (const auto& a : data.group_p) a.add_to(r.subgradient, wp * sigmoid_derivative(a.dot(x) - theta));
        for (const auto& a : data.group_u) a.add_to(r.subgradient, wu * sigmoid_derivative(a.dot(x) - theta));
    }
    return r;
}

}  // namespace detail

// alpha: Lipschitz constant of the sigmoid gap; beta: Lipschitz constant of its
// gradient (and weak-convexity constant of R0 and R).
struct LipschitzConstants {
    double alpha = 0.0;
    double beta = 0.0;
};

inline LipschitzConstants lipschitz_constants(const LinearClassifierData& data) {
    if (data.group_p.empty() || data.group_u.empty())
        throw ContractError("lipschitz_constants: empty group");
    LipschitzConstants c;
    for (const auto& a : data.group_p) {
        const double n = a.norm();
        c.alpha += n;
        c.beta += n * n;
    }
    c.alpha /= 4.0 * static_cast<double>(data.group_p.size());
    c.beta /= 4.0 * static_cast<double>(data.group_p.size());
    double au = 0.0, bu = 0.0;
    for (const auto& a : data.group_u) {
        const double n = a.norm();
        au += n;
        bu += n * n;
    }
    c.alpha += au / (4.0 * static_cast<double>(data.group_u.size()));
    c.beta += bu / (4.0 * static_cast<double>(data.group_u.size()));
    return c;
}

inline Oracle roc_fairness_oracle(std::shared_ptr<const LinearClassifierData> data,
                                  ThetaGrid grid) {
    if (!data || data->group_p.empty() || data->group_u.empty())
        throw ContractError("roc_fairness_oracle: empty group");
    if (grid.thresholds.empty()) throw ContractError("roc_fairness_oracle: empty grid");
    Oracle o;
    o.weak_convexity = lipschitz_constants(*data).beta;
    o.eval = [data, grid = std::move(grid)](const Vector& x) {
        // precompute scores once; each threshold reuses them
        std::vector<double> sp(data->group_p.size()), su(data->group_u.size());
        for (std::size_t i = 0; i < sp.size(); ++i) sp[i] = data->group_p[i].dot(x);
        for (std::size_t i = 0; i < su.size(); ++i) su[i] = data->group_u[i].dot(x);

        double best = -1.0;
        std::size_t best_k = 0;
        double best_gap = 0.0;
        for (std::size_t k = 0; k < grid.thresholds.size(); ++k) {
            const double theta = grid.thresholds[k];
            double mp = 0.0, mu = 0.0;
            for (double s : sp) mp += sigmoid(s - theta);
            for (double s : su) mu += sigmoid(s - theta);
            const double gap = mp / static_cast<double>(sp.size()) -
                               mu / static_cast<double>(su.size());
            if (std::abs(gap) > best) {
                best = std::abs(gap);
                best_k = k;
                best_gap = gap;
            }
        }
        SubgradientResult r;
        r.value = best;
        r.subgradient.assign(x.size(), 0.0);
        const double theta = grid.thresholds[best_k];
        const double sign = best_gap > 0.0 ? 1.0 : (best_gap < 0.0 ? -1.0 : 0.0);
        if (sign != 0.0) {
            const double wp = sign / static_cast<double>(sp.size());
            const double wu = -sign / static_cast<double>(su.size());
            for (std::size_t i = 0; i < sp.size(); ++i)
                data->group_p[i].add_to(r.subgradient, wp * sigmoid_derivative(sp[i] - theta));
            for (std::size_t i = 0; i < su.size(); ++i)
                data->group_u[i].add_to(r.subgradient, wu * sigmoid_derivative(su[i] - theta));
        }
        return r;
    };
    return o;
}

inline Oracle dp_oracle(std::shared_ptr<const LinearClassifierData> data) {
    if (!data || data->group_p.empty() || data->group_u.empty())
        throw ContractError("dp_oracle: empty group");
    Oracle o;
    o.weak_convexity = lipschitz_constants(*data).beta;
    o.eval = [data](const Vector& x) { return detail::sigmoid_gap_at_threshold(*data, x, 0.0); };
    return o;
}

// ---------------------------------------------------------------------------
// SCAD regularizer (per coordinate):
//   s(z) = 2|z|            for |z| <= 1
//        = -z^2 + 4|z| - 1 for 1 < |z| <= 2
//        = 3               for |z| > 2
// Continuous, C^1 except at 0, 2-weakly convex, 0 <= s <= 3. The only
// subgradient selection needed is s'(0) = 0.
// ---------------------------------------------------------------------------

inline double scad_scalar(double z) {
    const double a = std::abs(z);
    if (a <= 1.0) return 2.0 * a;
    if (a <= 2.0) return -z * z + 4.0 * a - 1.0;
    return 3.0;
}

inline double scad_scalar_derivative(double z) {
    const double a = std::abs(z);
    if (a == 0.0 || a >= 2.0) return 0.0;
    if (a <= 1.0) return z > 0.0 ? 2.0 : -2.0;
    return -2.0 * z + (z > 0.0 ? 4.0 : -4.0);
}

inline SubgradientResult scad(const Vector& x) {
    SubgradientResult r;
    r.subgradient.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.value += scad_scalar(x[i]);
        r.subgradient[i] = scad_scalar_derivative(x[i]);
    }
    return r;
}

inline Oracle scad_oracle() {
    Oracle o;
    o.weak_convexity = 2.0;
    o.eval = [](const Vector& x) { return scad(x); };
    return o;
}

// ---------------------------------------------------------------------------
// The two fairness-constrained classification problems
// ---------------------------------------------------------------------------

// min L(x) + lambda SCAD(x)  s.t.  R0(x) <= kappa,  x in R^d.
// rho = max{2 lambda, beta}; x = 0 is a Slater witness with g(0) = -kappa.
inline ProblemInstance dp_problem(std::shared_ptr<const LinearClassifierData> data, double lambda,
                                  double kappa) {
    if (lambda < 0.0) throw ContractError("dp_problem: lambda must be nonnegative");
    if (kappa <= 0.0) throw ContractError("dp_problem: kappa must be positive");
    const LipschitzConstants lips = lipschitz_constants(*data);

    ProblemInstance p;
    p.dimension = data->dimension;
    p.projection = identity_projection();

    Oracle hinge = hinge_erm_oracle(data);
    p.objective.weak_convexity = 2.0 * lambda;
    p.objective.eval = [hinge_eval = hinge.eval, lambda](const Vector& x) {
        SubgradientResult r = hinge_eval(x);
        SubgradientResult s = scad(x);
        r.value += lambda * s.value;
        axpy(lambda, s.subgradient, r.subgradient);
        return r;
    };

    Oracle r0 = dp_oracle(data);
    p.constraint.weak_convexity = lips.beta;
    p.constraint.eval = [r0_eval = r0.eval, kappa](const Vector& x) {
        SubgradientResult r = r0_eval(x);
        r.value -= kappa;
        return r;
    };

    double hinge_bound = 0.0;
    for (const auto& a : data->features) hinge_bound += a.norm();
    hinge_bound /= static_cast<double>(data->features.size());
    const double scad_bound = 2.0 * std::sqrt(static_cast<double>(data->dimension));
    p.constants.M = std::max(hinge_bound + lambda * scad_bound, lips.alpha);
    p.constants.rho = std::max(2.0 * lambda, lips.beta);
    p.constants.g_feas_value = -kappa;
    p.constants.x_feas = Vector(data->dimension, 0.0);
    return p;
}

// min R(x)  s.t.  L(x) <= L* + kappa,  ||x|| <= r,
// with kappa = kappa_frac L* and r = radius_mult ||x_erm||.
inline ProblemInstance roc_problem(std::shared_ptr<const LinearClassifierData> data, double l_star,
                                   double kappa_frac, double radius_mult, const Vector& x_erm,
                                   std::size_t grid_size = 400) {
    const double kappa = kappa_frac * l_star;
    if (kappa <= 0.0) throw ContractError("roc_problem: kappa = kappa_frac * L* must be positive");
    const double radius = radius_mult * norm(x_erm);
    const LipschitzConstants lips = lipschitz_constants(*data);

    ProblemInstance p;
    p.dimension = data->dimension;
    p.projection = ball_projection(radius);

    p.objective = roc_fairness_oracle(data, theta_grid(*data, x_erm, grid_size));

    Oracle hinge = hinge_erm_oracle(data);
    p.constraint.weak_convexity = 0.0;
    p.constraint.eval = [hinge_eval = hinge.eval, l_star, kappa](const Vector& x) {
        SubgradientResult r = hinge_eval(x);
        r.value -= l_star + kappa;
        return r;
    };

    double hinge_bound = 0.0;
    for (const auto& a : data->features) hinge_bound += a.norm();
    hinge_bound /= static_cast<double>(data->features.size());
    p.constants.M = std::max(lips.alpha, hinge_bound);
    p.constants.rho = lips.beta;
    p.constants.D = 2.0 * radius;
    p.constants.g_feas_value = -kappa;  // exact when L(x_erm) = L*
    p.constants.x_feas = x_erm;
    return p;
}

// ---------------------------------------------------------------------------
// Constraint composers
// ---------------------------------------------------------------------------

// g(x) = max_i g_i(x); ties take the lowest-index component's subgradient.
inline Oracle max_constraint(std::vector<Oracle> components) {
    if (components.empty()) throw ContractError("max_constraint: no components");
    double rho = 0.0;
    for (const auto& c : components) rho = std::max(rho, c.weak_convexity);
    Oracle o;
    o.weak_convexity = rho;
    o.eval = [components = std::move(components)](const Vector& x) {
        SubgradientResult best = components.front().eval(x);
        for (std::size_t k = 1; k < components.size(); ++k) {
            SubgradientResult r = components[k].eval(x);
            if (r.value > best.value) best = std::move(r);
        }
        return best;
    };
    return o;
}

// Linear equality constraints A x = b folded into the inequality:
//   g(x) = max{ h(x), ||A x - b||_inf }.
// The residual branch's subgradient is +-(row of A) at the maximizing
// coordinate (lowest index), or zero at a zero residual.
inline Oracle equality_reduction(Oracle h, std::vector<Vector> a_rows, Vector b) {
    if (a_rows.size() != b.size()) throw ContractError("equality_reduction: A/b size mismatch");
    Oracle o;
    o.weak_convexity = h.weak_convexity;
    o.eval = [h_eval = h.eval, a_rows = std::move(a_rows), b = std::move(b)](const Vector& x) {
        SubgradientResult res;
        res.value = 0.0;
        std::size_t best_row = 0;
        double best_abs = -1.0, best_signed = 0.0;
        for (std::size_t i = 0; i < a_rows.size(); ++i) {
            const double r = dot(a_rows[i], x) - b[i];
            if (std::abs(r) > best_abs) {
                best_abs = std::abs(r);
                best_signed = r;
                best_row = i;
            }
        }
        SubgradientResult hr = h_eval(x);
        if (hr.value >= best_abs) return hr;  // ties go to the first component
        res.value = best_abs;
        res.subgradient.assign(x.size(), 0.0);
        const double sign = best_signed > 0.0 ? 1.0 : (best_signed < 0.0 ? -1.0 : 0.0);
        if (sign != 0.0) axpy(sign, a_rows[best_row], res.subgradient);
        return res;
    };
    return o;
}

// ---------------------------------------------------------------------------
// Synthetic weakly convex test instance:
//   g(x) = min(||x - c1||^2, ||x - c2||^2) - r^2   (2-weakly convex)
//   f(x) = <coefficients, x>, X = [-box, box]^d.
// The sharpness constant on the boundary is nu = 2r wherever one center is
// strictly closer; calibration by boundary sampling recovers it.
// ---------------------------------------------------------------------------

struct TwoBallInstance {
    ProblemInstance problem;
    Vector center1, center2;
    double radius = 0.0;
    double box_halfwidth = 0.0;
    double nu_calibrated = 0.0;  // 2 r

    // Euclidean distance to S = {x in X : g(x) <= 0} for x inside the box.
    double distance_to_feasible(const Vector& x) const {
        const double d = std::min(dist(x, center1), dist(x, center2));
        return std::max(0.0, d - radius);
    }
};

inline TwoBallInstance synthetic_two_ball(Vector c1, Vector c2, double radius, Vector coefficients,
                                          double box_halfwidth = 0.0) {
    if (radius <= 0.0) throw ContractError("synthetic_two_ball: radius must be positive");
    if (c1.size() != c2.size() || c1.size() != coefficients.size())
        throw ContractError("synthetic_two_ball: dimension mismatch");
    const std::size_t dim = c1.size();
    if (box_halfwidth <= 0.0) {
        double extent = 0.0;
        for (std::size_t i = 0; i < dim; ++i)
            extent = std::max({extent, std::abs(c1[i]), std::abs(c2[i])});
        box_halfwidth = extent + 2.0 * radius + 1.0;
    }

    TwoBallInstance inst;
    inst.center1 = c1;
    inst.center2 = c2;
    inst.radius = radius;
    inst.box_halfwidth = box_halfwidth;
    inst.nu_calibrated = 2.0 * radius;

    ProblemInstance& p = inst.problem;
    p.dimension = dim;
    p.projection = box_projection(-box_halfwidth, box_halfwidth);

    p.objective.weak_convexity = 0.0;
    p.objective.eval = [coefficients](const Vector& x) {
        SubgradientResult r;
        r.value = dot(coefficients, x);
        r.subgradient = coefficients;
        return r;
    };

    p.constraint.weak_convexity = 2.0;
    p.constraint.eval = [c1, c2, radius](const Vector& x) {
        const double d1 = dist(x, c1);
        const double d2 = dist(x, c2);
        const Vector& c = d1 <= d2 ? c1 : c2;  // lowest index wins ties
        SubgradientResult r;
        r.value = std::min(d1, d2) * std::min(d1, d2) - radius * radius;
        r.subgradient.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) r.subgradient[i] = 2.0 * (x[i] - c[i]);
        return r;
    };

    // sup over the box of ||2(x - c_i)|| and the linear objective's norm
    double reach_sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double r1 = std::max(std::abs(box_halfwidth - c1[i]), std::abs(-box_halfwidth - c1[i]));
        const double r2 = std::max(std::abs(box_halfwidth - c2[i]), std::abs(-box_halfwidth - c2[i]));
        reach_sq += std::max(r1, r2) * std::max(r1, r2);
    }
    p.constants.M = std::max(2.0 * std::sqrt(reach_sq), norm(coefficients));
    p.constants.rho = 2.0;
    p.constants.D = 2.0 * box_halfwidth * std::sqrt(static_cast<double>(dim));
    p.constants.theta = radius * radius;
    p.constants.x_feas = c1;
    p.constants.g_feas_value = -radius * radius;
    return inst;
}

}  // namespace ssg
