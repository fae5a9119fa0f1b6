#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "ssg/core.hpp"

namespace ssg {

// Sampling-based invariant checks, shared by the test suites and the CLI's
// selftest verb. Each returns the worst violation observed (<= tolerance means
// pass) so failures print with a magnitude attached.

using PointSampler = std::function<Vector(RngStream&)>;

struct CheckResult {
    bool ok = true;
    double worst = 0.0;
    std::string detail;
};

// Non-expansiveness relative to feasible points and idempotence.
inline CheckResult check_projection(const ProblemInstance& problem, const PointSampler& sample,
                                    RngStream& rng, int trials = 10000, double tol = 1e-12) {
    CheckResult res;
    for (int k = 0; k < trials; ++k) {
        const Vector x = sample(rng);
        const Vector y = project(problem, sample(rng));  // a point of X
        const Vector px = project(problem, x);
        const double expansion = dist(px, y) - dist(x, y);
        const double drift = dist(project(problem, px), px);
        res.worst = std::max({res.worst, expansion, drift});
    }
    res.ok = res.worst <= tol;
    if (!res.ok) res.detail = "projection violation " + std::to_string(res.worst);
    return res;
}

// Central finite differences against the reported subgradient at points away
// from kinks. kink_distance(x) must return the distance to the nearest
// non-differentiable point (or +inf for smooth oracles).
inline CheckResult check_subgradient_fd(const Oracle& oracle, const PointSampler& sample,
                                        const std::function<double(const Vector&)>& kink_distance,
                                        RngStream& rng, int points = 1000, double h = 1e-6,
                                        double rel_tol = 1e-4, double kink_margin = 1e-3) {
    CheckResult res;
    int used = 0;
    for (int k = 0; used < points && k < points * 50; ++k) {
        Vector x = sample(rng);
        if (kink_distance(x) < kink_margin) continue;
        ++used;
        const SubgradientResult r = oracle.eval(x);
        double scale = std::max(1.0, norm(r.subgradient));
        for (std::size_t i = 0; i < x.size(); ++i) {
            Vector xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (oracle.eval(xp).value - oracle.eval(xm).value) / (2.0 * h);
            res.worst = std::max(res.worst, std::abs(fd - r.subgradient[i]) / scale);
        }
    }
    res.ok = used > 0 && res.worst <= rel_tol;
    if (used == 0) res.detail = "no non-kink sample points found";
    else if (!res.ok) res.detail = "worst relative FD mismatch " + std::to_string(res.worst);
    return res;
}

// Midpoint convexity of h(x) + (rho/2)||x||^2 over sampled pairs: the
// weak-convexity certificate.
inline CheckResult check_midpoint_weak_convexity(const Oracle& oracle, double rho,
                                                 const PointSampler& sample, RngStream& rng,
                                                 int pairs = 10000, double tol = 1e-9) {
    auto tilted = [&](const Vector& x) { return oracle.eval(x).value + 0.5 * rho * norm_sq(x); };
    CheckResult res;
    res.worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < pairs; ++k) {
        const Vector a = sample(rng);
        const Vector b = sample(rng);
        Vector mid(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
        res.worst = std::max(res.worst, tilted(mid) - 0.5 * (tilted(a) + tilted(b)));
    }
    res.ok = res.worst <= tol;
    if (!res.ok) res.detail = "midpoint convexity violated by " + std::to_string(res.worst);
    return res;
}

// Midpoint strong convexity with modulus mu: h(mid) <= avg - (mu/2)||a-b||^2/4.
inline CheckResult check_midpoint_strong_convexity(const Oracle& oracle, double mu,
                                                   const PointSampler& sample, RngStream& rng,
                                                   int pairs = 2000, double tol = 1e-9) {
    CheckResult res;
    res.worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < pairs; ++k) {
        const Vector a = sample(rng);
        const Vector b = sample(rng);
        Vector mid(a.size());
        double gap_sq = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            mid[i] = 0.5 * (a[i] + b[i]);
            gap_sq += (a[i] - b[i]) * (a[i] - b[i]);
        }
        const double lhs = oracle.eval(mid).value;
        const double rhs = 0.5 * (oracle.eval(a).value + oracle.eval(b).value) -
                           0.5 * mu * gap_sq / 4.0;
        res.worst = std::max(res.worst, lhs - rhs);
    }
    res.ok = res.worst <= tol;
    if (!res.ok) res.detail = "strong convexity margin violated by " + std::to_string(res.worst);
    return res;
}

// ||zeta|| <= M + tol for all sampled points.
inline CheckResult check_subgradient_bound(const Oracle& oracle, double m,
                                           const PointSampler& sample, RngStream& rng,
                                           int points = 1000, double tol = 1e-9) {
    CheckResult res;
    for (int k = 0; k < points; ++k) {
        const double n = norm(oracle.eval(sample(rng)).subgradient);
        res.worst = std::max(res.worst, n - m);
    }
    res.ok = res.worst <= tol;
    if (!res.ok) res.detail = "subgradient norm exceeds M by " + std::to_string(res.worst);
    return res;
}

}  // namespace ssg
