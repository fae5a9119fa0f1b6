#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssg {

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// Caller broke a documented precondition (dimension mismatch, negative g_+, ...).
struct ContractError : std::invalid_argument {
    explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

// Parameters outside the regime a formula is valid in (rho_hat <= rho, missing
// Slater point, mu <= 0, ...).
struct RegimeError : std::invalid_argument {
    explicit RegimeError(const std::string& what) : std::invalid_argument(what) {}
};

// An oracle returned a non-finite value, or a run produced a non-finite iterate.
struct OracleError : std::runtime_error {
    explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

struct NotImplementedError : std::logic_error {
    explicit NotImplementedError(const std::string& what) : std::logic_error(what) {}
};

// ---------------------------------------------------------------------------
// Small dense linear algebra helpers
// ---------------------------------------------------------------------------

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_sq(const Vector& a) { return dot(a, a); }

inline double norm(const Vector& a) { return std::sqrt(norm_sq(a)); }

inline double dist(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline Vector scaled(const Vector& x, double alpha) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i];
    return y;
}

inline bool is_finite(double v) { return std::isfinite(v); }

inline bool is_finite(const Vector& v) {
    for (double e : v)
        if (!std::isfinite(e)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// RngStream: reproducible random stream with derivable sub-streams.
// Same seed => bit-identical draws; substream(i) is independent per index.
// ---------------------------------------------------------------------------

class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : seed_(seed), gen_(mix(seed)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    RngStream substream(std::uint64_t index) const {
        return RngStream(mix(seed_ + 0x9e3779b97f4a7c15ULL * (index + 1)));
    }

    std::uint64_t next_u64() {
        ++counter_;
        return gen_();
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        // rejection-free modulo is fine at the scales used here
        return n == 0 ? 0 : next_u64() % n;
    }

    // standard normal via Box-Muller (kept in-library for bit-stable replay)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Vector uniform_vector(std::size_t dim, double lo, double hi) {
        Vector v(dim);
        for (auto& e : v) e = uniform(lo, hi);
        return v;
    }

    Vector normal_vector(std::size_t dim, double scale = 1.0) {
        Vector v(dim);
        for (auto& e : v) e = scale * normal();
        return v;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Oracles and problem instances
// ---------------------------------------------------------------------------

struct SubgradientResult {
    double value = 0.0;
    Vector subgradient;
};

struct StochasticSample {
    double value_sample = 0.0;
    Vector subgradient_sample;
};

// One function (objective or constraint). `eval` is the deterministic path and
// is always present. The sampler hooks, when set, make the function usable by
// the stochastic solver; when absent the solver falls back to `eval`, which
// reduces it to the deterministic method exactly.
struct Oracle {
    std::function<SubgradientResult(const Vector&)> eval;
    std::function<double(const Vector&, RngStream&)> sample_value;        // omega
    std::function<Vector(const Vector&, RngStream&)> sample_subgradient;  // xi
    double weak_convexity = 0.0;                                          // declared rho of this function

    bool has_stochastic_value() const { return static_cast<bool>(sample_value); }
    bool has_stochastic_subgradient() const { return static_cast<bool>(sample_subgradient); }
};

// Known analytic constants of one problem. Optional entries are simply absent
// when the instance cannot certify them.
struct ProblemConstants {
    double M = 0.0;    // subgradient norm bound for both f and g
    double rho = 0.0;  // weak convexity of the harder of f, g
    std::optional<double> D;             // diameter of X (or of S when X is unbounded)
    std::optional<double> rho_bar;
    std::optional<double> theta;         // uniform Slater margin
    std::optional<double> sigma;         // stochastic value-noise scale
    std::optional<double> g_feas_value;  // g(x_feas) < 0
    std::optional<Vector> x_feas;        // Slater point
    std::optional<double> mu;            // strong convexity of g
};

struct ProblemInstance {
    std::size_t dimension = 0;
    Oracle objective;
    Oracle constraint;
    std::function<Vector(const Vector&)> projection;  // onto X
    ProblemConstants constants;
};

inline ProblemInstance make_unconstrained_domain(std::size_t dim) {
    ProblemInstance p;
    p.dimension = dim;
    p.projection = [](const Vector& x) { return x; };
    return p;
}

// ---------------------------------------------------------------------------
// Checked oracle entry points
// ---------------------------------------------------------------------------

inline void require_dimension(const ProblemInstance& problem, const Vector& x, const char* where) {
    if (x.size() != problem.dimension)
        throw ContractError(std::string(where) + ": dimension mismatch, expected " +
                            std::to_string(problem.dimension) + " got " + std::to_string(x.size()));
}

inline Vector project(const ProblemInstance& problem, const Vector& x) {
    require_dimension(problem, x, "project");
    if (!is_finite(x)) throw ContractError("project: non-finite input point");
    Vector y = problem.projection(x);
    if (y.size() != problem.dimension || !is_finite(y))
        throw OracleError("project: projection produced an invalid point");
    return y;
}

inline SubgradientResult eval_oracle(const Oracle& oracle, const Vector& x, const char* where) {
    if (!is_finite(x)) throw ContractError(std::string(where) + ": non-finite input point");
    SubgradientResult r = oracle.eval(x);
    if (!is_finite(r.value) || !is_finite(r.subgradient))
        throw OracleError(std::string(where) + ": non-finite oracle output");
    return r;
}

inline SubgradientResult eval_objective(const ProblemInstance& problem, const Vector& x) {
    require_dimension(problem, x, "eval_objective");
    return eval_oracle(problem.objective, x, "eval_objective");
}

inline SubgradientResult eval_constraint(const ProblemInstance& problem, const Vector& x) {
    require_dimension(problem, x, "eval_constraint");
    return eval_oracle(problem.constraint, x, "eval_constraint");
}

// ---------------------------------------------------------------------------
// Common projections
// ---------------------------------------------------------------------------

inline std::function<Vector(const Vector&)> ball_projection(double radius, Vector center = {}) {
    return [radius, center = std::move(center)](const Vector& x) {
        Vector d = x;
        if (!center.empty())
            for (std::size_t i = 0; i < d.size(); ++i) d[i] -= center[i];
        const double n = norm(d);
        if (n <= radius) return x;
        Vector y(x.size());
        const double s = radius / n;
        for (std::size_t i = 0; i < x.size(); ++i)
            y[i] = (center.empty() ? 0.0 : center[i]) + s * d[i];
        return y;
    };
}

inline std::function<Vector(const Vector&)> box_projection(double lo, double hi) {
    return [lo, hi](const Vector& x) {
        Vector y = x;
        for (auto& e : y) e = std::min(hi, std::max(lo, e));
        return y;
    };
}

inline std::function<Vector(const Vector&)> identity_projection() {
    return [](const Vector& x) { return x; };
}

}  // namespace ssg
