#include <catch2/catch_amalgamated.hpp>

#include "ssg/checks.hpp"
#include "ssg/core.hpp"
#include "test_helpers.hpp"

using namespace ssg;

namespace {

ProblemInstance ball_problem(double radius) {
    ProblemInstance p;
    p.dimension = 2;
    p.projection = ball_projection(radius);
    p.objective = test::l1_oracle();
    p.constraint = test::sphere_oracle(1.0);
    p.constants.M = 2.0 * radius;
    return p;
}

}  // namespace

TEST_CASE("project: radial scaling onto a ball") {
    ProblemInstance p = ball_problem(1.0);
    Vector y = project(p, {3.0, 4.0});
    CHECK(y[0] == Catch::Approx(0.6));
    CHECK(y[1] == Catch::Approx(0.8));
}

TEST_CASE("project: identity inside a box and at interior points") {
    ProblemInstance p;
    p.dimension = 3;
    p.projection = box_projection(-2.0, 2.0);
    Vector x{1.0, -1.5, 0.25};
    CHECK(project(p, x) == x);

    ProblemInstance b = ball_problem(2.0);
    Vector origin{0.0, 0.0};
    CHECK(project(b, origin) == origin);
}

TEST_CASE("project: dimension mismatch is a contract violation") {
    ProblemInstance p = ball_problem(1.0);
    CHECK_THROWS_AS(project(p, {1.0, 2.0, 3.0}), ContractError);
    CHECK_THROWS_AS(project(p, {std::numeric_limits<double>::infinity(), 0.0}), ContractError);
}

TEST_CASE("l1 oracle: sign vector and kink convention") {
    Oracle f = test::l1_oracle();
    SubgradientResult r = f.eval({1.0, -2.0});
    CHECK(r.value == 3.0);
    CHECK(r.subgradient == Vector{1.0, -1.0});

    r = f.eval({0.0, 1.0});
    CHECK(r.subgradient[0] == 0.0);
    CHECK(r.subgradient[1] == 1.0);
}

TEST_CASE("sphere oracle: value and gradient") {
    Oracle g = test::sphere_oracle(1.0);
    SubgradientResult r = g.eval({1.0, 0.0});
    CHECK(r.value == 0.0);
    CHECK(r.subgradient == Vector{2.0, 0.0});
}

TEST_CASE("non-finite oracle output raises an oracle error") {
    ProblemInstance p = ball_problem(1.0);
    p.objective.eval = [](const Vector&) {
        SubgradientResult r;
        r.value = std::numeric_limits<double>::quiet_NaN();
        r.subgradient = {0.0, 0.0};
        return r;
    };
    CHECK_THROWS_AS(eval_objective(p, {0.0, 0.0}), OracleError);
}

TEST_CASE("RngStream: determinism and substream independence") {
    RngStream a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    RngStream base(7);
    RngStream s0 = base.substream(0);
    RngStream s1 = base.substream(1);
    CHECK(s0.next_u64() != s1.next_u64());

    // substreams do not depend on the parent's draw position
    RngStream c(7);
    c.uniform();
    CHECK(c.substream(0).next_u64() == base.substream(0).next_u64());
}

TEST_CASE("projection property: non-expansive and idempotent") {
    ProblemInstance p = ball_problem(1.5);
    RngStream rng(11);
    auto sampler = [](RngStream& r) { return r.uniform_vector(2, -4.0, 4.0); };
    CheckResult res = check_projection(p, sampler, rng, 10000, 1e-12);
    INFO(res.detail);
    CHECK(res.ok);
}

TEST_CASE("subgradient validity by finite differences (l1, sphere)") {
    RngStream rng(3);
    auto sampler = [](RngStream& r) { return r.uniform_vector(3, -2.0, 2.0); };

    Oracle f = test::l1_oracle();
    auto l1_kink = [](const Vector& x) {
        double d = std::numeric_limits<double>::infinity();
        for (double e : x) d = std::min(d, std::abs(e));
        return d;
    };
    CheckResult res = check_subgradient_fd(f, sampler, l1_kink, rng, 1000);
    INFO(res.detail);
    CHECK(res.ok);

    Oracle g = test::sphere_oracle(1.0);
    auto smooth = [](const Vector&) { return std::numeric_limits<double>::infinity(); };
    res = check_subgradient_fd(g, sampler, smooth, rng, 1000);
    INFO(res.detail);
    CHECK(res.ok);
}

TEST_CASE("weak convexity certificate via midpoint sampling") {
    RngStream rng(5);
    auto sampler = [](RngStream& r) { return r.uniform_vector(2, -3.0, 3.0); };

    // convex functions pass with rho = 0
    CheckResult res = check_midpoint_weak_convexity(test::l1_oracle(), 0.0, sampler, rng, 10000);
    CHECK(res.ok);

    // h(x) = -||x||^2 is 2-weakly convex: fails with rho = 1, passes with rho = 2
    Oracle h;
    h.eval = [](const Vector& x) {
        SubgradientResult r;
        r.value = -norm_sq(x);
        r.subgradient = scaled(x, -2.0);
        return r;
    };
    CHECK_FALSE(check_midpoint_weak_convexity(h, 1.0, sampler, rng, 10000).ok);
    CHECK(check_midpoint_weak_convexity(h, 2.0, sampler, rng, 10000).ok);
}

TEST_CASE("bounded subgradients on the ball domain") {
    ProblemInstance p = ball_problem(1.5);
    RngStream rng(9);
    auto sampler = [&](RngStream& r) { return project(p, r.uniform_vector(2, -3.0, 3.0)); };
    CheckResult res = check_subgradient_bound(p.constraint, 2.0 * 1.5, sampler, rng, 1000);
    INFO(res.detail);
    CHECK(res.ok);
}
