#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "ssg/checks.hpp"
#include "ssg/problems.hpp"
#include "test_helpers.hpp"

using namespace ssg;

namespace {

std::shared_ptr<LinearClassifierData> single_example(double a0, int label) {
    auto data = std::make_shared<LinearClassifierData>();
    data->dimension = 1;
    SparseVector row;
    row.entries.emplace_back(0, a0);
    data->features.push_back(row);
    data->labels.push_back(label);
    return data;
}

double hinge_kink_distance(const LinearClassifierData& data, const Vector& x) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.features.size(); ++i)
        d = std::min(d, std::abs(data.labels[i] * data.features[i].dot(x) - 1.0));
    return d;
}

}  // namespace

TEST_CASE("hinge ERM: single example and all-inactive cases") {
    Oracle loss = hinge_erm_oracle(single_example(1.0, 1));
    SubgradientResult r = loss.eval({0.0});
    CHECK(r.value == 1.0);
    CHECK(r.subgradient[0] == -1.0);

    r = loss.eval({2.0});  // margin 2 >= 1, inactive
    CHECK(r.value == 0.0);
    CHECK(r.subgradient[0] == 0.0);

    // margin exactly 1: kink convention keeps it out of the active set
    r = loss.eval({1.0});
    CHECK(r.value == 0.0);
    CHECK(r.subgradient[0] == 0.0);

    CHECK_THROWS_AS(hinge_erm_oracle(std::make_shared<LinearClassifierData>()), ContractError);
}

TEST_CASE("hinge ERM: finite differences at non-kink points") {
    auto data = test::synthetic_groups(5, 40, 10, 101);
    Oracle loss = hinge_erm_oracle(data);
    RngStream rng(7);
    auto sampler = [](RngStream& r) { return r.uniform_vector(5, -2.0, 2.0); };
    auto kinks = [&](const Vector& x) { return hinge_kink_distance(*data, x); };
    CheckResult res = check_subgradient_fd(loss, sampler, kinks, rng, 1000);
    INFO(res.detail);
    CHECK(res.ok);
}

TEST_CASE("erm_pretrain: loss decreases and best iterate is returned") {
    auto data = test::synthetic_groups(4, 60, 10, 33);
    Oracle loss = hinge_erm_oracle(data);
    const double at_zero = loss.eval(Vector(4, 0.0)).value;
    PretrainResult pre = erm_pretrain(data, 400, 0.5);
    CHECK(pre.loss <= at_zero);
    CHECK(loss.eval(pre.x).value == Catch::Approx(pre.loss));
}

TEST_CASE("theta_grid: span, degenerate input, size") {
    auto data = std::make_shared<LinearClassifierData>();
    data->dimension = 1;
    for (double v : {0.0, 1.0}) {
        SparseVector row;
        row.entries.emplace_back(0, v);
        data->features.push_back(row);
        data->labels.push_back(1);
    }
    ThetaGrid grid = theta_grid(*data, {1.0});
    REQUIRE(grid.thresholds.size() == 400);
    CHECK(grid.thresholds.front() == Catch::Approx(-0.5));
    CHECK(grid.thresholds.back() == Catch::Approx(1.5));
    CHECK(grid.thresholds[1] - grid.thresholds[0] == Catch::Approx(2.0 / 399.0));

    // all scores equal: single threshold with the degenerate flag
    ThetaGrid flat = theta_grid(*data, {0.0});
    CHECK(flat.degenerate);
    CHECK(flat.thresholds == std::vector<double>{0.0});
}

TEST_CASE("ROC fairness oracle: identical groups give R = 0") {
    auto data = test::synthetic_groups(3, 10, 8, 5);
    data->group_u = data->group_p;
    ThetaGrid grid;
    grid.thresholds = {-1.0, 0.0, 1.0};
    Oracle roc = roc_fairness_oracle(data, grid);
    RngStream rng(3);
    for (int k = 0; k < 20; ++k) {
        SubgradientResult r = roc.eval(rng.uniform_vector(3, -2.0, 2.0));
        CHECK(r.value == 0.0);
        CHECK(norm(r.subgradient) == 0.0);
    }
}

TEST_CASE("ROC fairness with a single zero threshold equals the DP measure bit-exactly") {
    auto data = test::synthetic_groups(4, 10, 12, 17);
    ThetaGrid zero;
    zero.thresholds = {0.0};
    Oracle roc = roc_fairness_oracle(data, zero);
    Oracle dp = dp_oracle(data);
    RngStream rng(19);
    for (int k = 0; k < 1000; ++k) {
        Vector x = rng.uniform_vector(4, -3.0, 3.0);
        SubgradientResult a = roc.eval(x);
        SubgradientResult b = dp.eval(x);
        REQUIRE(a.value == b.value);  // bit-identical
        REQUIRE(a.subgradient == b.subgradient);
    }
}

TEST_CASE("ROC and DP ranges: 0 <= R0, R <= 1") {
    auto data = test::synthetic_groups(4, 10, 9, 23);
    Oracle dp = dp_oracle(data);
    Oracle roc = roc_fairness_oracle(data, theta_grid(*data, Vector(4, 0.5)));
    RngStream rng(29);
    for (int k = 0; k < 300; ++k) {
        Vector x = rng.uniform_vector(4, -5.0, 5.0);
        const double r0 = dp.eval(x).value;
        const double r = roc.eval(x).value;
        CHECK(r0 >= 0.0);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("ROC/DP finite differences away from ties and the absolute-value kink") {
    auto data = test::synthetic_groups(4, 10, 7, 41);
    Oracle dp = dp_oracle(data);
    RngStream rng(43);
    auto sampler = [](RngStream& r) { return r.uniform_vector(4, -1.5, 1.5); };
    auto dp_kink = [&](const Vector& x) {
        // distance from the |.| kink: magnitude of the group gap itself
        return dp.eval(x).value;
    };
    CheckResult res = check_subgradient_fd(dp, sampler, dp_kink, rng, 1000);
    INFO(res.detail);
    CHECK(res.ok);

    ThetaGrid grid;
    grid.thresholds = {-0.8, -0.2, 0.3, 0.9};
    Oracle roc = roc_fairness_oracle(data, grid);
    auto roc_kink = [&](const Vector& x) {
        // exclude points where the top two thresholds nearly tie or the gap
        // at the maximizer nearly vanishes
        std::vector<double> vals;
        for (double th : grid.thresholds) {
            double mp = 0.0, mu = 0.0;
            for (const auto& a : data->group_p) mp += sigmoid(a.dot(x) - th);
            for (const auto& a : data->group_u) mu += sigmoid(a.dot(x) - th);
            vals.push_back(std::abs(mp / data->group_p.size() - mu / data->group_u.size()));
        }
        std::sort(vals.begin(), vals.end());
        const double top = vals.back();
        const double second = vals[vals.size() - 2];
        return std::min(top, top - second);
    };
    res = check_subgradient_fd(roc, sampler, roc_kink, rng, 1000);
    INFO(res.detail);
    CHECK(res.ok);
}

TEST_CASE("SCAD scalar values and subgradients") {
    CHECK(scad_scalar(0.5) == Catch::Approx(1.0));
    CHECK(scad_scalar(1.5) == Catch::Approx(2.75));
    CHECK(scad_scalar(3.0) == 3.0);
    CHECK(scad_scalar_derivative(1.5) == Catch::Approx(1.0));  // -2*1.5 + 4
    CHECK(scad_scalar_derivative(0.0) == 0.0);
    CHECK(scad_scalar_derivative(2.0) == 0.0);
    CHECK(scad_scalar_derivative(-1.5) == Catch::Approx(-1.0));

    // continuity at the breakpoints
    CHECK(scad_scalar(1.0) == Catch::Approx(2.0));
    CHECK(scad_scalar(std::nextafter(1.0, 2.0)) == Catch::Approx(2.0));
    CHECK(scad_scalar(2.0) == Catch::Approx(3.0));
    CHECK(scad_scalar(std::nextafter(2.0, 3.0)) == Catch::Approx(3.0));

    SubgradientResult r = scad({0.5, -1.5, 3.0});
    CHECK(r.value == Catch::Approx(1.0 + 2.75 + 3.0));
    CHECK(r.subgradient == Vector{2.0, -1.0, 0.0});
}

TEST_CASE("SCAD: range and 2-weak convexity") {
    RngStream rng(47);
    for (int k = 0; k < 2000; ++k) {
        const double z = rng.uniform(-6.0, 6.0);
        CHECK(scad_scalar(z) >= 0.0);
        CHECK(scad_scalar(z) <= 3.0);
    }
    auto sampler = [](RngStream& r) { return r.uniform_vector(3, -4.0, 4.0); };
    CheckResult res = check_midpoint_weak_convexity(scad_oracle(), 2.0, sampler, rng, 10000, 1e-9);
    INFO(res.detail);
    CHECK(res.ok);
}

TEST_CASE("SCAD finite differences away from the 0 and 2 kinks") {
    Oracle s = scad_oracle();
    RngStream rng(53);
    auto sampler = [](RngStream& r) { return r.uniform_vector(3, -3.0, 3.0); };
    auto kinks = [](const Vector& x) {
        double d = std::numeric_limits<double>::infinity();
        for (double e : x) {
            const double a = std::abs(e);
            d = std::min({d, a, std::abs(a - 2.0)});
        }
        return d;
    };
    CheckResult res = check_subgradient_fd(s, sampler, kinks, rng, 1000);
    INFO(res.detail);
    CHECK(res.ok);
}

TEST_CASE("lipschitz_constants worked examples") {
    auto data = std::make_shared<LinearClassifierData>();
    data->dimension = 2;
    SparseVector row;
    row.entries.emplace_back(0, 2.0);
    data->group_p.push_back(row);
    data->group_u.push_back(row);
    LipschitzConstants c = lipschitz_constants(*data);
    CHECK(c.alpha == Catch::Approx(1.0));
    CHECK(c.beta == Catch::Approx(2.0));

    // doubling features doubles alpha and quadruples beta
    for (auto& r : data->group_p)
        for (auto& [i, v] : r.entries) v *= 2.0;
    for (auto& r : data->group_u)
        for (auto& [i, v] : r.entries) v *= 2.0;
    LipschitzConstants c2 = lipschitz_constants(*data);
    CHECK(c2.alpha == Catch::Approx(2.0 * c.alpha));
    CHECK(c2.beta == Catch::Approx(4.0 * c.beta));

    // all-zero features
    auto zero = std::make_shared<LinearClassifierData>();
    zero->dimension = 2;
    zero->group_p.push_back(SparseVector{});
    zero->group_u.push_back(SparseVector{});
    LipschitzConstants cz = lipschitz_constants(*zero);
    CHECK(cz.alpha == 0.0);
    CHECK(cz.beta == 0.0);
}

TEST_CASE("beta bounds the sampled curvature of the sigmoid gap gradient") {
    auto data = test::synthetic_groups(4, 10, 9, 59);
    const double beta = lipschitz_constants(*data).beta;
    // gradient of h(x) = mean_p sigma(x.a) - mean_u sigma(x.a)
    auto grad_h = [&](const Vector& x) {
        Vector g(x.size(), 0.0);
        for (const auto& a : data->group_p)
            a.add_to(g, sigmoid_derivative(a.dot(x)) / data->group_p.size());
        for (const auto& a : data->group_u)
            a.add_to(g, -sigmoid_derivative(a.dot(x)) / data->group_u.size());
        return g;
    };
    RngStream rng(61);
    for (int k = 0; k < 1000; ++k) {
        Vector x = rng.uniform_vector(4, -2.0, 2.0);
        Vector y = rng.uniform_vector(4, -2.0, 2.0);
        CHECK(dist(grad_h(x), grad_h(y)) <= beta * dist(x, y) + 1e-12);
    }
}

TEST_CASE("dp_problem: Slater witness at the origin and declared constants") {
    auto data = test::synthetic_groups(4, 30, 8, 67);
    ProblemInstance p = dp_problem(data, 0.2, 0.02);
    Vector zero(4, 0.0);
    CHECK(eval_constraint(p, zero).value == Catch::Approx(-0.02));
    CHECK(p.constants.rho == Catch::Approx(std::max(0.4, lipschitz_constants(*data).beta)));
    CHECK(p.projection(Vector{9.0, -9.0, 9.0, -9.0}) == Vector{9.0, -9.0, 9.0, -9.0});

    // scad(0.5 each coordinate) shows up in the objective with weight lambda
    const double hinge_at = hinge_erm_oracle(data).eval(zero).value;
    CHECK(eval_objective(p, zero).value == Catch::Approx(hinge_at));
}

TEST_CASE("roc_problem: Slater witness value and defaults") {
    auto data = test::synthetic_groups(4, 30, 8, 71);
    PretrainResult pre = erm_pretrain(data, 500, 0.5);
    ProblemInstance p = roc_problem(data, pre.loss, 0.001, 5.0, pre.x);
    CHECK(eval_constraint(p, pre.x).value == Catch::Approx(-0.001 * pre.loss));
    CHECK(*p.constants.D == Catch::Approx(2.0 * 5.0 * norm(pre.x)));

    // the ball projection keeps iterates within radius
    Vector far(4, 100.0);
    CHECK(norm(p.projection(far)) <= 5.0 * norm(pre.x) + 1e-9);
}

TEST_CASE("max_constraint: lowest-index tie rule") {
    Oracle a, b;
    a.eval = [](const Vector& x) { return SubgradientResult{x[0] - 1.0, Vector{1.0}}; };
    b.eval = [](const Vector& x) { return SubgradientResult{-x[0] - 1.0, Vector{-1.0}}; };
    Oracle m = max_constraint({a, b});
    SubgradientResult r = m.eval({0.0});
    CHECK(r.value == -1.0);
    CHECK(r.subgradient == Vector{1.0});  // tie resolved to the first component

    CHECK(m.eval({2.0}).value == 1.0);
    CHECK(m.eval({-2.0}).subgradient == Vector{-1.0});
    CHECK_THROWS_AS(max_constraint({}), ContractError);
}

TEST_CASE("equality_reduction: infinity-norm residual branch") {
    Oracle h;
    h.eval = [](const Vector&) { return SubgradientResult{-0.5, Vector{0.0, 0.0}}; };
    std::vector<Vector> rows = {{1.0, 0.0}, {0.0, 1.0}};  // A = I
    Oracle g = equality_reduction(h, rows, {0.0, 0.0});

    SubgradientResult r = g.eval({1.0, -2.0});
    CHECK(r.value == 2.0);
    CHECK(r.subgradient == Vector{0.0, -1.0});

    // residual zero and h < 0: value 0 from the residual branch, zero subgradient
    r = g.eval({0.0, 0.0});
    CHECK(r.value == 0.0);
    CHECK(r.subgradient == Vector{0.0, 0.0});
}

TEST_CASE("two-ball instance: interior witness, boundary gradient, calibrated nu") {
    TwoBallInstance inst = synthetic_two_ball({-2.0, 0.0}, {2.0, 0.0}, 1.0, {1.0, 0.0});
    ProblemInstance& p = inst.problem;

    CHECK(eval_constraint(p, inst.center1).value == Catch::Approx(-1.0));
    CHECK(*p.constants.theta == Catch::Approx(1.0));

    // on the sphere around c1 the gradient norm is exactly 2r
    RngStream rng(73);
    double min_grad = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 5000; ++k) {
        const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        Vector x{inst.center1[0] + std::cos(angle), inst.center1[1] + std::sin(angle)};
        min_grad = std::min(min_grad, norm(eval_constraint(p, x).subgradient));
    }
    for (int k = 0; k < 5000; ++k) {
        const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        Vector x{inst.center2[0] + std::cos(angle), inst.center2[1] + std::sin(angle)};
        min_grad = std::min(min_grad, norm(eval_constraint(p, x).subgradient));
    }
    CHECK(min_grad == Catch::Approx(2.0).margin(1e-9));
    CHECK(inst.nu_calibrated == Catch::Approx(min_grad).margin(1e-9));
}

TEST_CASE("two-ball instance: local error bound (nu/2) dist <= g_+") {
    TwoBallInstance inst = synthetic_two_ball({-2.0, 0.0}, {2.0, 0.0}, 1.0, {1.0, 0.0});
    const double nu = inst.nu_calibrated;
    RngStream rng(79);
    int used = 0;
    for (int k = 0; k < 20000 && used < 5000; ++k) {
        Vector x = rng.uniform_vector(2, -4.0, 4.0);
        const double d = inst.distance_to_feasible(x);
        if (d > nu / inst.problem.constants.rho) continue;
        ++used;
        const double g_plus = std::max(0.0, eval_constraint(inst.problem, x).value);
        CHECK(nu / 2.0 * d <= g_plus + 1e-12);
    }
    REQUIRE(used > 1000);
}

TEST_CASE("two-ball instance: weakly convex certificate away from the midpoint crease") {
    // g = min of two quadratics has a concave crease on the equidistant plane;
    // on either side it is a smooth quadratic, hence 2-weakly convex there.
    TwoBallInstance inst = synthetic_two_ball({-2.0, 0.0}, {2.0, 0.0}, 1.0, {1.0, 0.0});
    RngStream rng(83);
    auto left_sampler = [](RngStream& r) {
        Vector x = r.uniform_vector(2, -4.0, 4.0);
        x[0] = -std::abs(x[0]) - 0.25;
        return x;
    };
    CheckResult res = check_midpoint_weak_convexity(inst.problem.constraint, 2.0, left_sampler,
                                                    rng, 10000, 1e-9);
    INFO(res.detail);
    CHECK(res.ok);
}
