#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "ssg/problems.hpp"
#include "ssg/solver.hpp"
#include "test_helpers.hpp"

using namespace ssg;

namespace {

ProblemInstance box_l1_problem(double g_value = -1.0) {
    ProblemInstance p;
    p.dimension = 1;
    p.projection = box_projection(-10.0, 10.0);
    p.objective = test::l1_oracle();
    p.constraint = test::constant_oracle(g_value, 1);
    p.constants.M = 1.0;
    return p;
}

}  // namespace

TEST_CASE("ssg_run: hand-simulated trace on |x| with constant step") {
    ProblemInstance p = box_l1_problem();
    StepsizePolicy policy = schedule_manual(0.0, 0.5, 6, 0, false, OutputMode::output_i);
    SolverTrace trace = ssg_run(p, policy, {2.0}, RngStream(1));

    REQUIRE(trace.checkpoint_points.size() == 6);
    const double expected[] = {2.0, 1.5, 1.0, 0.5, 0.0, 0.0};
    for (int t = 0; t < 6; ++t) CHECK(trace.checkpoint_points[t][0] == Catch::Approx(expected[t]));
    CHECK(trace.x_final[0] == 0.0);  // kink convention parks the iterate at 0
    CHECK(trace.index_set_j.empty());
}

TEST_CASE("ssg_run: projection clamps a big step") {
    ProblemInstance p;
    p.dimension = 1;
    p.projection = box_projection(-1.0, 1.0);
    p.objective.eval = [](const Vector& x) {
        return SubgradientResult{x[0], Vector{1.0}};
    };
    p.constraint = test::constant_oracle(-1.0, 1);
    StepsizePolicy policy = schedule_manual(0.0, 10.0, 3, 0, false, OutputMode::output_i);
    SolverTrace trace = ssg_run(p, policy, {0.0}, RngStream(1));
    CHECK(trace.checkpoint_points[1][0] == -1.0);
    CHECK(trace.checkpoint_points[2][0] == -1.0);
}

TEST_CASE("ssg_run: switching invariant and set bookkeeping") {
    // constraint g(x) = x  with  f(x) = |x - 3|: iterates oscillate around the band
    ProblemInstance p;
    p.dimension = 1;
    p.projection = box_projection(-5.0, 5.0);
    p.objective.eval = [](const Vector& x) {
        const double d = x[0] - 3.0;
        return SubgradientResult{std::abs(d), Vector{d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)}};
    };
    p.constraint.eval = [](const Vector& x) { return SubgradientResult{x[0], Vector{1.0}}; };
    const long t_total = 200, s_start = 50;
    StepsizePolicy policy = schedule_manual(0.1, 0.05, t_total, s_start, false, OutputMode::output_ii);
    SolverTrace trace = ssg_run(p, policy, {-1.0}, RngStream(1));

    CHECK(trace.index_set_i.size() + trace.index_set_j.size() ==
          static_cast<std::size_t>(t_total - s_start));
    std::size_t ii = 0, jj = 0;
    for (long t = s_start; t < t_total; ++t) {
        const bool in_i = ii < trace.index_set_i.size() && trace.index_set_i[ii] == t;
        const bool in_j = jj < trace.index_set_j.size() && trace.index_set_j[jj] == t;
        CHECK(in_i != in_j);  // disjoint and covering
        CHECK(in_i == (trace.g_values[static_cast<std::size_t>(t)] <= policy.epsilon(t)));
        if (in_i) ++ii;
        if (in_j) ++jj;
    }
    CHECK(!trace.index_set_j.empty());  // both branches exercised
    CHECK(!trace.index_set_i.empty());
}

TEST_CASE("ssg_run: determinism and iterate membership in X") {
    TwoBallInstance inst = synthetic_two_ball({-2.0, 0.0}, {2.0, 0.0}, 1.0, {1.0, 0.5});
    StepsizePolicy policy = schedule_weakly_convex(0.5, inst.problem.constants.M, 2.0,
                                                   inst.nu_calibrated, 500);
    Vector x0 = inst.center1;
    SolverTrace a = ssg_run(inst.problem, policy, x0, RngStream(3));
    SolverTrace b = ssg_run(inst.problem, policy, x0, RngStream(3));
    REQUIRE(a.checkpoint_points.size() == b.checkpoint_points.size());
    for (std::size_t i = 0; i < a.checkpoint_points.size(); ++i)
        CHECK(a.checkpoint_points[i] == b.checkpoint_points[i]);  // bit-identical

    for (const auto& x : a.checkpoint_points)
        CHECK(dist(project(inst.problem, x), x) <= 1e-12);
}

TEST_CASE("polyak_step basics") {
    CHECK(polyak_step(2.0, 4.0) == Catch::Approx(0.5));
    CHECK(polyak_step(0.4, 1.0, 0.25) == Catch::Approx(0.1));
    CHECK(polyak_step(1.0, 0.0) == 0.0);
    CHECK_THROWS_AS(polyak_step(-0.1, 1.0), ContractError);
}

TEST_CASE("sample_output: exact weights, single element, empty-I error") {
    SolverTrace trace;
    trace.total_iterations = 2;
    trace.start_index = 0;
    trace.index_set_i = {0, 1};
    trace.eta_sequence = {1.0, 3.0};

    RngStream rng(17);
    int count0 = 0;
    const int draws = 100000;
    for (int k = 0; k < draws; ++k)
        if (sample_output(trace, OutputMode::output_i, rng).tau == 0) ++count0;
    CHECK(std::abs(count0 / static_cast<double>(draws) - 0.25) < 0.01);

    SolverTrace single = trace;
    single.index_set_i = {1};
    for (int k = 0; k < 10; ++k)
        CHECK(sample_output(single, OutputMode::output_i, rng).tau == 1);

    SolverTrace empty = trace;
    empty.index_set_i.clear();
    empty.g_values = {0.7, 0.9};
    CHECK_THROWS_WITH(sample_output(empty, OutputMode::output_i, rng),
                      Catch::Matchers::ContainsSubstring("0.7"));
}

TEST_CASE("sample_output: uniform weights over I u J within 0.01 of 1/4") {
    SolverTrace trace;
    trace.total_iterations = 4;
    trace.start_index = 0;
    trace.index_set_i = {0, 2};
    trace.index_set_j = {1, 3};
    trace.eta_sequence = {1.0, 1.0, 1.0, 1.0};
    RngStream rng(23);
    int counts[4] = {0, 0, 0, 0};
    const int draws = 100000;
    for (int k = 0; k < draws; ++k)
        ++counts[sample_output(trace, OutputMode::output_ii, rng).tau];
    for (int t = 0; t < 4; ++t)
        CHECK(std::abs(counts[t] / static_cast<double>(draws) - 0.25) < 0.01);
}

TEST_CASE("sssg_run: reduces to ssg_run bit-exactly without stochastic hooks") {
    TwoBallInstance inst = synthetic_two_ball({-2.0, 0.0}, {2.0, 0.0}, 1.0, {1.0, 0.0});
    StepsizePolicy policy = schedule_weakly_convex(0.5, inst.problem.constants.M, 2.0,
                                                   inst.nu_calibrated, 300);
    Vector x0 = inst.center1;
    SolverTrace det = ssg_run(inst.problem, policy, x0, RngStream(5));
    SolverTrace sto = sssg_run(inst.problem, policy, x0, 1, RngStream(5));
    REQUIRE(det.checkpoint_points.size() == sto.checkpoint_points.size());
    for (std::size_t i = 0; i < det.checkpoint_points.size(); ++i)
        CHECK(det.checkpoint_points[i] == sto.checkpoint_points[i]);
    CHECK(det.index_set_i == sto.index_set_i);
    CHECK(det.index_set_j == sto.index_set_j);
}

TEST_CASE("sssg_run: batch mean decides the switch") {
    ProblemInstance p = box_l1_problem();
    // value samples cycle 0.1, 0.3, 0.2, 0.4 -> mean 0.25 under batch 4
    auto counter = std::make_shared<int>(0);
    p.constraint.sample_value = [counter](const Vector&, RngStream&) {
        static const double seq[] = {0.1, 0.3, 0.2, 0.4};
        return seq[(*counter)++ % 4];
    };
    StepsizePolicy policy = schedule_manual(0.3, 0.5, 1, 0, false, OutputMode::output_ii);
    SolverTrace trace = sssg_run(p, policy, {2.0}, 4, RngStream(1));
    CHECK(trace.g_values[0] == Catch::Approx(0.25));
    CHECK(trace.index_set_i == std::vector<long>{0});  // objective branch taken
}

TEST_CASE("sssg_run: stochastic subgradients are unbiased (Monte Carlo)") {
    ProblemInstance p = box_l1_problem();
    const double noise = 0.5;
    p.objective.sample_subgradient = [noise](const Vector& x, RngStream& rng) {
        Vector g = test::l1_oracle().eval(x).subgradient;
        for (auto& e : g) e += noise * rng.normal();
        return g;
    };
    RngStream rng(29);
    const Vector x{1.5};
    const double truth = 1.0;
    double mean = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) mean += p.objective.sample_subgradient(x, rng)[0];
    mean /= n;
    const double stderr3 = 3.0 * noise / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean - truth) < stderr3);
}

TEST_CASE("materialize_iterate: sparse checkpoints reproduce stored iterates") {
    TwoBallInstance inst = synthetic_two_ball({-2.0, 0.0}, {2.0, 0.0}, 1.0, {1.0, 0.25});
    StepsizePolicy policy = schedule_weakly_convex(0.5, inst.problem.constants.M, 2.0,
                                                   inst.nu_calibrated, 240);
    Vector x0 = inst.center1;
    SolverTrace dense = ssg_run(inst.problem, policy, x0, RngStream(7));
    CheckpointPlan sparse_plan;
    sparse_plan.every = 64;
    SolverTrace sparse = ssg_run(inst.problem, policy, x0, RngStream(7), sparse_plan);

    for (long tau : {0L, 37L, 100L, 239L}) {
        Vector x = materialize_iterate(inst.problem, policy, sparse, tau);
        CHECK(x == dense.checkpoint_points[static_cast<std::size_t>(tau)]);
    }

    RngStream rng(13);
    OutputSample s = sample_output_point(inst.problem, policy, sparse,
                                         OutputMode::output_ii, rng);
    CHECK(s.x_tau == dense.checkpoint_points[static_cast<std::size_t>(s.tau)]);
}

TEST_CASE("lean traces: reservoir draw matches the stored-weight distribution") {
    // f(x) = |x - 3|, g(x) = x, band eps = 0.1: both branches occur
    ProblemInstance p;
    p.dimension = 1;
    p.projection = box_projection(-5.0, 5.0);
    p.objective.eval = [](const Vector& x) {
        const double d = x[0] - 3.0;
        return SubgradientResult{std::abs(d), Vector{d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)}};
    };
    p.constraint.eval = [](const Vector& x) { return SubgradientResult{x[0], Vector{1.0}}; };
    StepsizePolicy policy = schedule_manual(0.1, 0.05, 64, 0, true, OutputMode::output_ii);

    SolverTrace dense = ssg_run(p, policy, {-1.0}, RngStream(2));
    CheckpointPlan lean_plan;
    lean_plan.record_sequences = false;
    lean_plan.every = 0;

    // lean run agrees with the dense run on the final iterate
    SolverTrace lean = ssg_run(p, policy, {-1.0}, RngStream(2), lean_plan);
    CHECK(lean.x_final == dense.x_final);
    CHECK(lean.lean);
    CHECK(lean.eta_sequence.empty());
    REQUIRE(lean.reservoir_ij.tau >= 0);
    CHECK(lean.reservoir_ij.x ==
          dense.checkpoint_points[static_cast<std::size_t>(lean.reservoir_ij.tau)]);
    // the reservoir total equals the full eta mass over [S, T)
    double mass = 0.0;
    for (double e : dense.eta_sequence) mass += e;
    CHECK(lean.reservoir_ij.total_weight == Catch::Approx(mass));

    // empirical distribution of the reservoir draw across seeds matches the
    // exact categorical sampler on the dense trace
    std::map<long, int> lean_counts, dense_counts;
    const int runs = 20000;
    for (int k = 0; k < runs; ++k)
        ++lean_counts[ssg_run(p, policy, {-1.0}, RngStream(1000 + k), lean_plan)
                          .reservoir_ij.tau];
    RngStream rng(55);
    for (int k = 0; k < runs; ++k)
        ++dense_counts[sample_output(dense, OutputMode::output_ii, rng).tau];
    for (long t = 0; t < 64; ++t) {
        const double lf = lean_counts[t] / static_cast<double>(runs);
        const double df = dense_counts[t] / static_cast<double>(runs);
        CHECK(std::abs(lf - df) < 0.015);
    }
}

TEST_CASE("polyak_feasibility_run: sphere instance converges, feasible start is a no-op") {
    ProblemInstance p;
    p.dimension = 2;
    p.projection = ball_projection(3.0);
    p.objective = test::l1_oracle();
    p.constraint.eval = [](const Vector& x) {
        const double n = norm(x);
        SubgradientResult r;
        r.value = n - 1.0;
        r.subgradient = n > 0.0 ? scaled(x, 1.0 / n) : Vector(x.size(), 0.0);
        return r;
    };

    SolverTrace run = polyak_feasibility_run(p, {2.0, 0.0}, 200, 0.0);
    CHECK(run.converged);
    CHECK(std::abs(norm(run.x_final) - 1.0) <= 1e-6);

    SolverTrace idle = polyak_feasibility_run(p, {0.5, 0.0}, 200, 0.0);
    CHECK(idle.iterations_run == 0);
    CHECK(idle.x_final == Vector{0.5, 0.0});
}

TEST_CASE("polyak_feasibility_run: two-ball contraction rate") {
    TwoBallInstance inst = synthetic_two_ball({-2.0, 0.0}, {2.0, 0.0}, 1.0, {1.0, 0.0});
    const double nu = inst.nu_calibrated;
    const double m = inst.problem.constants.M;
    const double rate = 1.0 - nu * nu / (8.0 * m * m) + 1e-9;

    // start inside the basin dist <= nu/(4 rho) = 0.25
    Vector x0{-2.0 + 1.2, 0.2};  // dist to ball 1 about 0.216
    REQUIRE(inst.distance_to_feasible(x0) <= nu / (4.0 * 2.0));
    SolverTrace run = polyak_feasibility_run(inst.problem, x0, 100, 1e-14);
    for (std::size_t k = 0; k + 1 < run.checkpoint_points.size(); ++k) {
        const double d0 = inst.distance_to_feasible(run.checkpoint_points[k]);
        const double d1 = inst.distance_to_feasible(run.checkpoint_points[k + 1]);
        if (d0 > 0.0) CHECK(d1 * d1 <= rate * d0 * d0);
    }
}
