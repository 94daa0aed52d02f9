#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "flowplan/planner.hpp"
#include "flowplan/random.hpp"

using namespace flowplan;

namespace {

const Environment& empty_env() {
    static const Environment env(RobotKind::Point2, {}, 0, 0.0);
    return env;
}

PlannerRun make_run(const Environment& env, Config a, Config b, std::size_t budget, PlannerKind kind) {
    PlannerRun run;
    run.env = &env;
    run.q_init = a;
    run.q_target = b;
    run.budget = budget;
    run.kind = kind;
    run.params.record_time = false;
    return run;
}

void expect_sound(const PlanResult& r, const PlannerRun& run) {
    ASSERT_TRUE(r.trajectory.has_value());
    const auto& path = *r.trajectory;
    EXPECT_EQ(path.front(), run.q_init);
    EXPECT_EQ(path.back(), run.q_target);
    for (std::size_t i = 1; i < path.size(); ++i) EXPECT_TRUE(edge_valid(path[i - 1], path[i], *run.env));
    EXPECT_NEAR(r.cost, path_cost(path), 1e-12);
    for (std::size_t i = 1; i < r.metrics.rows.size(); ++i)
        EXPECT_LE(r.metrics.rows[i].best_cost, r.metrics.rows[i - 1].best_cost);
    EXPECT_LE(r.cost, r.metrics.first_solution_cost + 1e-12);
}

}  // namespace

TEST(Planner, SteerClampsToStep) {
    EXPECT_EQ(steer(Config{0.0, 0.0}, Config{0.01, 0.0}, 0.05), (Config{0.01, 0.0}));
    const Config s = steer(Config{0.0, 0.0}, Config{1.0, 0.0}, 0.05);
    EXPECT_NEAR(s[0], 0.05, 1e-15);
    EXPECT_EQ(s[1], 0.0);
}

TEST(Planner, RewiringRadiusFormula) {
    PlannerParams p;
    const double n = 5000;
    EXPECT_NEAR(rewiring_radius(5000, 2, p), std::min(3.0 * std::sqrt(std::log(n) / n), 0.05), 1e-15);
    EXPECT_NEAR(rewiring_radius(1000000, 2, p), 3.0 * std::sqrt(std::log(1e6) / 1e6), 1e-15);
    EXPECT_EQ(rewiring_radius(10, 4, p), 0.05);
}

TEST(Planner, TreeCostsStayConsistentUnderRewiring) {
    const Environment env = generate_environment(3, RobotKind::Point2, 0.3);
    RoadmapTree tree(Config{0.5, 0.5});
    if (!is_valid(tree.node(0), env)) GTEST_SKIP();
    UniformSampler s(2, 4);
    PlannerParams p;
    for (int i = 0; i < 3000; ++i) rrt_star_step(tree, s, env, p);
    for (std::size_t i = 1; i < tree.size(); ++i) {
        const auto parent = static_cast<std::size_t>(tree.parent(i));
        EXPECT_NEAR(tree.cost(i), tree.cost(parent) + distance(tree.node(parent), tree.node(i)), 1e-9);
        EXPECT_TRUE(edge_valid(tree.node(parent), tree.node(i), env));
    }
}

TEST(Planner, EmptyEnvironmentEveryStepAddsANode) {
    RoadmapTree tree(Config{0.1, 0.1});
    UniformSampler s(2, 1);
    for (int i = 0; i < 500; ++i) EXPECT_EQ(rrt_star_step(tree, s, empty_env(), {}).outcome, StepOutcome::NodeAdded);
}

TEST(Planner, EmptyEnvironmentApproachesStraightLine) {
    for (auto kind : {PlannerKind::RRTStar, PlannerKind::BiRRTStar, PlannerKind::InformedRRTStar}) {
        const auto run = make_run(empty_env(), Config{0.1, 0.2}, Config{0.9, 0.8}, 10000, kind);
        UniformSampler s(2, 17);
        const PlanResult r = plan(run, s);
        expect_sound(r, run);
        EXPECT_LE(r.cost, 1.05 * distance(run.q_init, run.q_target)) << to_string(kind);
    }
}

TEST(Planner, SoundInClutteredEnvironments) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const Environment env = generate_environment(seed, RobotKind::Point2, 0.4);
        Rng rng(seed);
        Config a{0.0, 0.0}, b{0.0, 0.0};
        do a = Config{rng.uniform(), rng.uniform()};
        while (!is_valid(a, env));
        do b = Config{rng.uniform(), rng.uniform()};
        while (!is_valid(b, env));
        for (auto kind : {PlannerKind::RRTStar, PlannerKind::BiRRTStar, PlannerKind::InformedRRTStar}) {
            const auto run = make_run(env, a, b, 3000, kind);
            UniformSampler s(2, seed * 10);
            const PlanResult r = plan(run, s);
            if (r.trajectory) expect_sound(r, run);
            const auto& f = r.metrics.final;
            EXPECT_EQ(f.nodes, 3000u);
            EXPECT_EQ(f.total_samples, f.nodes + f.invalid_obstacles + f.invalid_connections);
            EXPECT_EQ(r.metrics.rows.size(), 30u);
        }
    }
}

TEST(Planner, ArmPlanningIsSound) {
    const Environment env = generate_environment(5, RobotKind::Arm4, 0.2);
    Rng rng(6);
    Config a(4), b(4);
    do
        for (double& c : a) c = rng.uniform();
    while (!is_valid(a, env));
    do
        for (double& c : b) c = rng.uniform();
    while (!is_valid(b, env));
    const auto run = make_run(env, a, b, 3000, PlannerKind::RRTStar);
    UniformSampler s(4, 7);
    const PlanResult r = plan(run, s);
    if (r.trajectory) expect_sound(r, run);
}

TEST(Planner, DeterministicPerSeed) {
    const Environment env = generate_environment(8, RobotKind::Point2, 0.3);
    const auto run = make_run(env, Config{0.02, 0.02}, Config{0.98, 0.98}, 2000, PlannerKind::RRTStar);
    if (!is_valid(run.q_init, env) || !is_valid(run.q_target, env)) GTEST_SKIP();
    UniformSampler s1(2, 3), s2(2, 3);
    std::ostringstream a, b;
    write_metrics_csv(a, plan(run, s1).metrics);
    write_metrics_csv(b, plan(run, s2).metrics);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
              "nodes,best_cost,invalid_connections,invalid_obstacles,total_samples,elapsed_seconds");
}

TEST(Planner, RejectsBadProblems) {
    const Environment env(RobotKind::Point2, {{{0.5, 0.5}, 0.1}}, 1, 0.0);
    UniformSampler s(2, 1);
    EXPECT_THROW(plan(make_run(env, Config{0.5, 0.5}, Config{0.9, 0.9}, 10, PlannerKind::RRTStar), s),
                 std::invalid_argument);
    UniformSampler s4(4, 1);
    EXPECT_THROW(plan(make_run(env, Config{0.1, 0.1}, Config{0.9, 0.9}, 10, PlannerKind::RRTStar), s4),
                 std::invalid_argument);
    EXPECT_EQ(parse_planner("birrtstar"), PlannerKind::BiRRTStar);
    EXPECT_THROW(parse_planner("prm"), std::invalid_argument);
    EXPECT_EQ(format_cost(kInfiniteCost), "inf");
}
