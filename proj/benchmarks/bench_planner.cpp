#include <benchmark/benchmark.h>

#include <algorithm>

#include "flowplan/dataset.hpp"
#include "flowplan/kdtree.hpp"
#include "flowplan/planner.hpp"

using namespace flowplan;

namespace {

void BM_KdTreeNearest(benchmark::State& state) {
    Rng rng(1);
    KdTree tree(2);
    for (int i = 0; i < state.range(0); ++i) tree.insert(Config{rng.uniform(), rng.uniform()});
    for (auto _ : state) benchmark::DoNotOptimize(tree.nearest(Config{rng.uniform(), rng.uniform()}));
}
BENCHMARK(BM_KdTreeNearest)->Arg(1000)->Arg(10000);

void BM_EdgeValid(benchmark::State& state) {
    const auto robot = state.range(0) == 2 ? RobotKind::Point2 : RobotKind::Arm4;
    const Environment env = generate_environment(2, robot, 0.3);
    Rng rng(3);
    const std::size_t d = robot_dims(robot);
    for (auto _ : state) {
        Config a(d), b(d);
        for (std::size_t i = 0; i < d; ++i) {
            a[i] = rng.uniform();
            b[i] = std::clamp(a[i] + rng.uniform(-0.05, 0.05), 0.0, 1.0);
        }
        benchmark::DoNotOptimize(edge_valid(a, b, env));
    }
}
BENCHMARK(BM_EdgeValid)->Arg(2)->Arg(4);

void BM_RrtStar10k(benchmark::State& state) {
    const auto robot = state.range(0) == 2 ? RobotKind::Point2 : RobotKind::Arm4;
    const Environment env = generate_environment(5, robot, 0.3);
    const auto pair = sample_problem_pairs(env, 1, 6).front();
    PlannerRun run;
    run.env = &env;
    run.q_init = pair.first;
    run.q_target = pair.second;
    run.params.record_time = false;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        UniformSampler s(env.dims(), ++seed);
        benchmark::DoNotOptimize(plan(run, s).cost);
    }
}
BENCHMARK(BM_RrtStar10k)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
