#include <benchmark/benchmark.h>

#include "flowplan/dataset.hpp"
#include "flowplan/flow.hpp"
#include "flowplan/trainer.hpp"

using namespace flowplan;

namespace {

FlowModel trained_like(RobotKind robot) {
    FlowModel m(FlowLayout::for_robot(robot), 1);
    Rng rng(2);
    for (auto& b : m.blocks()) b.initialize(rng, true);
    return m;
}

RowVector some_context(RobotKind robot) {
    const Environment env = generate_environment(3, robot, 0.3);
    const auto pairs = sample_problem_pairs(env, 1, 4);
    return context_vector({encode_workspace(env), pairs[0].first, pairs[0].second}, robot_dims(robot));
}

void BM_SampleBatch(benchmark::State& state) {
    const auto robot = state.range(0) == 2 ? RobotKind::Point2 : RobotKind::Arm4;
    const FlowModel m = trained_like(robot);
    const RowVector ctx = some_context(robot);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(m.sample_matrix(ctx, kFlowBatchSize, ++seed));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kFlowBatchSize));
}
BENCHMARK(BM_SampleBatch)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_LogProb(benchmark::State& state) {
    const FlowModel m = trained_like(RobotKind::Point2);
    const RowVector ctx = some_context(RobotKind::Point2);
    const Matrix q = Matrix::Constant(1024, 2, 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(m.log_prob(q, ctx));
    state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_LogProb)->Unit(benchmark::kMillisecond);

void BM_LossGradient(benchmark::State& state) {
    const FlowModel m = trained_like(RobotKind::Point2);
    const RowVector ctx = some_context(RobotKind::Point2);
    const Matrix q = Matrix::Constant(128, 2, 0.3);
    const Matrix c = ctx.replicate(128, 1);
    for (auto _ : state) benchmark::DoNotOptimize(loss(m, q, c, 1.0));
    state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_LossGradient)->Unit(benchmark::kMillisecond);

}  // namespace
