#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "flowplan/bench.hpp"
#include "flowplan/stats.hpp"
#include "test_support.hpp"

using namespace flowplan;
using namespace flowplan::testing;

namespace {

ExperimentSpec tiny_spec() {
    ExperimentSpec s;
    s.n_envs = 2;
    s.pairs_per_env = 1;
    s.repeats = 2;
    s.budget = 400;
    s.planners = {PlannerKind::RRTStar, PlannerKind::BiRRTStar};
    s.samplers = {SamplerKind::Uniform};
    s.params.record_time = false;
    s.seed = 3;
    return s;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Bench, EveryCellSeesTheSameProblems) {
    const ExperimentResult r = run_experiment(tiny_spec());
    ASSERT_EQ(r.problems.size(), 4u);
    ASSERT_EQ(r.runs.size(), 8u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(r.runs[i].problem, i);
        EXPECT_EQ(r.runs[4 + i].problem, i);
        EXPECT_EQ(r.runs[i].planner, PlannerKind::RRTStar);
        EXPECT_EQ(r.runs[4 + i].planner, PlannerKind::BiRRTStar);
    }
    // Repeats share the endpoints but not the seed.
    EXPECT_EQ(r.problems[0].q_init, r.problems[1].q_init);
    EXPECT_NE(r.problems[0].seed, r.problems[1].seed);
}

TEST(Bench, AggregationRecountsRuns) {
    const ExperimentResult r = run_experiment(tiny_spec());
    ASSERT_EQ(r.summary.size(), 2u);
    for (const auto& cell : r.summary) {
        std::vector<double> totals;
        for (const auto& run : r.runs)
            if (run.planner == cell.planner) totals.push_back(static_cast<double>(run.metrics.final.total_samples));
        EXPECT_DOUBLE_EQ(cell.samples_total_mean, mean(totals));
        EXPECT_DOUBLE_EQ(cell.samples_total_std, stddev(totals));
    }
    std::size_t rows = 0;
    for (const auto& row : r.aggregate) {
        if (row.planner != PlannerKind::RRTStar) continue;
        std::vector<double> io;
        for (std::size_t i = 0; i < 4; ++i)
            io.push_back(static_cast<double>(r.runs[i].metrics.rows[rows].invalid_obstacles));
        EXPECT_DOUBLE_EQ(row.invobs_mean, mean(io));
        EXPECT_DOUBLE_EQ(row.invobs_ci95, ci95_half_width(io));
        EXPECT_EQ(row.nodes, 100 * (rows + 1));
        ++rows;
    }
    EXPECT_EQ(rows, 4u);
}

TEST(Bench, OutputsAreDeterministic) {
    const auto d1 = temp_dir("bench1"), d2 = temp_dir("bench2");
    const ExperimentResult a = run_experiment(tiny_spec());
    write_experiment(a, d1);
    emit_plots(a, d1);
    const ExperimentResult b = run_experiment(tiny_spec());
    write_experiment(b, d2);
    emit_plots(b, d2);
    for (const char* f : {"aggregate.csv", "summary.csv", "problems.csv", "cost.svg", "invalid_connections.svg",
                          "invalid_obstacles.svg", "time.svg", "plot_data.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(d1 / f)) << f;
        EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
    }
    EXPECT_EQ(slurp(d1 / "aggregate.csv").substr(0, 40), "planner,sampler,nodes,cost_mean,cost_ci9");
    EXPECT_TRUE(std::filesystem::exists(d1 / "runs" / "rrtstar_uniform_e0_p0_r1.csv"));
}

TEST(Bench, CostSeriesStartsAtFirstFiniteCheckpoint) {
    ExperimentResult r;
    RunRecord run;
    for (std::size_t k = 1; k <= 4; ++k) {
        MetricsRow m;
        m.nodes = 100 * k;
        m.best_cost = k < 3 ? kInfiniteCost : 1.0 / static_cast<double>(k);
        run.metrics.rows.push_back(m);
    }
    run.metrics.final = run.metrics.rows.back();
    r.runs = {run};
    r.aggregate = aggregate_runs(r.runs);
    EXPECT_EQ(aggregate_csv(r.aggregate).find("100,inf,inf") != std::string::npos, true);
    const auto dir = temp_dir("plots");
    emit_plots(r, dir);
    const std::string svg = slurp(dir / "cost.svg");
    // Only the two finite checkpoints become polyline vertices; a single run has a zero-width band.
    const auto line = svg.substr(svg.find("<polyline"));
    EXPECT_EQ(std::count(line.begin(), line.begin() + static_cast<std::ptrdiff_t>(line.find("/>")), ','), 2);
}

TEST(Bench, FlowCellRequiresModel) {
    ExperimentSpec s = tiny_spec();
    s.samplers = {SamplerKind::Flow};
    EXPECT_THROW(run_experiment(s), std::invalid_argument);
}

TEST(Bench, FlowCellRuns) {
    ExperimentSpec s = tiny_spec();
    s.planners = {PlannerKind::RRTStar};
    s.samplers = {SamplerKind::Uniform, SamplerKind::Flow};
    s.n_envs = 1;
    s.repeats = 1;
    s.model = std::make_shared<const FlowModel>(FlowLayout::for_robot(RobotKind::Point2), 1);
    const ExperimentResult r = run_experiment(s);
    ASSERT_EQ(r.summary.size(), 2u);
    EXPECT_EQ(r.summary[1].sampler, SamplerKind::Flow);
}

TEST(Bench, HeldOutSeedsAreDisjointFromTraining) {
    auto model = std::make_shared<FlowModel>(FlowLayout::for_robot(RobotKind::Point2), 1);
    model->metadata()["dataset_seed"] = "3";
    model->metadata()["environments"] = "50";
    ExperimentSpec s = tiny_spec();
    s.model = model;
    EXPECT_NO_THROW(check_disjoint_from_training(s));
}

TEST(Bench, GalleryPanels) {
    const Environment env = generate_environment(2, RobotKind::Arm4, 0.2);
    const auto pairs = sample_problem_pairs(env, 1, 1);
    const FlowModel m = random_model(FlowLayout::for_robot(RobotKind::Arm4), 3, 0.2);
    const auto panels = conditioning_gallery(m, env, pairs[0].first, pairs[0].second, 100, 4);
    ASSERT_EQ(panels.size(), 5u);
    const std::vector<std::string> names{"full", "init_only", "target_only", "workspace_only", "uniform"};
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(panels[i].name, names[i]);
        EXPECT_EQ(panels[i].configs.size(), 100u);
    }
    const auto dir = temp_dir("gallery");
    emit_conditioning_gallery(panels, env, pairs[0].first, pairs[0].second, dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "gallery.svg"));
    EXPECT_TRUE(std::filesystem::exists(dir / "gallery_workspace_only.csv"));
}

TEST(Bench, UniformGalleryPanelPassesKs) {
    const Environment env = generate_environment(2, RobotKind::Point2, 0.2);
    const FlowModel m(FlowLayout::for_robot(RobotKind::Point2), 1);
    const auto pairs = sample_problem_pairs(env, 1, 1);
    const auto panels = conditioning_gallery(m, env, pairs[0].first, pairs[0].second, 10000, 5);
    for (std::size_t j = 0; j < 2; ++j) {
        std::vector<double> xs;
        for (const auto& q : panels[4].configs) xs.push_back(q[j]);
        EXPECT_GT(ks_test_uniform(xs).p_value, 0.01);
    }
    const auto v = coordinate_variance(panels[4].configs);
    EXPECT_NEAR(v[0], 1.0 / 12.0, 0.005);
}
