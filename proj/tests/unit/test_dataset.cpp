#include <gtest/gtest.h>

#include <numbers>

#include "flowplan/dataset.hpp"
#include "flowplan/errors.hpp"
#include "test_support.hpp"

using namespace flowplan;

namespace {

const Dataset& small_dataset() {
    static const Dataset ds = [] {
        DatasetOptions o;
        o.n_envs = 3;
        o.pairs_per_env = 4;
        o.budget = 1500;
        return build_dataset(RobotKind::Point2, 21, o);
    }();
    return ds;
}

}  // namespace

TEST(Dataset, SparsifyKeepsShortPathsWhole) {
    const Environment env(RobotKind::Point2, {}, 0, 0.0);
    std::vector<Config> path;
    for (int i = 0; i <= 5; ++i) path.push_back(Config{0.1 * i, 0.1});
    const auto w = sparsify_path(path, env);
    ASSERT_EQ(w.size(), 4u);
    EXPECT_EQ(w.front(), path[1]);
    EXPECT_EQ(w.back(), path[4]);
}

TEST(Dataset, SparsifyLimitsAndKeepsShortcutsValid) {
    const Environment env(RobotKind::Point2, {{{0.5, 0.5}, 0.2}}, 0, 0.0);
    // Detour around the disc through 41 nodes.
    std::vector<Config> path;
    for (int i = 0; i <= 40; ++i) {
        const double t = std::numbers::pi * i / 40.0;
        path.push_back(Config{0.5 - 0.25 * std::cos(t), 0.5 + 0.25 * std::sin(t)});
    }
    const auto w = sparsify_path(path, env);
    EXPECT_GE(w.size(), 2u);
    std::vector<Config> full{path.front()};
    full.insert(full.end(), w.begin(), w.end());
    full.push_back(path.back());
    for (std::size_t i = 1; i < full.size(); ++i) EXPECT_TRUE(edge_valid(full[i - 1], full[i], env));

    // Straight path: plain arclength subsampling.
    const Environment free(RobotKind::Point2, {}, 0, 0.0);
    std::vector<Config> line;
    for (int i = 0; i <= 100; ++i) line.push_back(Config{i / 100.0, 0.5});
    const auto lw = sparsify_path(line, free);
    ASSERT_EQ(lw.size(), kMaxWaypoints);
    for (std::size_t k = 0; k < lw.size(); ++k) EXPECT_NEAR(lw[k][0], (k + 1) / 13.0, 0.006);
}

TEST(Dataset, DemonstrationsAreValidPaths) {
    const Dataset& ds = small_dataset();
    EXPECT_EQ(ds.demonstrations.size() + ds.failed_pairs, 12u);
    EXPECT_GT(ds.demonstrations.size(), 6u);
    for (const auto& d : ds.demonstrations) {
        const auto path = d.full_path();
        const Environment& env = ds.environments[d.env_id];
        EXPECT_LE(d.waypoints.size(), kMaxWaypoints);
        EXPECT_GE(distance(d.q_init, d.q_target), kMinEndpointSeparation);
        for (std::size_t i = 1; i < path.size(); ++i) EXPECT_TRUE(edge_valid(path[i - 1], path[i], env));
        EXPECT_NEAR(d.path_cost, path_cost(path), 1e-12);
    }
}

TEST(Dataset, SplitsAndRows) {
    const Dataset& ds = small_dataset();
    std::size_t train_rows = 0, val_rows = 0, val_demos = 0;
    for (std::size_t i = 0; i < ds.demonstrations.size(); ++i) {
        const auto& d = ds.demonstrations[i];
        const bool val = d.split == Split::Validation;
        EXPECT_EQ(val, i % 10 == 9);
        (val ? val_rows : train_rows) += d.waypoints.size();
        val_demos += val;
    }
    const TrainingRows all = training_rows(ds);
    const TrainingRows tr = training_rows(ds, Split::Train);
    EXPECT_EQ(all.size(), train_rows + val_rows);
    EXPECT_EQ(tr.size(), train_rows);
    EXPECT_EQ(all.ctx.cols(), static_cast<Eigen::Index>(context_dim(2)));

    // First row = first waypoint of the first demonstration with its full context.
    const auto& d0 = ds.demonstrations.front();
    ASSERT_FALSE(d0.waypoints.empty());
    EXPECT_EQ(all.q(0, 0), d0.waypoints[0][0]);
    const RowVector ctx = context_vector({ds.encoding(d0.env_id), d0.q_init, d0.q_target}, 2);
    EXPECT_EQ(RowVector(all.ctx.row(0)), ctx);
}

TEST(Dataset, EnvironmentLevelSplitWithManyEnvironments) {
    DatasetOptions o;
    o.n_envs = 10;
    o.pairs_per_env = 1;
    o.budget = 300;
    const Dataset big = build_dataset(RobotKind::Point2, 5, o);
    for (const auto& d : big.demonstrations) EXPECT_EQ(d.split == Split::Validation, d.env_id == 9);
}

TEST(Dataset, StraightLineDemonstrationHasNoRows) {
    Dataset ds;
    ds.environments.emplace_back(RobotKind::Point2, std::vector<Obstacle>{}, 0, 0.0);
    Demonstration d;
    d.q_init = Config{0.1, 0.1};
    d.q_target = Config{0.2, 0.2};
    ds.demonstrations.push_back(d);
    EXPECT_EQ(training_rows(ds).size(), 0u);
}

TEST(Dataset, JsonlRoundTripAndDeterminism) {
    const Dataset& ds = small_dataset();
    const std::string text = dataset_to_jsonl(ds);
    const Dataset back = dataset_from_jsonl(text);
    EXPECT_EQ(back.environments, ds.environments);
    EXPECT_EQ(back.demonstrations, ds.demonstrations);
    EXPECT_EQ(dataset_to_jsonl(back), text);

    DatasetOptions o;
    o.n_envs = 3;
    o.pairs_per_env = 4;
    o.budget = 1500;
    o.jobs = 3;
    EXPECT_EQ(dataset_to_jsonl(build_dataset(RobotKind::Point2, 21, o)), text);
}

TEST(Dataset, CorruptJsonlIsRejected) {
    const std::string text = dataset_to_jsonl(small_dataset());
    EXPECT_THROW(dataset_from_jsonl(text.substr(text.find('\n') + 1)), FormatError);
    EXPECT_THROW(dataset_from_jsonl(text.substr(0, text.size() - 40)), FormatError);
    EXPECT_THROW(dataset_from_jsonl(""), FormatError);
    EXPECT_THROW(load_dataset("/nonexistent/ds.jsonl"), IoError);
}

TEST(Dataset, ProblemPairsAreValidAndSeparated) {
    const Environment env = generate_environment(4, RobotKind::Arm4, 0.3);
    const auto pairs = sample_problem_pairs(env, 20, 9);
    ASSERT_EQ(pairs.size(), 20u);
    for (const auto& [a, b] : pairs) {
        EXPECT_TRUE(is_valid(a, env));
        EXPECT_TRUE(is_valid(b, env));
        EXPECT_GE(distance(a, b), kMinEndpointSeparation);
    }
    EXPECT_NE(environment_seed(1, 0, false), environment_seed(1, 0, true));
}
