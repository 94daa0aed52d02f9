#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowplan/env.hpp"
#include "flowplan/flow.hpp"
#include "flowplan/planner.hpp"

namespace flowplan {

enum class Split { Train, Validation };

inline constexpr std::size_t kMaxWaypoints = 12;
inline constexpr double kMinEndpointSeparation = 0.05;
inline constexpr double kDefaultObsRatioMin = 0.2;
inline constexpr double kDefaultObsRatioMax = 0.4;

/// Intermediate configurations of one expert solution path.
struct Demonstration {
    std::size_t env_id = 0;
    Config q_init;
    Config q_target;
    std::vector<Config> waypoints;  // endpoints excluded
    double path_cost = 0.0;
    Split split = Split::Train;

    /// q_init, waypoints..., q_target
    std::vector<Config> full_path() const;
    friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

struct DatasetOptions {
    std::size_t n_envs = 20;
    std::size_t pairs_per_env = 30;
    std::size_t budget = 10000;
    double obs_ratio_min = kDefaultObsRatioMin;
    double obs_ratio_max = kDefaultObsRatioMax;
    std::size_t jobs = 1;
    PlannerParams planner;
};

struct Dataset {
    RobotKind robot = RobotKind::Point2;
    std::uint64_t seed = 0;
    DatasetOptions options;
    std::vector<Environment> environments;
    std::vector<Demonstration> demonstrations;
    std::size_t failed_pairs = 0;

    WorkspaceEncoding encoding(std::size_t env_id) const { return encode_workspace(environments.at(env_id)); }
};

/// Expert run (uniform RRT*) from q_init to q_target; nullopt when no solution is found.
std::optional<Demonstration> collect_demonstration(const Environment& env, const Config& q_init,
                                                   const Config& q_target, std::size_t budget, std::uint64_t seed,
                                                   const PlannerParams& params = {});

/// Keep at most `max_points` interior path nodes, spread uniformly along arclength,
/// re-inserting dropped nodes wherever a shortcut would not be collision free.
std::vector<Config> sparsify_path(const std::vector<Config>& path, const Environment& env,
                                  std::size_t max_points = kMaxWaypoints,
                                  double resolution = kCollisionResolution);

/// Seed of the i-th environment generated from a dataset/benchmark seed.
std::uint64_t environment_seed(std::uint64_t seed, std::size_t index, bool held_out);
/// Obstacle ratio drawn for the i-th environment.
double environment_ratio(std::uint64_t seed, std::size_t index, bool held_out, double lo, double hi);

/// Random collision-free (q_init, q_target) pairs for one environment.
std::vector<std::pair<Config, Config>> sample_problem_pairs(const Environment& env, std::size_t count,
                                                            std::uint64_t seed);

/// Generate environments and demonstrations; failed pairs are dropped.
/// Throws GenerationError if more than 90% of pairs fail.
Dataset build_dataset(RobotKind robot, std::uint64_t seed, const DatasetOptions& options = {});

/// Flattened training rows: q (N x D) and context (N x C), one row per waypoint.
struct TrainingRows {
    Matrix q;
    Matrix ctx;
    std::size_t size() const noexcept { return static_cast<std::size_t>(q.rows()); }
};

TrainingRows training_rows(const Dataset& dataset, std::optional<Split> split = std::nullopt);

std::string dataset_to_jsonl(const Dataset& dataset);
Dataset dataset_from_jsonl(std::string_view text);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace flowplan
