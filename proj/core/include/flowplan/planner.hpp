#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowplan/config.hpp"
#include "flowplan/env.hpp"
#include "flowplan/kdtree.hpp"
#include "flowplan/sampler.hpp"

namespace flowplan {

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

struct PlannerParams {
    double step = 0.05;   // steering distance, also the goal-region radius
    double gamma = 3.0;   // rewiring-radius constant
    double resolution = kCollisionResolution;
    std::size_t checkpoint_interval = 100;
    bool record_time = true;
};

/// Search tree with cost-to-come bookkeeping and an incremental spatial index.
class RoadmapTree {
public:
    static constexpr std::int64_t kNoParent = -1;

    explicit RoadmapTree(const Config& root);

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t dim() const noexcept { return index_.dim(); }
    const Config& node(std::size_t i) const noexcept { return nodes_[i]; }
    std::int64_t parent(std::size_t i) const noexcept { return parents_[i]; }
    double cost(std::size_t i) const noexcept { return costs_[i]; }
    const std::vector<std::uint32_t>& children(std::size_t i) const noexcept { return children_[i]; }
    const KdTree& index() const noexcept { return index_; }

    std::size_t add(const Config& q, std::size_t parent);
    /// Re-parent `i` and refresh costs of its whole subtree.
    void reparent(std::size_t i, std::size_t new_parent);
    /// Node sequence from the root to `i`.
    std::vector<Config> path_to(std::size_t i) const;

private:
    std::vector<Config> nodes_;
    std::vector<std::int64_t> parents_;
    std::vector<double> costs_;
    std::vector<std::vector<std::uint32_t>> children_;
    KdTree index_;
};

/// Throws std::logic_error on an empty tree; ties go to the lowest index.
std::size_t nearest(const RoadmapTree& tree, const Config& q);

/// `toward` if within `step`, else the point at distance `step` along the segment.
Config steer(const Config& from, const Config& toward, double step);

enum class StepOutcome { NodeAdded, InvalidObstacle, InvalidConnection };

struct StepResult {
    StepOutcome outcome;
    std::size_t node = 0;  // valid when NodeAdded
};

/// Insert an already drawn sample: validity check, steer from nearest, edge
/// check, choose the cheapest parent within the rewiring radius, rewire.
StepResult extend_tree(RoadmapTree& tree, const Config& sample, const Environment& env, const PlannerParams& params);

/// Draw one sample and extend.
StepResult rrt_star_step(RoadmapTree& tree, Sampler& sampler, const Environment& env, const PlannerParams& params);

double rewiring_radius(std::size_t n, std::size_t dim, const PlannerParams& params) noexcept;

enum class PlannerKind { RRTStar, BiRRTStar, InformedRRTStar };
std::string_view to_string(PlannerKind kind) noexcept;
PlannerKind parse_planner(std::string_view name);

struct MetricsRow {
    std::size_t nodes = 0;
    double best_cost = kInfiniteCost;
    std::size_t invalid_connections = 0;
    std::size_t invalid_obstacles = 0;
    std::size_t total_samples = 0;
    double elapsed_seconds = 0.0;
};

struct RunMetrics {
    std::vector<MetricsRow> rows;
    double first_solution_cost = kInfiniteCost;
    std::size_t first_solution_nodes = 0;
    std::size_t informed_rejections = 0;
    MetricsRow final;
};

struct PlannerRun {
    const Environment* env = nullptr;
    Config q_init;
    Config q_target;
    std::size_t budget = 10000;
    PlannerKind kind = PlannerKind::RRTStar;
    PlannerParams params;
};

struct PlanResult {
    std::optional<std::vector<Config>> trajectory;
    double cost = kInfiniteCost;
    RunMetrics metrics;
};

/// Grow until `budget` nodes are accepted, tracking the best solution and
/// recording a metrics row every checkpoint interval.
PlanResult plan(const PlannerRun& run, Sampler& sampler);

/// Sum of segment lengths.
double path_cost(const std::vector<Config>& path);

/// CSV header plus one row per checkpoint; infinite cost is written as "inf".
void write_metrics_csv(std::ostream& out, const RunMetrics& metrics);
std::string format_cost(double cost);

}  // namespace flowplan
