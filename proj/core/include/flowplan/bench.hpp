#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "flowplan/dataset.hpp"
#include "flowplan/flow.hpp"
#include "flowplan/planner.hpp"

namespace flowplan {

enum class SamplerKind { Uniform, Flow };

std::string_view to_string(SamplerKind kind) noexcept;
SamplerKind parse_sampler(std::string_view name);

struct ExperimentSpec {
    RobotKind robot = RobotKind::Point2;
    std::size_t n_envs = 10;
    std::size_t pairs_per_env = 3;
    std::size_t repeats = 3;
    std::size_t budget = 10000;
    std::vector<PlannerKind> planners = {PlannerKind::RRTStar};
    std::vector<SamplerKind> samplers = {SamplerKind::Uniform, SamplerKind::Flow};
    double epsilon = kDefaultEpsilon;
    double obs_ratio_min = kDefaultObsRatioMin;
    double obs_ratio_max = kDefaultObsRatioMax;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    PlannerParams params;
    /// Required when samplers include Flow.
    std::shared_ptr<const FlowModel> model;
};

/// One planning query shared by every planner/sampler cell.
struct Problem {
    std::size_t env_id = 0;
    std::size_t pair = 0;
    std::size_t repeat = 0;
    Config q_init;
    Config q_target;
    std::uint64_t seed = 0;
};

struct RunRecord {
    PlannerKind planner = PlannerKind::RRTStar;
    SamplerKind sampler = SamplerKind::Uniform;
    std::size_t problem = 0;  // index into ExperimentResult::problems
    RunMetrics metrics;
    bool solved = false;
};

/// Mean / 95% CI of every metric across the runs of one cell at one checkpoint.
struct AggregateRow {
    PlannerKind planner = PlannerKind::RRTStar;
    SamplerKind sampler = SamplerKind::Uniform;
    std::size_t nodes = 0;
    double cost_mean = 0.0, cost_ci95 = 0.0;
    double invconn_mean = 0.0, invconn_ci95 = 0.0;
    double invobs_mean = 0.0, invobs_ci95 = 0.0;
    double time_mean = 0.0, time_ci95 = 0.0;
    double samples_total_mean = 0.0, samples_total_std = 0.0;
};

/// Per-cell headline numbers.
struct CellSummary {
    PlannerKind planner = PlannerKind::RRTStar;
    SamplerKind sampler = SamplerKind::Uniform;
    std::size_t runs = 0;
    std::size_t solved = 0;
    double samples_total_mean = 0.0, samples_total_std = 0.0;
    double first_cost_mean = kInfiniteCost;  // over solved runs
    double final_cost_mean = kInfiniteCost;  // over solved runs
    double invobs_mean = 0.0, invconn_mean = 0.0;
};

struct ExperimentResult {
    std::vector<Environment> environments;
    std::vector<Problem> problems;
    std::vector<RunRecord> runs;  // sorted by (planner, sampler, problem)
    std::vector<AggregateRow> aggregate;
    std::vector<CellSummary> summary;
};

/// Held-out environments and problems of a spec (no planning).
std::vector<Environment> experiment_environments(const ExperimentSpec& spec);
std::vector<Problem> experiment_problems(const ExperimentSpec& spec, const std::vector<Environment>& envs);

/// Throws std::invalid_argument if any held-out environment seed was used for
/// training the model (according to its metadata).
void check_disjoint_from_training(const ExperimentSpec& spec);

ExperimentResult run_experiment(const ExperimentSpec& spec);

std::vector<AggregateRow> aggregate_runs(const std::vector<RunRecord>& runs);
std::vector<CellSummary> summarize_runs(const std::vector<RunRecord>& runs);

std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string summary_csv(const std::vector<CellSummary>& cells);
std::string problems_csv(const std::vector<Problem>& problems);

/// aggregate.csv, summary.csv, problems.csv and runs/<cell>_<problem>.csv.
void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

/// cost.svg, invalid_connections.svg, invalid_obstacles.svg, time.svg and plot_data.csv.
void emit_plots(const ExperimentResult& result, const std::filesystem::path& dir);

struct GalleryPanel {
    std::string name;
    std::vector<Config> configs;
};

/// Five panels: full conditioning, init only, target only, workspace only, uniform.
std::vector<GalleryPanel> conditioning_gallery(const FlowModel& model, const Environment& env, const Config& q_init,
                                               const Config& q_target, std::size_t n, std::uint64_t seed);

/// Per-coordinate sample variance.
std::vector<double> coordinate_variance(const std::vector<Config>& configs);

/// gallery.svg (workspace overlays, arm poses via forward kinematics) and one CSV per panel.
void emit_conditioning_gallery(const std::vector<GalleryPanel>& panels, const Environment& env, const Config& q_init,
                               const Config& q_target, const std::filesystem::path& dir);

}  // namespace flowplan
