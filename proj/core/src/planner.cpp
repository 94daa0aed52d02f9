#include "flowplan/planner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace flowplan {

RoadmapTree::RoadmapTree(const Config& root) : index_(root.size()) {
    nodes_.push_back(root);
    parents_.push_back(kNoParent);
    costs_.push_back(0.0);
    children_.emplace_back();
    index_.insert(root);
}

std::size_t RoadmapTree::add(const Config& q, std::size_t parent) {
    const std::size_t i = nodes_.size();
    nodes_.push_back(q);
    parents_.push_back(static_cast<std::int64_t>(parent));
    costs_.push_back(costs_[parent] + distance(nodes_[parent], q));
    children_.emplace_back();
    children_[parent].push_back(static_cast<std::uint32_t>(i));
    index_.insert(q);
    return i;
}

void RoadmapTree::reparent(std::size_t i, std::size_t new_parent) {
    if (parents_[i] == kNoParent) throw std::logic_error("RoadmapTree::reparent: cannot re-parent a root");
    auto& siblings = children_[static_cast<std::size_t>(parents_[i])];
    siblings.erase(std::find(siblings.begin(), siblings.end(), static_cast<std::uint32_t>(i)));
    parents_[i] = static_cast<std::int64_t>(new_parent);
    children_[new_parent].push_back(static_cast<std::uint32_t>(i));
    costs_[i] = costs_[new_parent] + distance(nodes_[new_parent], nodes_[i]);

    std::vector<std::uint32_t> stack(children_[i].begin(), children_[i].end());
    while (!stack.empty()) {
        const std::uint32_t c = stack.back();
        stack.pop_back();
        const auto p = static_cast<std::size_t>(parents_[c]);
        costs_[c] = costs_[p] + distance(nodes_[p], nodes_[c]);
        stack.insert(stack.end(), children_[c].begin(), children_[c].end());
    }
}

std::vector<Config> RoadmapTree::path_to(std::size_t i) const {
    std::vector<Config> path;
    for (std::int64_t n = static_cast<std::int64_t>(i); n != kNoParent; n = parents_[static_cast<std::size_t>(n)])
        path.push_back(nodes_[static_cast<std::size_t>(n)]);
    std::reverse(path.begin(), path.end());
    return path;
}

std::size_t nearest(const RoadmapTree& tree, const Config& q) { return tree.index().nearest(q); }

Config steer(const Config& from, const Config& toward, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("steer: step must be positive");
    const double d = distance(from, toward);
    if (d <= step) return toward;
    return lerp(from, toward, step / d);
}

double rewiring_radius(std::size_t n, std::size_t dim, const PlannerParams& params) noexcept {
    if (n < 2) return params.step;
    const double nd = static_cast<double>(n);
    return std::min(params.gamma * std::pow(std::log(nd) / nd, 1.0 / static_cast<double>(dim)), params.step);
}

StepResult extend_tree(RoadmapTree& tree, const Config& sample, const Environment& env, const PlannerParams& params) {
    if (!is_valid(sample, env)) return {StepOutcome::InvalidObstacle};

    const std::size_t nn = nearest(tree, sample);
    const Config q_new = steer(tree.node(nn), sample, params.step);
    if (!edge_valid(tree.node(nn), q_new, env, params.resolution)) return {StepOutcome::InvalidConnection};

    thread_local std::vector<std::size_t> near;
    thread_local std::vector<std::pair<double, std::size_t>> candidates;
    const double radius = rewiring_radius(tree.size() + 1, tree.dim(), params);
    tree.index().within(q_new, radius, near);

    std::size_t parent = nn;
    double best = tree.cost(nn) + distance(tree.node(nn), q_new);
    candidates.clear();
    for (std::size_t i : near) {
        if (i == nn) continue;
        const double c = tree.cost(i) + distance(tree.node(i), q_new);
        if (c < best) candidates.emplace_back(c, i);
    }
    std::sort(candidates.begin(), candidates.end());
    for (const auto& [c, i] : candidates) {
        if (edge_valid(tree.node(i), q_new, env, params.resolution)) {
            parent = i;
            break;
        }
    }

    const std::size_t added = tree.add(q_new, parent);
    for (std::size_t i : near) {
        if (i == parent) continue;
        const double c = tree.cost(added) + distance(q_new, tree.node(i));
        if (c < tree.cost(i) && edge_valid(q_new, tree.node(i), env, params.resolution)) tree.reparent(i, added);
    }
    return {StepOutcome::NodeAdded, added};
}

StepResult rrt_star_step(RoadmapTree& tree, Sampler& sampler, const Environment& env, const PlannerParams& params) {
    return extend_tree(tree, sampler.next(), env, params);
}

std::string_view to_string(PlannerKind kind) noexcept {
    switch (kind) {
        case PlannerKind::RRTStar: return "rrtstar";
        case PlannerKind::BiRRTStar: return "birrtstar";
        case PlannerKind::InformedRRTStar: return "informedrrtstar";
    }
    return "?";
}

PlannerKind parse_planner(std::string_view name) {
    if (name == "rrtstar") return PlannerKind::RRTStar;
    if (name == "birrtstar") return PlannerKind::BiRRTStar;
    if (name == "informedrrtstar") return PlannerKind::InformedRRTStar;
    throw std::invalid_argument("unknown planner '" + std::string(name) + "' (expected rrtstar|birrtstar|informedrrtstar)");
}

double path_cost(const std::vector<Config>& path) {
    double c = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) c += distance(path[i - 1], path[i]);
    return c;
}

namespace {

class RunClock {
public:
    explicit RunClock(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        if (!enabled_) return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    bool enabled_;
    std::chrono::steady_clock::time_point start_;
};

struct Accounting {
    MetricsRow row;
    RunMetrics metrics;

    void record(StepOutcome outcome) {
        ++row.total_samples;
        switch (outcome) {
            case StepOutcome::NodeAdded: ++row.nodes; break;
            case StepOutcome::InvalidObstacle: ++row.invalid_obstacles; break;
            case StepOutcome::InvalidConnection: ++row.invalid_connections; break;
        }
    }

    void update_best(double cost) {
        // Costs only decrease under rewiring; the series stays monotone.
        row.best_cost = std::min(row.best_cost, cost);
        if (std::isfinite(row.best_cost) && !std::isfinite(metrics.first_solution_cost)) {
            metrics.first_solution_cost = row.best_cost;
            metrics.first_solution_nodes = row.nodes;
        }
    }

    void checkpoint(StepOutcome outcome, std::size_t interval, const RunClock& clock) {
        if (outcome == StepOutcome::NodeAdded && interval > 0 && row.nodes % interval == 0) {
            row.elapsed_seconds = clock.seconds();
            metrics.rows.push_back(row);
        }
    }

    void finish(const RunClock& clock) {
        row.elapsed_seconds = clock.seconds();
        if (metrics.rows.empty() || metrics.rows.back().nodes != row.nodes) metrics.rows.push_back(row);
        metrics.final = row;
    }
};

PlanResult plan_unidirectional(const PlannerRun& run, Sampler& sampler, const RunClock& clock) {
    const Environment& env = *run.env;
    const auto& params = run.params;
    RoadmapTree tree(run.q_init);
    std::vector<std::size_t> goal_nodes;

    std::optional<InformedSampler> informed;
    if (run.kind == PlannerKind::InformedRRTStar) informed.emplace(sampler, run.q_init, run.q_target);
    Sampler& source = informed ? static_cast<Sampler&>(*informed) : sampler;

    Accounting acc;
    std::size_t best_node = 0;
    while (acc.row.nodes < run.budget) {
        if (informed) informed->set_bound(acc.row.best_cost);
        const StepResult step = extend_tree(tree, source.next(), env, params);
        acc.record(step.outcome);
        if (step.outcome == StepOutcome::NodeAdded) {
            const Config& q = tree.node(step.node);
            if (distance(q, run.q_target) <= params.step && edge_valid(q, run.q_target, env, params.resolution))
                goal_nodes.push_back(step.node);
        }
        for (std::size_t g : goal_nodes) {
            const double c = tree.cost(g) + distance(tree.node(g), run.q_target);
            if (c < acc.row.best_cost) best_node = g;
            acc.update_best(c);
        }
        acc.checkpoint(step.outcome, params.checkpoint_interval, clock);
    }
    acc.finish(clock);

    PlanResult result;
    if (informed) acc.metrics.informed_rejections = informed->rejections();
    if (std::isfinite(acc.row.best_cost)) {
        auto path = tree.path_to(best_node);
        path.push_back(run.q_target);
        result.cost = path_cost(path);
        result.trajectory = std::move(path);
    }
    result.metrics = std::move(acc.metrics);
    return result;
}

PlanResult plan_bidirectional(const PlannerRun& run, Sampler& sampler, const RunClock& clock) {
    const Environment& env = *run.env;
    const auto& params = run.params;
    RoadmapTree trees[2] = {RoadmapTree(run.q_init), RoadmapTree(run.q_target)};
    std::vector<std::pair<std::size_t, std::size_t>> bridges;  // (node in start tree, node in goal tree)

    Accounting acc;
    std::pair<std::size_t, std::size_t> best_bridge{0, 0};
    for (std::size_t t = 0; acc.row.nodes < run.budget; ++t) {
        const int k = static_cast<int>(t % 2);
        RoadmapTree& grow = trees[k];
        RoadmapTree& other = trees[1 - k];
        const StepResult step = extend_tree(grow, sampler.next(), env, params);
        acc.record(step.outcome);
        if (step.outcome == StepOutcome::NodeAdded) {
            const Config& q = grow.node(step.node);
            const std::size_t nn = nearest(other, q);
            if (distance(q, other.node(nn)) <= params.step && edge_valid(q, other.node(nn), env, params.resolution))
                bridges.push_back(k == 0 ? std::pair{step.node, nn} : std::pair{nn, step.node});
        }
        for (const auto& [a, b] : bridges) {
            const double c = trees[0].cost(a) + distance(trees[0].node(a), trees[1].node(b)) + trees[1].cost(b);
            if (c < acc.row.best_cost) best_bridge = {a, b};
            acc.update_best(c);
        }
        acc.checkpoint(step.outcome, params.checkpoint_interval, clock);
    }
    acc.finish(clock);

    PlanResult result;
    if (std::isfinite(acc.row.best_cost)) {
        auto path = trees[0].path_to(best_bridge.first);
        auto tail = trees[1].path_to(best_bridge.second);
        path.insert(path.end(), tail.rbegin(), tail.rend());
        result.cost = path_cost(path);
        result.trajectory = std::move(path);
    }
    result.metrics = std::move(acc.metrics);
    return result;
}

}  // namespace

PlanResult plan(const PlannerRun& run, Sampler& sampler) {
    if (!run.env) throw std::invalid_argument("plan: no environment");
    if (run.q_init.size() != run.env->dims() || run.q_target.size() != run.env->dims() ||
        sampler.dim() != run.env->dims())
        throw std::invalid_argument("plan: dimension mismatch between problem, sampler and robot");
    if (!is_valid(run.q_init, *run.env) || !is_valid(run.q_target, *run.env))
        throw std::invalid_argument("plan: start and target must be collision free");
    const RunClock clock(run.params.record_time);
    return run.kind == PlannerKind::BiRRTStar ? plan_bidirectional(run, sampler, clock)
                                              : plan_unidirectional(run, sampler, clock);
}

std::string format_cost(double cost) {
    if (!std::isfinite(cost)) return "inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, cost);
    return std::string(buf, res.ptr);
}

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics) {
    out << "nodes,best_cost,invalid_connections,invalid_obstacles,total_samples,elapsed_seconds\n";
    for (const auto& r : metrics.rows) {
        out << r.nodes << ',' << format_cost(r.best_cost) << ',' << r.invalid_connections << ','
            << r.invalid_obstacles << ',' << r.total_samples << ',' << format_cost(r.elapsed_seconds) << '\n';
    }
}

}  // namespace flowplan
