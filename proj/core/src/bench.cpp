#include "flowplan/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "flowplan/random.hpp"
#include "flowplan/stats.hpp"
#include "io_util.hpp"
#include "parallel.hpp"

namespace flowplan {

namespace {

enum : std::uint64_t { kTagProblems = 0xB0, kTagRun = 0xB1, kTagFlow = 0xB3, kTagCoin = 0xB4 };

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

double mean_or_inf(const std::vector<double>& xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return kInfiniteCost;
    return mean(xs);
}

double ci_or_inf(const std::vector<double>& xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return kInfiniteCost;
    return ci95_half_width(xs);
}

std::unique_ptr<Sampler> make_sampler(const ExperimentSpec& spec, SamplerKind kind, const RowVector& ctx,
                                      std::uint64_t seed) {
    const std::size_t dim = robot_dims(spec.robot);
    if (kind == SamplerKind::Uniform) return std::make_unique<UniformSampler>(dim, seed);
    auto flow = std::make_unique<FlowSampler>(spec.model, ctx, derive_seed(seed, {kTagFlow}));
    return std::make_unique<MixtureSampler>(std::move(flow), spec.epsilon, derive_seed(seed, {kTagCoin}));
}

std::string cell_name(PlannerKind p, SamplerKind s) { return std::string(to_string(p)) + "_" + std::string(to_string(s)); }

template <class T>
std::map<std::pair<PlannerKind, SamplerKind>, std::vector<const RunRecord*>> group(const T& runs) {
    std::map<std::pair<PlannerKind, SamplerKind>, std::vector<const RunRecord*>> cells;
    for (const auto& r : runs) cells[{r.planner, r.sampler}].push_back(&r);
    return cells;
}

}  // namespace

std::string_view to_string(SamplerKind kind) noexcept { return kind == SamplerKind::Uniform ? "uniform" : "flow"; }

SamplerKind parse_sampler(std::string_view name) {
    if (name == "uniform") return SamplerKind::Uniform;
    if (name == "flow") return SamplerKind::Flow;
    throw std::invalid_argument("unknown sampler '" + std::string(name) + "' (expected uniform|flow)");
}

std::vector<Environment> experiment_environments(const ExperimentSpec& spec) {
    std::vector<Environment> envs;
    for (std::size_t e = 0; e < spec.n_envs; ++e) {
        const double ratio = environment_ratio(spec.seed, e, true, spec.obs_ratio_min, spec.obs_ratio_max);
        envs.push_back(generate_environment(environment_seed(spec.seed, e, true), spec.robot, ratio));
    }
    return envs;
}

std::vector<Problem> experiment_problems(const ExperimentSpec& spec, const std::vector<Environment>& envs) {
    std::vector<Problem> problems;
    for (std::size_t e = 0; e < envs.size(); ++e) {
        const auto pairs = sample_problem_pairs(envs[e], spec.pairs_per_env, derive_seed(spec.seed, {kTagProblems, e}));
        for (std::size_t p = 0; p < pairs.size(); ++p)
            for (std::size_t r = 0; r < spec.repeats; ++r)
                problems.push_back({e, p, r, pairs[p].first, pairs[p].second, derive_seed(spec.seed, {kTagRun, e, p, r})});
    }
    return problems;
}

void check_disjoint_from_training(const ExperimentSpec& spec) {
    if (!spec.model) return;
    const auto& meta = spec.model->metadata();
    const auto seed_it = meta.find("dataset_seed");
    const auto count_it = meta.find("environments");
    if (seed_it == meta.end() || count_it == meta.end()) return;
    const std::uint64_t train_seed = std::stoull(seed_it->second);
    const std::size_t n_train = std::stoull(count_it->second);
    std::set<std::uint64_t> used;
    for (std::size_t i = 0; i < n_train; ++i) used.insert(environment_seed(train_seed, i, false));
    for (std::size_t e = 0; e < spec.n_envs; ++e)
        if (used.count(environment_seed(spec.seed, e, true)))
            throw std::invalid_argument("bench: held-out environment " + std::to_string(e) +
                                        " coincides with a training environment; choose another --seed");
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    if (spec.repeats == 0 || spec.n_envs == 0 || spec.pairs_per_env == 0)
        throw std::invalid_argument("bench: environment, pair and repeat counts must be positive");
    if (spec.planners.empty() || spec.samplers.empty()) throw std::invalid_argument("bench: nothing to run");
    const bool needs_flow = std::count(spec.samplers.begin(), spec.samplers.end(), SamplerKind::Flow) > 0;
    if (needs_flow && !spec.model) throw std::invalid_argument("bench: flow sampler requires a checkpoint");
    if (needs_flow && static_cast<std::size_t>(spec.model->dim()) != robot_dims(spec.robot))
        throw std::invalid_argument("bench: checkpoint dimension does not match the robot");
    check_disjoint_from_training(spec);

    ExperimentResult result;
    result.environments = experiment_environments(spec);
    result.problems = experiment_problems(spec, result.environments);

    std::vector<RowVector> contexts;
    if (needs_flow) {
        std::vector<WorkspaceEncoding> enc;
        for (const auto& env : result.environments) enc.push_back(encode_workspace(env));
        for (const auto& p : result.problems)
            contexts.push_back(context_vector({enc[p.env_id], p.q_init, p.q_target}, robot_dims(spec.robot)));
    }

    for (auto planner : spec.planners)
        for (auto sampler : spec.samplers)
            for (std::size_t i = 0; i < result.problems.size(); ++i) result.runs.push_back({planner, sampler, i, {}, false});

    detail::parallel_for(result.runs.size(), spec.jobs, [&](std::size_t i) {
        RunRecord& rec = result.runs[i];
        const Problem& p = result.problems[rec.problem];
        PlannerRun run;
        run.env = &result.environments[p.env_id];
        run.q_init = p.q_init;
        run.q_target = p.q_target;
        run.budget = spec.budget;
        run.kind = rec.planner;
        run.params = spec.params;
        auto sampler = make_sampler(spec, rec.sampler, needs_flow ? contexts[rec.problem] : RowVector(), p.seed);
        const PlanResult out = plan(run, *sampler);
        rec.metrics = out.metrics;
        rec.solved = out.trajectory.has_value();
    });

    result.aggregate = aggregate_runs(result.runs);
    result.summary = summarize_runs(result.runs);
    return result;
}

std::vector<AggregateRow> aggregate_runs(const std::vector<RunRecord>& runs) {
    std::vector<AggregateRow> out;
    for (const auto& [key, cell] : group(runs)) {
        std::size_t checkpoints = cell.front()->metrics.rows.size();
        std::vector<double> totals;
        for (const auto* r : cell) {
            checkpoints = std::min(checkpoints, r->metrics.rows.size());
            totals.push_back(static_cast<double>(r->metrics.final.total_samples));
        }
        const double tmean = mean(totals), tstd = stddev(totals);
        for (std::size_t k = 0; k < checkpoints; ++k) {
            std::vector<double> cost, ic, io, t;
            for (const auto* r : cell) {
                const auto& m = r->metrics.rows[k];
                cost.push_back(m.best_cost);
                ic.push_back(static_cast<double>(m.invalid_connections));
                io.push_back(static_cast<double>(m.invalid_obstacles));
                t.push_back(m.elapsed_seconds);
            }
            AggregateRow row;
            row.planner = key.first;
            row.sampler = key.second;
            row.nodes = cell.front()->metrics.rows[k].nodes;
            row.cost_mean = mean_or_inf(cost);
            row.cost_ci95 = ci_or_inf(cost);
            row.invconn_mean = mean(ic);
            row.invconn_ci95 = ci95_half_width(ic);
            row.invobs_mean = mean(io);
            row.invobs_ci95 = ci95_half_width(io);
            row.time_mean = mean(t);
            row.time_ci95 = ci95_half_width(t);
            row.samples_total_mean = tmean;
            row.samples_total_std = tstd;
            out.push_back(row);
        }
    }
    return out;
}

std::vector<CellSummary> summarize_runs(const std::vector<RunRecord>& runs) {
    std::vector<CellSummary> out;
    for (const auto& [key, cell] : group(runs)) {
        CellSummary s;
        s.planner = key.first;
        s.sampler = key.second;
        s.runs = cell.size();
        std::vector<double> totals, first, final_cost, io, ic;
        for (const auto* r : cell) {
            totals.push_back(static_cast<double>(r->metrics.final.total_samples));
            io.push_back(static_cast<double>(r->metrics.final.invalid_obstacles));
            ic.push_back(static_cast<double>(r->metrics.final.invalid_connections));
            if (r->solved) {
                ++s.solved;
                first.push_back(r->metrics.first_solution_cost);
                final_cost.push_back(r->metrics.final.best_cost);
            }
        }
        s.samples_total_mean = mean(totals);
        s.samples_total_std = stddev(totals);
        s.invobs_mean = mean(io);
        s.invconn_mean = mean(ic);
        if (!first.empty()) {
            s.first_cost_mean = mean(first);
            s.final_cost_mean = mean(final_cost);
        }
        out.push_back(s);
    }
    return out;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream out;
    out << "planner,sampler,nodes,cost_mean,cost_ci95,invconn_mean,invconn_ci95,invobs_mean,invobs_ci95,time_mean,"
           "time_ci95,samples_total_mean,samples_total_std\n";
    for (const auto& r : rows)
        out << to_string(r.planner) << ',' << to_string(r.sampler) << ',' << r.nodes << ',' << num(r.cost_mean) << ','
            << num(r.cost_ci95) << ',' << num(r.invconn_mean) << ',' << num(r.invconn_ci95) << ','
            << num(r.invobs_mean) << ',' << num(r.invobs_ci95) << ',' << num(r.time_mean) << ','
            << num(r.time_ci95) << ',' << num(r.samples_total_mean) << ',' << num(r.samples_total_std) << '\n';
    return out.str();
}

std::string summary_csv(const std::vector<CellSummary>& cells) {
    std::ostringstream out;
    out << "planner,sampler,runs,solved,samples_total_mean,samples_total_std,first_cost_mean,final_cost_mean,"
           "invobs_mean,invconn_mean\n";
    for (const auto& c : cells)
        out << to_string(c.planner) << ',' << to_string(c.sampler) << ',' << c.runs << ',' << c.solved << ','
            << num(c.samples_total_mean) << ',' << num(c.samples_total_std) << ',' << num(c.first_cost_mean) << ','
            << num(c.final_cost_mean) << ',' << num(c.invobs_mean) << ',' << num(c.invconn_mean) << '\n';
    return out.str();
}

std::string problems_csv(const std::vector<Problem>& problems) {
    std::ostringstream out;
    out << "env_id,pair,repeat,seed,q_init,q_target\n";
    const auto cfg = [](const Config& q) {
        std::string s;
        for (std::size_t i = 0; i < q.size(); ++i) s += (i ? " " : "") + num(q[i]);
        return s;
    };
    for (const auto& p : problems)
        out << p.env_id << ',' << p.pair << ',' << p.repeat << ',' << p.seed << ',' << cfg(p.q_init) << ','
            << cfg(p.q_target) << '\n';
    return out.str();
}

void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir) {
    detail::write_file(dir / "aggregate.csv", aggregate_csv(result.aggregate));
    detail::write_file(dir / "summary.csv", summary_csv(result.summary));
    detail::write_file(dir / "problems.csv", problems_csv(result.problems));
    for (const auto& r : result.runs) {
        const Problem& p = result.problems[r.problem];
        std::ostringstream csv;
        write_metrics_csv(csv, r.metrics);
        const std::string name = cell_name(r.planner, r.sampler) + "_e" + std::to_string(p.env_id) + "_p" +
                                 std::to_string(p.pair) + "_r" + std::to_string(p.repeat) + ".csv";
        detail::write_file(dir / "runs" / name, csv.str());
    }
}

std::vector<double> coordinate_variance(const std::vector<Config>& configs) {
    if (configs.empty()) return {};
    const std::size_t d = configs.front().size();
    std::vector<double> var(d);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> xs;
        xs.reserve(configs.size());
        for (const auto& q : configs) xs.push_back(q[j]);
        const double s = stddev(xs);
        var[j] = s * s;
    }
    return var;
}

std::vector<GalleryPanel> conditioning_gallery(const FlowModel& model, const Environment& env, const Config& q_init,
                                               const Config& q_target, std::size_t n, std::uint64_t seed) {
    const std::size_t dim = env.dims();
    if (static_cast<std::size_t>(model.dim()) != dim)
        throw std::invalid_argument("gallery: model dimension does not match the robot");
    const WorkspaceEncoding enc = encode_workspace(env);
    std::vector<GalleryPanel> panels;
    panels.push_back({"full", model.sample(context_vector({enc, q_init, q_target}, dim), n, derive_seed(seed, {1}))});
    panels.push_back({"init_only", model.sample(context_vector({enc, q_init, std::nullopt}, dim), n, derive_seed(seed, {2}))});
    panels.push_back(
        {"target_only", model.sample(context_vector({enc, std::nullopt, q_target}, dim), n, derive_seed(seed, {3}))});
    panels.push_back(
        {"workspace_only", model.sample(context_vector({enc, std::nullopt, std::nullopt}, dim), n, derive_seed(seed, {4}))});
    UniformSampler uniform(dim, derive_seed(seed, {5}));
    GalleryPanel u{"uniform", {}};
    for (std::size_t i = 0; i < n; ++i) u.configs.push_back(uniform.next());
    panels.push_back(std::move(u));
    return panels;
}

}  // namespace flowplan
