#include "flowplan_tools/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "flowplan/bench.hpp"
#include "flowplan/dataset.hpp"
#include "flowplan/errors.hpp"
#include "flowplan/flow.hpp"
#include "flowplan/planner.hpp"
#include "flowplan/random.hpp"
#include "flowplan/sampler.hpp"
#include "flowplan/trainer.hpp"

namespace flowplan::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::size_t kPaperEnvs = 100;
constexpr std::size_t kPaperPairs = 200;
constexpr std::size_t kPaperEpochs = 1500;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::uint64_t seed = 1;
    std::string robot = "point2";
    std::size_t envs = 0;
    std::size_t pairs = 0;
    std::size_t repeats = 3;
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    double prior_variance = 1.0;
    double epsilon = kDefaultEpsilon;
    std::size_t budget = 10000;
    std::string checkpoint;
    std::string dataset;
    std::string env;
    std::string out_dir;
    std::size_t jobs = 0;
    bool paper_scale = false;
    bool no_timing = false;
    double obs_ratio = 0.3;
    double obs_min = kDefaultObsRatioMin;
    double obs_max = kDefaultObsRatioMax;
    std::string planner = "rrtstar";
    std::vector<std::string> planners;
    std::vector<std::string> samplers;
    std::vector<double> start;
    std::vector<double> goal;
    bool empty = false;
    std::size_t n = 100;
};

RobotKind robot_of(const Options& o) {
    try {
        return parse_robot(o.robot);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--robot: ") + e.what());
    }
}

Config config_of(const std::vector<double>& v, RobotKind robot, const char* flag) {
    if (v.size() != robot_dims(robot))
        throw UsageError(std::string(flag) + ": expected " + std::to_string(robot_dims(robot)) + " comma-separated values");
    for (double x : v)
        if (!(x >= 0.0 && x <= 1.0)) throw UsageError(std::string(flag) + ": coordinates must lie in [0, 1]");
    return Config(std::span<const double>(v));
}

std::shared_ptr<const FlowModel> load_model(const std::string& path, RobotKind robot) {
    auto model = std::make_shared<const FlowModel>(load_flow(path));
    if (static_cast<std::size_t>(model->dim()) != robot_dims(robot))
        throw FormatError(path + ": checkpoint has dimension " + std::to_string(model->dim()) + " but --robot " +
                          std::string(to_string(robot)) + " needs " + std::to_string(robot_dims(robot)));
    return model;
}

void add_common(CLI::App* app, Options& o) {
    app->add_option("--seed", o.seed, "Seed for all randomness");
    app->add_option("--robot", o.robot, "Robot kind: point2 | arm4")->check(CLI::IsMember({"point2", "arm4"}));
}

void add_out_dir(CLI::App* app, Options& o, bool required) {
    auto* opt = app->add_option("--out-dir", o.out_dir, "Output directory");
    if (required) opt->required();
}

void add_jobs(CLI::App* app, Options& o) {
    app->add_option("--jobs", o.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
}

void add_endpoints(CLI::App* app, Options& o) {
    app->add_option("--start", o.start, "Start configuration, comma separated")->delimiter(',');
    app->add_option("--goal", o.goal, "Target configuration, comma separated")->delimiter(',');
}

std::pair<Config, Config> endpoints(const Options& o, const Environment& env) {
    const RobotKind robot = env.robot();
    if (o.start.empty() != o.goal.empty()) throw UsageError("--start and --goal must be given together");
    if (o.start.empty()) return sample_problem_pairs(env, 1, derive_seed(o.seed, {0x51})).front();
    Config a = config_of(o.start, robot, "--start"), b = config_of(o.goal, robot, "--goal");
    if (!is_valid(a, env)) throw UsageError("--start: configuration is in collision");
    if (!is_valid(b, env)) throw UsageError("--goal: configuration is in collision");
    return {a, b};
}

Environment environment_of(const Options& o, RobotKind robot) {
    if (!o.env.empty()) {
        Environment env = load_environment(o.env);
        if (env.robot() != robot) throw FormatError(o.env + ": environment robot does not match --robot");
        return env;
    }
    if (o.empty) return Environment(robot, {}, o.seed, 0.0);
    return generate_environment(environment_seed(o.seed, 0, true), robot, o.obs_ratio);
}

std::string format_config(const Config& q) {
    std::ostringstream s;
    s << std::setprecision(10);
    for (std::size_t i = 0; i < q.size(); ++i) s << (i ? "," : "") << q[i];
    return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) throw IoError(path.string(), "cannot write file");
}

int cmd_gen_env(const Options& o, std::ostream& out) {
    const RobotKind robot = robot_of(o);
    const std::size_t n = o.envs ? o.envs : 1;
    for (std::size_t i = 0; i < n; ++i) {
        const Environment env = generate_environment(environment_seed(o.seed, i, false), robot, o.obs_ratio);
        char name[32];
        std::snprintf(name, sizeof name, "env_%03zu.json", i);
        save_environment(env, fs::path(o.out_dir) / name);
        out << name << ": " << env.obstacles().size() << " obstacles, covered fraction "
            << obstacle_fraction(env) << '\n';
    }
    return kExitOk;
}

DatasetOptions dataset_options(const Options& o) {
    DatasetOptions d;
    d.n_envs = o.envs ? o.envs : (o.paper_scale ? kPaperEnvs : d.n_envs);
    d.pairs_per_env = o.pairs ? o.pairs : (o.paper_scale ? kPaperPairs : d.pairs_per_env);
    d.budget = o.budget;
    d.obs_ratio_min = o.obs_min;
    d.obs_ratio_max = o.obs_max;
    d.jobs = o.jobs;
    d.planner.record_time = false;
    if (d.obs_ratio_min > d.obs_ratio_max) throw UsageError("--obs-min: must not exceed --obs-max");
    return d;
}

int cmd_gen_data(const Options& o, std::ostream& out) {
    const Dataset ds = build_dataset(robot_of(o), o.seed, dataset_options(o));
    const fs::path path = fs::path(o.out_dir) / "dataset.jsonl";
    save_dataset(ds, path);
    out << "wrote " << path.string() << ": " << ds.environments.size() << " environments, "
        << ds.demonstrations.size() << " demonstrations, " << ds.failed_pairs << " failed pairs\n";
    return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
    const Dataset ds = o.dataset.empty() ? build_dataset(robot_of(o), o.seed, dataset_options(o)) : load_dataset(o.dataset);
    TrainConfig cfg;
    cfg.epochs = o.paper_scale && o.epochs == 200 ? kPaperEpochs : o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.step_size = o.lr;
    cfg.prior_variance = o.prior_variance;
    cfg.seed = o.seed;
    cfg.record_time = !o.no_timing;
    TrainReport report;
    const FlowModel model = train(ds, cfg, &report, [&](std::size_t epoch, const TrainReport& r) {
        if (epoch % 10 == 0 || epoch == cfg.epochs)
            out << "epoch " << epoch << " train_loss " << r.train_loss.back() << " val_nll " << r.val_nll.back()
                << '\n';
    });
    save_flow(model, o.checkpoint);
    const fs::path dir = o.out_dir.empty() ? fs::path(o.checkpoint).parent_path() : fs::path(o.out_dir);
    write_report_csv(report, dir / "train_report.csv");
    if (o.dataset.empty()) save_dataset(ds, dir / "dataset.jsonl");
    out << "wrote " << o.checkpoint << " (best epoch " << report.best_epoch << ")\n";
    return kExitOk;
}

int cmd_plan(const Options& o, std::ostream& out) {
    const RobotKind robot = robot_of(o);
    const Environment env = environment_of(o, robot);
    const auto [q_init, q_target] = endpoints(o, env);

    PlannerRun run;
    run.env = &env;
    run.q_init = q_init;
    run.q_target = q_target;
    run.budget = o.budget;
    try {
        run.kind = parse_planner(o.planner);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--planner: ") + e.what());
    }
    run.params.record_time = !o.no_timing;

    std::unique_ptr<Sampler> sampler;
    if (o.checkpoint.empty()) {
        sampler = std::make_unique<UniformSampler>(env.dims(), derive_seed(o.seed, {0x52}));
    } else {
        auto model = load_model(o.checkpoint, robot);
        const RowVector ctx = context_vector({encode_workspace(env), q_init, q_target}, env.dims());
        sampler = std::make_unique<MixtureSampler>(std::make_unique<FlowSampler>(model, ctx, derive_seed(o.seed, {0x53})),
                                                   o.epsilon, derive_seed(o.seed, {0x54}));
    }
    const PlanResult result = plan(run, *sampler);

    const fs::path dir(o.out_dir);
    std::ostringstream metrics;
    write_metrics_csv(metrics, result.metrics);
    write_text(dir / "metrics.csv", metrics.str());
    std::string traj;
    if (result.trajectory)
        for (const auto& q : *result.trajectory) traj += format_config(q) + "\n";
    write_text(dir / "trajectory.csv", traj);
    save_environment(env, dir / "environment.json");

    out << "start " << format_config(q_init) << " goal " << format_config(q_target) << '\n';
    out << "cost " << format_cost(result.cost) << " straight_line " << distance(q_init, q_target) << '\n';
    out << "total_samples " << result.metrics.final.total_samples << " invalid_obstacles "
        << result.metrics.final.invalid_obstacles << " invalid_connections "
        << result.metrics.final.invalid_connections << '\n';
    return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
    ExperimentSpec spec;
    spec.robot = robot_of(o);
    if (o.envs) spec.n_envs = o.envs;
    if (o.pairs) spec.pairs_per_env = o.pairs;
    spec.repeats = o.repeats;
    spec.budget = o.budget;
    spec.epsilon = o.epsilon;
    spec.seed = o.seed;
    spec.jobs = o.jobs;
    spec.obs_ratio_min = o.obs_min;
    spec.obs_ratio_max = o.obs_max;
    spec.params.record_time = !o.no_timing;
    if (!o.planners.empty()) {
        spec.planners.clear();
        for (const auto& p : o.planners) {
            try {
                spec.planners.push_back(parse_planner(p));
            } catch (const std::invalid_argument& e) {
                throw UsageError(std::string("--planners: ") + e.what());
            }
        }
    }
    if (!o.samplers.empty()) {
        spec.samplers.clear();
        for (const auto& s : o.samplers) {
            try {
                spec.samplers.push_back(parse_sampler(s));
            } catch (const std::invalid_argument& e) {
                throw UsageError(std::string("--samplers: ") + e.what());
            }
        }
    } else if (o.checkpoint.empty()) {
        spec.samplers = {SamplerKind::Uniform};
    }
    const bool needs_flow = std::count(spec.samplers.begin(), spec.samplers.end(), SamplerKind::Flow) > 0;
    if (needs_flow && o.checkpoint.empty()) throw UsageError("--checkpoint: required for the flow sampler");
    if (needs_flow) spec.model = load_model(o.checkpoint, spec.robot);

    ExperimentResult result;
    try {
        result = run_experiment(spec);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--seed: ") + e.what());
    }
    write_experiment(result, o.out_dir);
    emit_plots(result, o.out_dir);
    for (const auto& c : result.summary)
        out << to_string(c.planner) << ' ' << to_string(c.sampler) << ": solved " << c.solved << '/' << c.runs
            << ", total samples " << c.samples_total_mean << " +- " << c.samples_total_std << ", first cost "
            << format_cost(c.first_cost_mean) << ", final cost " << format_cost(c.final_cost_mean) << '\n';
    return kExitOk;
}

int cmd_gallery(const Options& o, std::ostream& out) {
    const RobotKind robot = robot_of(o);
    auto model = load_model(o.checkpoint, robot);
    const Environment env = environment_of(o, robot);
    const auto [q_init, q_target] = endpoints(o, env);
    const auto panels = conditioning_gallery(*model, env, q_init, q_target, o.n, o.seed);
    emit_conditioning_gallery(panels, env, q_init, q_target, o.out_dir);
    for (const auto& p : panels) {
        out << p.name << " variance";
        for (double v : coordinate_variance(p.configs)) out << ' ' << v;
        out << '\n';
    }
    return kExitOk;
}

int cmd_inspect(const Options& o, std::ostream& out) {
    const FlowModel model = load_flow(o.checkpoint);
    const FlowLayout& l = model.layout();
    std::size_t formula = 0;
    for (const auto& b : model.blocks())
        for (int k = 0; k < 4; ++k) {
            const auto& sizes = b.net_layout(static_cast<CouplingBlock::Net>(k)).sizes;
            for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
                formula += static_cast<std::size_t>(sizes[i] + 1) * static_cast<std::size_t>(sizes[i + 1]);
        }
    bool zero_outputs = true;
    for (const auto& b : model.blocks())
        for (int k = 0; k < 4; ++k) {
            const auto net = static_cast<CouplingBlock::Net>(k);
            const auto params = b.net_params(net);
            const std::size_t off = b.net_layout(net).output_layer_offset();
            zero_outputs = zero_outputs && std::all_of(params.begin() + static_cast<std::ptrdiff_t>(off), params.end(),
                                                       [](double v) { return v == 0.0; });
        }
    out << "checkpoint: " << o.checkpoint << '\n';
    out << "D: " << l.dim << '\n';
    out << "K: " << l.num_blocks << '\n';
    out << "split: " << l.split() << '\n';
    out << "context_dim: " << l.context_dim << '\n';
    out << "hidden:";
    for (int h : l.hidden) out << ' ' << h;
    out << '\n';
    out << "clamp: " << l.clamp << '\n';
    out << "boundary_eps: " << l.boundary_eps << '\n';
    out << "parameters: " << model.param_count() << " (layout formula " << formula << ")\n";
    out << "conditioner outputs: " << (zero_outputs ? "zero-initialized" : "trained") << '\n';
    for (const auto& [k, v] : model.metadata()) out << "meta " << k << ": " << v << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Learned sampling distributions for RRT*-family motion planning", "flowplan"};
    app.require_subcommand(1);
    Options o;

    auto* gen_env = app.add_subcommand("gen-env", "Generate random disc-obstacle environments");
    add_common(gen_env, o);
    gen_env->add_option("--envs", o.envs, "Number of environments")->check(CLI::PositiveNumber);
    gen_env->add_option("--obs-ratio", o.obs_ratio, "Target covered fraction")->check(CLI::Range(0.0, kMaxObsRatio));
    add_out_dir(gen_env, o, true);

    auto* gen_data = app.add_subcommand("gen-data", "Collect expert demonstrations with uniform RRT*");
    add_common(gen_data, o);
    gen_data->add_option("--envs", o.envs, "Number of training environments")->check(CLI::PositiveNumber);
    gen_data->add_option("--pairs", o.pairs, "Problems per environment")->check(CLI::PositiveNumber);
    gen_data->add_option("--budget", o.budget, "Expert node budget")->check(CLI::PositiveNumber);
    gen_data->add_option("--obs-min", o.obs_min, "Lowest obstacle ratio")->check(CLI::Range(0.0, kMaxObsRatio));
    gen_data->add_option("--obs-max", o.obs_max, "Highest obstacle ratio")->check(CLI::Range(0.0, kMaxObsRatio));
    gen_data->add_flag("--paper-scale", o.paper_scale, "100 environments x 200 pairs");
    add_jobs(gen_data, o);
    add_out_dir(gen_data, o, true);

    auto* train_cmd = app.add_subcommand("train", "Fit the conditional flow to demonstrations");
    add_common(train_cmd, o);
    train_cmd->add_option("--dataset", o.dataset, "Dataset file (generated when omitted)");
    train_cmd->add_option("--envs", o.envs, "Training environments when generating")->check(CLI::PositiveNumber);
    train_cmd->add_option("--pairs", o.pairs, "Problems per environment when generating")->check(CLI::PositiveNumber);
    train_cmd->add_option("--budget", o.budget, "Expert node budget when generating")->check(CLI::PositiveNumber);
    train_cmd->add_option("--obs-min", o.obs_min, "Lowest obstacle ratio")->check(CLI::Range(0.0, kMaxObsRatio));
    train_cmd->add_option("--obs-max", o.obs_max, "Highest obstacle ratio")->check(CLI::Range(0.0, kMaxObsRatio));
    train_cmd->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--batch-size", o.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", o.lr, "Adam step size")->check(CLI::PositiveNumber);
    train_cmd->add_option("--prior-variance", o.prior_variance, "Gaussian weight prior variance")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--checkpoint", o.checkpoint, "Output checkpoint path")->required();
    train_cmd->add_flag("--paper-scale", o.paper_scale, "100 environments x 200 pairs, 1500 epochs");
    train_cmd->add_flag("--no-timing", o.no_timing, "Write zero wall times for reproducible reports");
    add_jobs(train_cmd, o);
    add_out_dir(train_cmd, o, false);

    auto* plan_cmd = app.add_subcommand("plan", "Solve one planning problem");
    add_common(plan_cmd, o);
    plan_cmd->add_option("--env", o.env, "Environment file (generated from --seed when omitted)");
    plan_cmd->add_flag("--empty", o.empty, "Plan in an obstacle-free workspace");
    plan_cmd->add_option("--obs-ratio", o.obs_ratio, "Covered fraction of a generated environment")
        ->check(CLI::Range(0.0, kMaxObsRatio));
    add_endpoints(plan_cmd, o);
    plan_cmd->add_option("--planner", o.planner, "rrtstar | birrtstar | informedrrtstar");
    plan_cmd->add_option("--budget", o.budget, "Node budget")->check(CLI::PositiveNumber);
    plan_cmd->add_option("--checkpoint", o.checkpoint, "Flow checkpoint (uniform sampling when omitted)");
    plan_cmd->add_option("--epsilon", o.epsilon, "Uniform mixing probability")->check(CLI::Range(0.0, 1.0));
    plan_cmd->add_flag("--no-timing", o.no_timing, "Record zero elapsed times");
    add_out_dir(plan_cmd, o, true);

    auto* bench_cmd = app.add_subcommand("bench", "Compare samplers on held-out environments");
    add_common(bench_cmd, o);
    bench_cmd->add_option("--envs", o.envs, "Held-out environments")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--pairs", o.pairs, "Problems per environment")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--repeats", o.repeats, "Repeats per problem")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--budget", o.budget, "Node budget")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--epsilon", o.epsilon, "Uniform mixing probability")->check(CLI::Range(0.0, 1.0));
    bench_cmd->add_option("--checkpoint", o.checkpoint, "Flow checkpoint");
    bench_cmd->add_option("--planners", o.planners, "Comma separated planner list")->delimiter(',');
    bench_cmd->add_option("--samplers", o.samplers, "Comma separated sampler list (uniform,flow)")->delimiter(',');
    bench_cmd->add_option("--obs-min", o.obs_min, "Lowest obstacle ratio")->check(CLI::Range(0.0, kMaxObsRatio));
    bench_cmd->add_option("--obs-max", o.obs_max, "Highest obstacle ratio")->check(CLI::Range(0.0, kMaxObsRatio));
    bench_cmd->add_flag("--no-timing", o.no_timing, "Record zero elapsed times");
    add_jobs(bench_cmd, o);
    add_out_dir(bench_cmd, o, true);

    auto* gallery_cmd = app.add_subcommand("gallery", "Sample the flow under partial conditioning");
    add_common(gallery_cmd, o);
    gallery_cmd->add_option("--checkpoint", o.checkpoint, "Flow checkpoint")->required();
    gallery_cmd->add_option("--env", o.env, "Environment file (generated from --seed when omitted)");
    gallery_cmd->add_option("--obs-ratio", o.obs_ratio, "Covered fraction of a generated environment")
        ->check(CLI::Range(0.0, kMaxObsRatio));
    add_endpoints(gallery_cmd, o);
    gallery_cmd->add_option("--n", o.n, "Samples per panel")->check(CLI::PositiveNumber);
    add_out_dir(gallery_cmd, o, true);

    auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a checkpoint");
    inspect_cmd->add_option("--checkpoint", o.checkpoint, "Flow checkpoint")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "flowplan: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*gen_env) return cmd_gen_env(o, out);
        if (*gen_data) return cmd_gen_data(o, out);
        if (*train_cmd) return cmd_train(o, out);
        if (*plan_cmd) return cmd_plan(o, out);
        if (*bench_cmd) return cmd_bench(o, out);
        if (*gallery_cmd) return cmd_gallery(o, out);
        if (*inspect_cmd) return cmd_inspect(o, out);
    } catch (const UsageError& e) {
        err << "flowplan: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "flowplan: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace flowplan::cli
