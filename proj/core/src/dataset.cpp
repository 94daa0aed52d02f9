#include "flowplan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flowplan/errors.hpp"
#include "flowplan/random.hpp"
#include "io_util.hpp"
#include "json_detail.hpp"
#include "parallel.hpp"

namespace flowplan {

namespace {

constexpr int kDatasetFormatVersion = 1;
constexpr std::size_t kMaxPairAttempts = 1000000;
constexpr double kMaxFailureFraction = 0.9;

enum : std::uint64_t {
    kTagTrainEnv = 0x7A1,
    kTagHeldOutEnv = 0x7E57,
    kTagRatio = 0xA7,
    kTagPairs = 0xB2,
    kTagExpert = 0xE1,
};

Config random_valid(const Environment& env, Rng& rng) {
    for (std::size_t attempt = 0; attempt < kMaxPairAttempts; ++attempt) {
        Config q(env.dims());
        for (double& c : q) c = rng.uniform();
        if (is_valid(q, env)) return q;
    }
    throw GenerationError("no collision-free configuration found; environment is saturated");
}

std::string_view split_name(Split s) { return s == Split::Train ? "train" : "validation"; }

Split parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "validation") return Split::Validation;
    throw FormatError("dataset: unknown split '" + std::string(s) + "'");
}

}  // namespace

std::vector<Config> Demonstration::full_path() const {
    std::vector<Config> path;
    path.reserve(waypoints.size() + 2);
    path.push_back(q_init);
    path.insert(path.end(), waypoints.begin(), waypoints.end());
    path.push_back(q_target);
    return path;
}

std::vector<Config> sparsify_path(const std::vector<Config>& path, const Environment& env, std::size_t max_points,
                                  double resolution) {
    if (path.size() < 3) return {};
    const std::size_t interior = path.size() - 2;

    std::vector<std::size_t> keep;
    keep.push_back(0);
    if (interior <= max_points) {
        for (std::size_t i = 1; i + 1 < path.size(); ++i) keep.push_back(i);
    } else {
        std::vector<double> arclength(path.size(), 0.0);
        for (std::size_t i = 1; i < path.size(); ++i) arclength[i] = arclength[i - 1] + distance(path[i - 1], path[i]);
        const double total = arclength.back();
        for (std::size_t k = 1; k <= max_points; ++k) {
            const double target = total * static_cast<double>(k) / static_cast<double>(max_points + 1);
            const auto it = std::lower_bound(arclength.begin() + 1, arclength.end() - 1, target);
            auto i = static_cast<std::size_t>(it - arclength.begin());
            if (i > 1 && target - arclength[i - 1] <= arclength[i] - target) --i;
            i = std::clamp<std::size_t>(i, 1, path.size() - 2);
            if (i > keep.back()) keep.push_back(i);
        }
    }
    keep.push_back(path.size() - 1);

    // Shortcuts across dropped nodes must stay collision free.
    for (std::size_t j = 0; j + 1 < keep.size();) {
        const std::size_t a = keep[j], b = keep[j + 1];
        if (b - a > 1 && !edge_valid(path[a], path[b], env, resolution)) {
            keep.insert(keep.begin() + static_cast<std::ptrdiff_t>(j) + 1, (a + b) / 2);
            continue;
        }
        ++j;
    }

    std::vector<Config> out;
    for (std::size_t j = 1; j + 1 < keep.size(); ++j) out.push_back(path[keep[j]]);
    return out;
}

std::optional<Demonstration> collect_demonstration(const Environment& env, const Config& q_init,
                                                   const Config& q_target, std::size_t budget, std::uint64_t seed,
                                                   const PlannerParams& params) {
    PlannerRun run;
    run.env = &env;
    run.q_init = q_init;
    run.q_target = q_target;
    run.budget = budget;
    run.kind = PlannerKind::RRTStar;
    run.params = params;
    run.params.record_time = false;
    UniformSampler sampler(env.dims(), seed);
    const PlanResult result = plan(run, sampler);
    if (!result.trajectory) return std::nullopt;

    Demonstration demo;
    demo.q_init = q_init;
    demo.q_target = q_target;
    demo.waypoints = sparsify_path(*result.trajectory, env, kMaxWaypoints, params.resolution);
    demo.path_cost = path_cost(demo.full_path());
    return demo;
}

std::uint64_t environment_seed(std::uint64_t seed, std::size_t index, bool held_out) {
    return derive_seed(seed, {held_out ? kTagHeldOutEnv : kTagTrainEnv, index});
}

double environment_ratio(std::uint64_t seed, std::size_t index, bool held_out, double lo, double hi) {
    Rng rng(derive_seed(seed, {kTagRatio, held_out ? 1u : 0u, index}));
    return rng.uniform(lo, hi);
}

std::vector<std::pair<Config, Config>> sample_problem_pairs(const Environment& env, std::size_t count,
                                                            std::uint64_t seed) {
    Rng rng(derive_seed(seed, {kTagPairs}));
    std::vector<std::pair<Config, Config>> pairs;
    pairs.reserve(count);
    const auto seen = [&](const Config& q) {
        return std::any_of(pairs.begin(), pairs.end(), [&](const auto& p) { return p.first == q || p.second == q; });
    };
    while (pairs.size() < count) {
        const Config a = random_valid(env, rng);
        const Config b = random_valid(env, rng);
        if (distance(a, b) < kMinEndpointSeparation || seen(a) || seen(b)) continue;
        pairs.emplace_back(a, b);
    }
    return pairs;
}

Dataset build_dataset(RobotKind robot, std::uint64_t seed, const DatasetOptions& options) {
    if (options.n_envs == 0) throw std::invalid_argument("build_dataset: need at least one environment");
    if (!(options.obs_ratio_min <= options.obs_ratio_max))
        throw std::invalid_argument("build_dataset: obs_ratio_min exceeds obs_ratio_max");

    Dataset ds;
    ds.robot = robot;
    ds.seed = seed;
    ds.options = options;

    struct Task {
        std::size_t env_id, pair;
        Config q_init, q_target;
    };
    std::vector<Task> tasks;
    for (std::size_t e = 0; e < options.n_envs; ++e) {
        const double ratio = environment_ratio(seed, e, false, options.obs_ratio_min, options.obs_ratio_max);
        ds.environments.push_back(generate_environment(environment_seed(seed, e, false), robot, ratio));
        const auto pairs = sample_problem_pairs(ds.environments.back(), options.pairs_per_env, derive_seed(seed, {e}));
        for (std::size_t p = 0; p < pairs.size(); ++p) tasks.push_back({e, p, pairs[p].first, pairs[p].second});
    }

    std::vector<std::optional<Demonstration>> results(tasks.size());
    detail::parallel_for(tasks.size(), options.jobs, [&](std::size_t i) {
        const Task& t = tasks[i];
        results[i] = collect_demonstration(ds.environments[t.env_id], t.q_init, t.q_target, options.budget,
                                           derive_seed(seed, {kTagExpert, t.env_id, t.pair}), options.planner);
        if (results[i]) results[i]->env_id = t.env_id;
    });

    for (auto& r : results) {
        if (r)
            ds.demonstrations.push_back(std::move(*r));
        else
            ++ds.failed_pairs;
    }
    if (!tasks.empty() && static_cast<double>(ds.failed_pairs) > kMaxFailureFraction * static_cast<double>(tasks.size()))
        throw GenerationError("build_dataset: " + std::to_string(ds.failed_pairs) + " of " +
                              std::to_string(tasks.size()) + " demonstrations failed; obstacle ratio too high?");

    // Whole environments are held out when there are enough of them.
    for (std::size_t i = 0; i < ds.demonstrations.size(); ++i) {
        auto& d = ds.demonstrations[i];
        const bool held_out = options.n_envs >= 10 ? d.env_id % 10 == 9 : i % 10 == 9;
        d.split = held_out ? Split::Validation : Split::Train;
    }
    return ds;
}

TrainingRows training_rows(const Dataset& dataset, std::optional<Split> split) {
    if (dataset.environments.empty()) throw std::invalid_argument("training_rows: empty dataset");
    const std::size_t D = robot_dims(dataset.robot);
    std::size_t n = 0;
    for (const auto& d : dataset.demonstrations)
        if (!split || d.split == *split) n += d.waypoints.size();

    std::vector<WorkspaceEncoding> encodings;
    encodings.reserve(dataset.environments.size());
    for (const auto& env : dataset.environments) encodings.push_back(encode_workspace(env));

    TrainingRows rows;
    rows.q.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(D));
    rows.ctx.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(context_dim(D)));
    Eigen::Index r = 0;
    for (const auto& d : dataset.demonstrations) {
        if (split && d.split != *split) continue;
        const RowVector ctx = context_vector({encodings.at(d.env_id), d.q_init, d.q_target}, D);
        for (const auto& w : d.waypoints) {
            for (std::size_t j = 0; j < D; ++j) rows.q(r, static_cast<Eigen::Index>(j)) = w[j];
            rows.ctx.row(r) = ctx;
            ++r;
        }
    }
    return rows;
}

std::string dataset_to_jsonl(const Dataset& ds) {
    std::ostringstream out;
    nlohmann::ordered_json header;
    header["type"] = "header";
    header["version"] = kDatasetFormatVersion;
    header["robot"] = std::string(to_string(ds.robot));
    header["seed"] = ds.seed;
    header["n_envs"] = ds.options.n_envs;
    header["pairs_per_env"] = ds.options.pairs_per_env;
    header["budget"] = ds.options.budget;
    header["obs_ratio_min"] = ds.options.obs_ratio_min;
    header["obs_ratio_max"] = ds.options.obs_ratio_max;
    header["failed_pairs"] = ds.failed_pairs;
    header["environments"] = ds.environments.size();
    header["demonstrations"] = ds.demonstrations.size();
    out << header.dump() << '\n';

    for (std::size_t i = 0; i < ds.environments.size(); ++i) {
        nlohmann::ordered_json j;
        j["type"] = "environment";
        j["index"] = i;
        j["environment"] = detail::environment_to_object(ds.environments[i]);
        out << j.dump() << '\n';
    }
    for (const auto& d : ds.demonstrations) {
        nlohmann::ordered_json j;
        j["type"] = "demonstration";
        j["env_id"] = d.env_id;
        j["split"] = std::string(split_name(d.split));
        j["q_init"] = detail::config_to_json(d.q_init);
        j["q_target"] = detail::config_to_json(d.q_target);
        auto wps = nlohmann::ordered_json::array();
        for (const auto& w : d.waypoints) wps.push_back(detail::config_to_json(w));
        j["waypoints"] = std::move(wps);
        j["path_cost"] = d.path_cost;
        out << j.dump() << '\n';
    }
    return out.str();
}

Dataset dataset_from_jsonl(std::string_view text) {
    Dataset ds;
    std::istringstream in{std::string(text)};
    std::string line;
    bool have_header = false;
    std::size_t expected_envs = 0, expected_demos = 0;
    try {
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            const auto type = j.at("type").get<std::string>();
            if (type == "header") {
                const int version = j.at("version").get<int>();
                if (version != kDatasetFormatVersion)
                    throw FormatError("dataset: unsupported version " + std::to_string(version));
                ds.robot = parse_robot(j.at("robot").get<std::string>());
                ds.seed = j.at("seed").get<std::uint64_t>();
                ds.options.n_envs = j.at("n_envs").get<std::size_t>();
                ds.options.pairs_per_env = j.at("pairs_per_env").get<std::size_t>();
                ds.options.budget = j.at("budget").get<std::size_t>();
                ds.options.obs_ratio_min = j.at("obs_ratio_min").get<double>();
                ds.options.obs_ratio_max = j.at("obs_ratio_max").get<double>();
                ds.failed_pairs = j.at("failed_pairs").get<std::size_t>();
                expected_envs = j.at("environments").get<std::size_t>();
                expected_demos = j.at("demonstrations").get<std::size_t>();
                have_header = true;
            } else if (!have_header) {
                throw FormatError("dataset: first record must be the header");
            } else if (type == "environment") {
                if (j.at("index").get<std::size_t>() != ds.environments.size())
                    throw FormatError("dataset: environment records out of order");
                ds.environments.push_back(detail::environment_from_object(j.at("environment")));
            } else if (type == "demonstration") {
                Demonstration d;
                d.env_id = j.at("env_id").get<std::size_t>();
                if (d.env_id >= ds.environments.size())
                    throw FormatError("dataset: demonstration references unknown environment");
                d.split = parse_split(j.at("split").get<std::string>());
                d.q_init = detail::config_from_json(j.at("q_init"));
                d.q_target = detail::config_from_json(j.at("q_target"));
                for (const auto& w : j.at("waypoints")) d.waypoints.push_back(detail::config_from_json(w));
                d.path_cost = j.at("path_cost").get<double>();
                ds.demonstrations.push_back(std::move(d));
            } else {
                throw FormatError("dataset: unknown record type '" + type + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("dataset: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("dataset: ") + e.what());
    }
    if (!have_header) throw FormatError("dataset: missing header record");
    if (ds.environments.size() != expected_envs || ds.demonstrations.size() != expected_demos)
        throw FormatError("dataset: record counts do not match the header");
    return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    detail::write_file(path, dataset_to_jsonl(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) { return dataset_from_jsonl(detail::read_file(path)); }

}  // namespace flowplan
