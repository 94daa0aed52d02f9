#include "flowplan/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "flowplan/errors.hpp"
#include "flowplan/random.hpp"
#include "io_util.hpp"
#include "json_detail.hpp"

namespace flowplan {

namespace {

constexpr int kEnvironmentFormatVersion = 1;
constexpr double kEncodingMinSpacing = 0.005;
// Generation rejects discs that would push coverage this far past the target.
constexpr double kOvershootTolerance = 0.025;
constexpr int kMaxGenerationAttempts = 20000;

enum : std::uint64_t { kTagDiscs = 1, kTagCoverage = 2, kTagEncoding = 3 };

double point_segment_distance_sq(Point2 p, const Segment& s) noexcept {
    const double dx = s.b.x - s.a.x;
    const double dy = s.b.y - s.a.y;
    const double len_sq = dx * dx + dy * dy;
    double t = 0.0;
    if (len_sq > 0.0) {
        t = ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len_sq;
        t = std::clamp(t, 0.0, 1.0);
    }
    const double ex = s.a.x + t * dx - p.x;
    const double ey = s.a.y + t * dy - p.y;
    return ex * ex + ey * ey;
}

bool inside(const Obstacle& o, Point2 p) noexcept {
    const double dx = p.x - o.center.x;
    const double dy = p.y - o.center.y;
    return dx * dx + dy * dy < o.radius * o.radius;
}

}  // namespace

std::size_t robot_dims(RobotKind robot) noexcept { return robot == RobotKind::Point2 ? 2 : 4; }

std::string_view to_string(RobotKind robot) noexcept { return robot == RobotKind::Point2 ? "point2" : "arm4"; }

RobotKind parse_robot(std::string_view name) {
    if (name == "point2") return RobotKind::Point2;
    if (name == "arm4") return RobotKind::Arm4;
    throw std::invalid_argument("unknown robot kind '" + std::string(name) + "' (expected point2|arm4)");
}

Environment::Environment(RobotKind robot, std::vector<Obstacle> obstacles, std::uint64_t seed, double obs_ratio)
    : robot_(robot), obstacles_(std::move(obstacles)), seed_(seed), obs_ratio_(obs_ratio) {
    for (const auto& o : obstacles_) {
        if (!(o.radius > 0.0) || !std::isfinite(o.center.x) || !std::isfinite(o.center.y)) {
            throw std::invalid_argument("Environment: obstacle radius must be positive and finite");
        }
        const double nx = std::clamp(o.center.x, 0.0, 1.0);
        const double ny = std::clamp(o.center.y, 0.0, 1.0);
        if (!inside(o, Point2{nx, ny})) {
            throw std::invalid_argument("Environment: obstacle does not intersect the unit square");
        }
    }

    cells_.assign(kGrid * kGrid, {});
    for (std::uint32_t i = 0; i < obstacles_.size(); ++i) {
        const auto& o = obstacles_[i];
        const auto cell = [](double v) { return std::clamp(static_cast<int>(std::floor(v * kGrid)), 0, kGrid - 1); };
        const int x0 = cell(o.center.x - o.radius), x1 = cell(o.center.x + o.radius);
        const int y0 = cell(o.center.y - o.radius), y1 = cell(o.center.y + o.radius);
        for (int gy = y0; gy <= y1; ++gy)
            for (int gx = x0; gx <= x1; ++gx) cells_[gy * kGrid + gx].push_back(i);
    }
}

bool Environment::point_in_collision(Point2 p) const noexcept {
    if (p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0) {
        const int gx = std::min(static_cast<int>(p.x * kGrid), kGrid - 1);
        const int gy = std::min(static_cast<int>(p.y * kGrid), kGrid - 1);
        for (std::uint32_t i : cells_[gy * kGrid + gx])
            if (inside(obstacles_[i], p)) return true;
        return false;
    }
    return std::any_of(obstacles_.begin(), obstacles_.end(), [&](const Obstacle& o) { return inside(o, p); });
}

bool Environment::segment_in_collision(const Segment& s) const noexcept {
    const double lo_x = std::min(s.a.x, s.b.x), hi_x = std::max(s.a.x, s.b.x);
    const double lo_y = std::min(s.a.y, s.b.y), hi_y = std::max(s.a.y, s.b.y);
    for (const auto& o : obstacles_) {
        if (o.center.x + o.radius < lo_x || o.center.x - o.radius > hi_x || o.center.y + o.radius < lo_y ||
            o.center.y - o.radius > hi_y)
            continue;
        if (point_segment_distance_sq(o.center, s) < o.radius * o.radius) return true;
    }
    return false;
}

Environment generate_environment(std::uint64_t seed, RobotKind robot, double obs_ratio) {
    if (!(obs_ratio <= kMaxObsRatio)) {
        throw std::invalid_argument("generate_environment: obs_ratio must be at most 0.6");
    }
    const double target = std::max(obs_ratio, kMinObsRatio);

    Rng coverage_rng(derive_seed(seed, {kTagCoverage}));
    constexpr std::size_t kProbe = 10000;
    std::vector<Point2> probes(kProbe);
    for (auto& p : probes) {
        p.x = coverage_rng.uniform();
        p.y = coverage_rng.uniform();
    }
    std::vector<std::uint8_t> covered(kProbe, 0);
    std::size_t covered_count = 0;

    Rng rng(derive_seed(seed, {kTagDiscs}));
    std::vector<Obstacle> discs;
    int attempts = 0;
    std::vector<std::size_t> newly;
    while (static_cast<double>(covered_count) / kProbe < target) {
        if (discs.size() >= static_cast<std::size_t>(kMaxObstacles) || ++attempts > kMaxGenerationAttempts) {
            throw GenerationError("generate_environment: obstacle ratio " + std::to_string(target) +
                                  " unreachable within " + std::to_string(kMaxObstacles) + " discs");
        }
        Obstacle o;
        o.center.x = rng.uniform();
        o.center.y = rng.uniform();
        o.radius = rng.uniform(kMinObstacleRadius, kMaxObstacleRadius);

        newly.clear();
        for (std::size_t i = 0; i < kProbe; ++i)
            if (!covered[i] && inside(o, probes[i])) newly.push_back(i);
        const double fraction = static_cast<double>(covered_count + newly.size()) / kProbe;
        if (fraction > target + kOvershootTolerance) continue;

        for (std::size_t i : newly) covered[i] = 1;
        covered_count += newly.size();
        discs.push_back(o);
    }
    return Environment(robot, std::move(discs), seed, target);
}

double obstacle_fraction(const Environment& env, std::size_t samples, std::uint64_t seed) {
    Rng rng(seed);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        Point2 p{rng.uniform(), rng.uniform()};
        if (env.point_in_collision(p)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(samples);
}

std::size_t WorkspaceEncoding::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

WorkspaceEncoding encode_workspace(const Environment& env) {
    const auto& obs = env.obstacles();
    const std::size_t n = obs.size();
    std::vector<double> perimeter(n);
    for (std::size_t i = 0; i < n; ++i) perimeter[i] = 2.0 * std::numbers::pi * obs[i].radius;
    const double total = std::accumulate(perimeter.begin(), perimeter.end(), 0.0);

    // Largest-remainder apportionment of the point budget by perimeter.
    std::vector<std::size_t> count(n);
    std::vector<double> remainder(n);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double quota = static_cast<double>(kEncodingPoints) * perimeter[i] / total;
        count[i] = static_cast<std::size_t>(std::floor(quota));
        remainder[i] = quota - static_cast<double>(count[i]);
        assigned += count[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < kEncodingPoints && k < n; ++k, ++assigned) ++count[order[k]];

    // Small discs cannot hold points closer than the minimum spacing; the rest is padding.
    for (std::size_t i = 0; i < n; ++i) {
        const auto cap = static_cast<std::size_t>(std::floor(perimeter[i] / kEncodingMinSpacing));
        count[i] = std::min(count[i], std::max<std::size_t>(cap, 1));
    }

    WorkspaceEncoding enc;
    enc.points.assign(2 * kEncodingPoints, kEncodingSentinel);
    enc.mask.assign(kEncodingPoints, 0);
    Rng rng(derive_seed(env.seed(), {kTagEncoding}));
    std::size_t slot = 0;
    for (std::size_t i = 0; i < n && slot < kEncodingPoints; ++i) {
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        for (std::size_t j = 0; j < count[i] && slot < kEncodingPoints; ++j, ++slot) {
            const double theta = phase + 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(count[i]);
            enc.points[2 * slot] = obs[i].center.x + obs[i].radius * std::cos(theta);
            enc.points[2 * slot + 1] = obs[i].center.y + obs[i].radius * std::sin(theta);
            enc.mask[slot] = 1;
        }
    }
    return enc;
}

std::vector<Segment> forward_kinematics(const Config& config) {
    if (config.size() != 4) throw std::invalid_argument("forward_kinematics: planar arm expects 4 coordinates");
    const Point2 base{config[0], config[1]};
    const double phi0 = (2.0 * config[2] - 1.0) * std::numbers::pi;
    const double phi1 = (2.0 * config[3] - 1.0) * std::numbers::pi;
    const Point2 elbow{base.x + kArmLinkLength * std::cos(phi0), base.y + kArmLinkLength * std::sin(phi0)};
    const Point2 tip{elbow.x + kArmLinkLength * std::cos(phi0 + phi1), elbow.y + kArmLinkLength * std::sin(phi0 + phi1)};
    return {Segment{base, elbow}, Segment{elbow, tip}};
}

bool is_valid(const Config& config, const Environment& env) {
    if (config.size() != env.dims()) {
        throw std::invalid_argument("is_valid: configuration has dimension " + std::to_string(config.size()) +
                                    ", robot expects " + std::to_string(env.dims()));
    }
    if (env.robot() == RobotKind::Point2) return !env.point_in_collision(Point2{config[0], config[1]});

    if (env.point_in_collision(Point2{config[0], config[1]})) return false;
    for (const auto& link : forward_kinematics(config))
        if (env.segment_in_collision(link)) return false;
    return true;
}

bool edge_valid(const Config& a, const Config& b, const Environment& env, double resolution) {
    // Walk from the lexicographically smaller endpoint so the sample set is order independent.
    const bool swap = std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
    const Config& from = swap ? b : a;
    const Config& to = swap ? a : b;
    const double len = distance(from, to);
    const auto steps = static_cast<std::size_t>(std::ceil(len / resolution));
    if (!is_valid(from, env) || !is_valid(to, env)) return false;
    for (std::size_t i = 1; i < steps; ++i) {
        if (!is_valid(lerp(from, to, static_cast<double>(i) / static_cast<double>(steps)), env)) return false;
    }
    return true;
}

namespace detail {

nlohmann::ordered_json environment_to_object(const Environment& env) {
    nlohmann::ordered_json j;
    j["version"] = kEnvironmentFormatVersion;
    j["robot"] = std::string(to_string(env.robot()));
    j["seed"] = env.seed();
    j["obs_ratio"] = env.obs_ratio();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& o : env.obstacles()) arr.push_back({{"cx", o.center.x}, {"cy", o.center.y}, {"r", o.radius}});
    j["obstacles"] = std::move(arr);
    return j;
}

Environment environment_from_object(const nlohmann::json& j) {
    try {
        const int version = j.at("version").get<int>();
        if (version != kEnvironmentFormatVersion)
            throw FormatError("environment: unsupported version " + std::to_string(version));
        std::vector<Obstacle> obstacles;
        for (const auto& o : j.at("obstacles"))
            obstacles.push_back({{o.at("cx").get<double>(), o.at("cy").get<double>()}, o.at("r").get<double>()});
        return Environment(parse_robot(j.at("robot").get<std::string>()), std::move(obstacles),
                           j.at("seed").get<std::uint64_t>(), j.at("obs_ratio").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("environment: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("environment: ") + e.what());
    }
}

}  // namespace detail

std::string environment_to_json(const Environment& env) { return detail::environment_to_object(env).dump(2) + "\n"; }

Environment environment_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("environment: invalid JSON: ") + e.what());
    }
    return detail::environment_from_object(j);
}

void save_environment(const Environment& env, const std::filesystem::path& path) {
    detail::write_file(path, environment_to_json(env));
}

Environment load_environment(const std::filesystem::path& path) {
    return environment_from_json(detail::read_file(path));
}

}  // namespace flowplan
