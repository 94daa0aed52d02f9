#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "flowplan/config.hpp"

namespace flowplan {

enum class RobotKind { Point2, Arm4 };

std::size_t robot_dims(RobotKind robot) noexcept;
std::string_view to_string(RobotKind robot) noexcept;
/// Accepts "point2" / "arm4".
RobotKind parse_robot(std::string_view name);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

struct Segment {
    Point2 a;
    Point2 b;
};

struct Obstacle {
    Point2 center;
    double radius = 0.0;
    friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

inline constexpr double kArmLinkLength = 0.15;
inline constexpr double kCollisionResolution = 0.005;
inline constexpr double kMinObstacleRadius = 0.03;
inline constexpr double kMaxObstacleRadius = 0.12;
inline constexpr double kMinObsRatio = 0.05;
inline constexpr double kMaxObsRatio = 0.6;
inline constexpr int kMaxObstacles = 500;

/// Disc-obstacle workspace on the unit square plus the robot that moves in it.
/// Immutable after construction. Generated environments always have obstacles;
/// an empty list is allowed for free-space problems.
class Environment {
public:
    Environment(RobotKind robot, std::vector<Obstacle> obstacles, std::uint64_t seed, double obs_ratio);

    RobotKind robot() const noexcept { return robot_; }
    std::size_t dims() const noexcept { return robot_dims(robot_); }
    std::uint64_t seed() const noexcept { return seed_; }
    double obs_ratio() const noexcept { return obs_ratio_; }
    const std::vector<Obstacle>& obstacles() const noexcept { return obstacles_; }

    /// True iff the workspace point lies strictly inside some disc.
    bool point_in_collision(Point2 p) const noexcept;
    bool segment_in_collision(const Segment& s) const noexcept;

    friend bool operator==(const Environment& a, const Environment& b) noexcept {
        return a.robot_ == b.robot_ && a.seed_ == b.seed_ && a.obs_ratio_ == b.obs_ratio_ &&
               a.obstacles_ == b.obstacles_;
    }

private:
    static constexpr int kGrid = 16;

    RobotKind robot_;
    std::vector<Obstacle> obstacles_;
    std::uint64_t seed_;
    double obs_ratio_;
    // Per-cell disc lists for point queries over [0,1]^2.
    std::vector<std::vector<std::uint32_t>> cells_;
};

/// Procedurally generate discs until the covered fraction reaches obs_ratio.
/// Ratios below 0.05 are clamped up; above 0.6 is rejected.
Environment generate_environment(std::uint64_t seed, RobotKind robot, double obs_ratio);

/// Fraction of the unit square covered by obstacles, from `samples` seeded uniform points.
double obstacle_fraction(const Environment& env, std::size_t samples = 10000, std::uint64_t seed = 0);

inline constexpr std::size_t kEncodingPoints = 64;
inline constexpr double kEncodingSentinel = -1.0;

/// Fixed-size obstacle boundary point cloud.
struct WorkspaceEncoding {
    std::vector<double> points;  // 2 * kEncodingPoints, (x, y) interleaved
    std::vector<std::uint8_t> mask;  // kEncodingPoints

    std::size_t valid_count() const noexcept;
    friend bool operator==(const WorkspaceEncoding&, const WorkspaceEncoding&) = default;
};

WorkspaceEncoding encode_workspace(const Environment& env);

/// Two link segments of the planar arm; coords = (x_base, y_base, phi0, phi1)
/// with angles mapped from [0,1] to [-pi, pi].
std::vector<Segment> forward_kinematics(const Config& config);

/// Collision check for a single configuration. Throws std::invalid_argument
/// if the dimension does not match the robot.
bool is_valid(const Config& config, const Environment& env);

/// Discretized straight-line check, samples spaced at most `resolution` apart,
/// endpoints included. Symmetric in (a, b).
bool edge_valid(const Config& a, const Config& b, const Environment& env,
                double resolution = kCollisionResolution);

std::string environment_to_json(const Environment& env);
Environment environment_from_json(std::string_view text);
void save_environment(const Environment& env, const std::filesystem::path& path);
Environment load_environment(const std::filesystem::path& path);

}  // namespace flowplan
