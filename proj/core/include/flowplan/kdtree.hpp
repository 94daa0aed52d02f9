#pragma once

#include <cstdint>
#include <vector>

#include "flowplan/config.hpp"

namespace flowplan {

/// Incremental k-d tree over configurations. Points are never removed;
/// point indices are insertion order.
class KdTree {
public:
    explicit KdTree(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    const Config& point(std::size_t i) const noexcept { return points_[i]; }

    std::size_t insert(const Config& p);

    /// Index of a point at minimum Euclidean distance; ties go to the lowest index.
    /// Throws std::logic_error on an empty tree.
    std::size_t nearest(const Config& q) const;

    /// All indices with squared distance <= r^2, ascending.
    void within(const Config& q, double r, std::vector<std::size_t>& out) const;

private:
    struct Node {
        std::uint32_t point;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint8_t axis;
    };

    std::size_t dim_;
    std::vector<Config> points_;
    std::vector<Node> nodes_;
};

}  // namespace flowplan
