#include "flowplan/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace flowplan {

std::size_t KdTree::insert(const Config& p) {
    if (p.size() != dim_) throw std::invalid_argument("KdTree::insert: dimension mismatch");
    const auto idx = static_cast<std::uint32_t>(points_.size());
    points_.push_back(p);
    if (nodes_.empty()) {
        nodes_.push_back({idx, -1, -1, 0});
        return idx;
    }
    std::int32_t cur = 0;
    for (;;) {
        Node& n = nodes_[static_cast<std::size_t>(cur)];
        const bool go_left = p[n.axis] < points_[n.point][n.axis];
        const std::int32_t next = go_left ? n.left : n.right;
        if (next < 0) {
            const auto axis = static_cast<std::uint8_t>((n.axis + 1) % dim_);
            const auto child = static_cast<std::int32_t>(nodes_.size());
            // `n` may dangle after push_back.
            if (go_left)
                nodes_[static_cast<std::size_t>(cur)].left = child;
            else
                nodes_[static_cast<std::size_t>(cur)].right = child;
            nodes_.push_back({idx, -1, -1, axis});
            return idx;
        }
        cur = next;
    }
}

std::size_t KdTree::nearest(const Config& q) const {
    if (nodes_.empty()) throw std::logic_error("KdTree::nearest: empty tree");
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best = 0;

    struct Frame {
        std::int32_t node;
        double plane_d2;
    };
    Frame stack[128];
    std::vector<Frame> overflow;
    int top = 0;
    auto push = [&](Frame f) {
        if (top < 128)
            stack[top++] = f;
        else
            overflow.push_back(f);
    };
    auto pop = [&](Frame& f) {
        if (!overflow.empty()) {
            f = overflow.back();
            overflow.pop_back();
            return true;
        }
        if (top == 0) return false;
        f = stack[--top];
        return true;
    };

    push({0, 0.0});
    Frame f;
    while (pop(f)) {
        // Equality is not pruned so equidistant lower indices are still found.
        if (f.plane_d2 > best_d2) continue;
        const Node& n = nodes_[static_cast<std::size_t>(f.node)];
        const Config& p = points_[n.point];
        const double d2 = distance_sq(q, p);
        if (d2 < best_d2 || (d2 == best_d2 && n.point < best)) {
            best_d2 = d2;
            best = n.point;
        }
        const double diff = q[n.axis] - p[n.axis];
        const std::int32_t near_child = diff < 0.0 ? n.left : n.right;
        const std::int32_t far_child = diff < 0.0 ? n.right : n.left;
        if (far_child >= 0) push({far_child, diff * diff});
        if (near_child >= 0) push({near_child, 0.0});
    }
    return best;
}

void KdTree::within(const Config& q, double r, std::vector<std::size_t>& out) const {
    out.clear();
    if (nodes_.empty()) return;
    const double r2 = r * r;
    std::vector<std::int32_t> stack{0};
    while (!stack.empty()) {
        const Node& n = nodes_[static_cast<std::size_t>(stack.back())];
        stack.pop_back();
        const Config& p = points_[n.point];
        if (distance_sq(q, p) <= r2) out.push_back(n.point);
        const double diff = q[n.axis] - p[n.axis];
        if (n.left >= 0 && (diff < 0.0 || diff * diff <= r2)) stack.push_back(n.left);
        if (n.right >= 0 && (diff >= 0.0 || diff * diff <= r2)) stack.push_back(n.right);
    }
    std::sort(out.begin(), out.end());
}

}  // namespace flowplan
