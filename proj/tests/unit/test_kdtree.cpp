#include <gtest/gtest.h>

#include "flowplan/kdtree.hpp"
#include "flowplan/random.hpp"

using namespace flowplan;

namespace {

std::size_t linear_nearest(const std::vector<Config>& pts, const Config& q) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (distance_sq(pts[i], q) < distance_sq(pts[best], q)) best = i;
    return best;
}

}  // namespace

TEST(KdTree, NearestEqualsLinearScan) {
    for (std::size_t dim : {2u, 4u}) {
        Rng rng(dim);
        KdTree tree(dim);
        std::vector<Config> pts;
        for (int i = 0; i < 1000; ++i) {
            Config p(dim);
            for (double& c : p) c = rng.uniform();
            pts.push_back(p);
            tree.insert(p);
        }
        for (int i = 0; i < 1000; ++i) {
            Config q(dim);
            for (double& c : q) c = rng.uniform(-0.2, 1.2);
            EXPECT_EQ(tree.nearest(q), linear_nearest(pts, q));
        }
    }
}

TEST(KdTree, TiesGoToLowestIndex) {
    KdTree tree(2);
    tree.insert(Config{0.5, 0.5});
    tree.insert(Config{0.25, 0.25});
    tree.insert(Config{0.5, 0.5});
    tree.insert(Config{0.75, 0.25});
    EXPECT_EQ(tree.nearest(Config{0.5, 0.5}), 0u);
    EXPECT_EQ(tree.nearest(Config{0.5, 0.125}), 1u);
}

TEST(KdTree, WithinEqualsBruteForce) {
    Rng rng(3);
    KdTree tree(3);
    std::vector<Config> pts;
    for (int i = 0; i < 500; ++i) {
        Config p{rng.uniform(), rng.uniform(), rng.uniform()};
        pts.push_back(p);
        tree.insert(p);
    }
    std::vector<std::size_t> got;
    for (int i = 0; i < 200; ++i) {
        const Config q{rng.uniform(), rng.uniform(), rng.uniform()};
        const double r = rng.uniform(0.0, 0.3);
        tree.within(q, r, got);
        std::vector<std::size_t> expect;
        for (std::size_t k = 0; k < pts.size(); ++k)
            if (distance_sq(pts[k], q) <= r * r) expect.push_back(k);
        EXPECT_EQ(got, expect);
    }
}

TEST(KdTree, EmptyTreeThrows) {
    KdTree tree(2);
    EXPECT_THROW(tree.nearest(Config{0.0, 0.0}), std::logic_error);
}
