#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "flowplan/flow.hpp"
#include "flowplan/random.hpp"

namespace flowplan::testing {

inline FlowLayout small_layout(int dim, int context_dim, std::vector<int> hidden = {8}, int blocks = 2) {
    FlowLayout l;
    l.dim = dim;
    l.context_dim = context_dim;
    l.hidden = std::move(hidden);
    l.num_blocks = blocks;
    return l;
}

/// Model with every conditioner layer randomized (not the identity).
inline FlowModel random_model(const FlowLayout& layout, std::uint64_t seed, double output_scale = 1.0) {
    FlowModel m(layout, seed);
    Rng rng(derive_seed(seed, {77}));
    for (auto& b : m.blocks()) b.initialize(rng, true);
    if (output_scale != 1.0) m.set_parameters(m.parameters() * output_scale);
    return m;
}

inline RowVector random_row(std::size_t n, Rng& rng, double lo = 0.0, double hi = 1.0) {
    RowVector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(lo, hi);
    return v;
}

inline double rel_err(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("flowplan_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace flowplan::testing
