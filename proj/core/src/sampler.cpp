#include "flowplan/sampler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace flowplan {

Config UniformSampler::next() {
    Config q(dim_);
    for (double& c : q) c = rng_.uniform();
    return q;
}

FlowSampler::FlowSampler(std::shared_ptr<const FlowModel> model, RowVector context, std::uint64_t seed,
                         std::size_t batch_size)
    : model_(std::move(model)), context_(std::move(context)), seed_(seed), batch_size_(batch_size) {
    if (!model_) throw std::invalid_argument("FlowSampler: null model");
    if (batch_size_ == 0) throw std::invalid_argument("FlowSampler: batch size must be positive");
    if (context_.size() != model_->layout().context_dim)
        throw std::invalid_argument("FlowSampler: context length does not match the model");
}

void FlowSampler::draw_batch() {
    batch_ = model_->sample_matrix(context_, batch_size_, derive_seed(seed_, {draws_}));
    cursor_ = 0;
    ++draws_;
}

Config FlowSampler::next() {
    if (draws_ == 0 || cursor_ >= batch_size_) draw_batch();
    Config q(static_cast<std::size_t>(batch_.cols()));
    for (Eigen::Index j = 0; j < batch_.cols(); ++j) q[static_cast<std::size_t>(j)] = batch_(static_cast<Eigen::Index>(cursor_), j);
    ++cursor_;
    return q;
}

MixtureSampler::MixtureSampler(std::unique_ptr<Sampler> inner, double epsilon, std::uint64_t seed)
    : inner_(std::move(inner)),
      epsilon_(epsilon),
      coin_(derive_seed(seed, {1})),
      uniform_(inner_ ? inner_->dim() : 0, derive_seed(seed, {2})) {
    if (!inner_) throw std::invalid_argument("MixtureSampler: null inner sampler");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("MixtureSampler: epsilon must be in [0,1]");
}

Config MixtureSampler::next() {
    if (coin_.uniform() < epsilon_) {
        ++uniform_draws_;
        return uniform_.next();
    }
    ++inner_draws_;
    return inner_->next();
}

bool InformedSampler::in_informed_set(const Config& q) const noexcept {
    if (!std::isfinite(bound_)) return true;
    return distance(q, start_) + distance(q, goal_) <= bound_;
}

Config InformedSampler::next() {
    Config q = inner_.next();
    for (std::size_t tries = 0; !in_informed_set(q) && tries < kMaxConsecutiveRejections; ++tries) {
        ++rejections_;
        q = inner_.next();
    }
    return q;
}

}  // namespace flowplan
