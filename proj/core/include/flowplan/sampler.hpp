#pragma once

#include <cstdint>
#include <limits>
#include <memory>

#include "flowplan/config.hpp"
#include "flowplan/flow.hpp"
#include "flowplan/random.hpp"

namespace flowplan {

inline constexpr std::size_t kFlowBatchSize = 10000;
inline constexpr double kDefaultEpsilon = 0.1;

/// Source of candidate configurations for a planner.
class Sampler {
public:
    virtual ~Sampler() = default;
    virtual Config next() = 0;
    virtual std::size_t dim() const noexcept = 0;
};

/// i.i.d. U(0,1)^d.
class UniformSampler final : public Sampler {
public:
    UniformSampler(std::size_t dim, std::uint64_t seed) : dim_(dim), rng_(seed) {}
    Config next() override;
    std::size_t dim() const noexcept override { return dim_; }

private:
    std::size_t dim_;
    Rng rng_;
};

/// Serves configurations from pre-drawn flow batches, drawing a new batch on exhaustion.
class FlowSampler final : public Sampler {
public:
    FlowSampler(std::shared_ptr<const FlowModel> model, RowVector context, std::uint64_t seed,
                std::size_t batch_size = kFlowBatchSize);
    Config next() override;
    std::size_t dim() const noexcept override { return static_cast<std::size_t>(model_->dim()); }

    std::size_t batch_draws() const noexcept { return draws_; }
    /// Batches drawn after the first one.
    std::size_t redraws() const noexcept { return draws_ == 0 ? 0 : draws_ - 1; }

private:
    void draw_batch();

    std::shared_ptr<const FlowModel> model_;
    RowVector context_;
    std::uint64_t seed_;
    std::size_t batch_size_;
    Matrix batch_;
    std::size_t cursor_ = 0;
    std::size_t draws_ = 0;
};

/// With probability epsilon draws uniform, otherwise delegates to `inner`.
class MixtureSampler final : public Sampler {
public:
    MixtureSampler(std::unique_ptr<Sampler> inner, double epsilon, std::uint64_t seed);
    Config next() override;
    std::size_t dim() const noexcept override { return inner_->dim(); }

    double epsilon() const noexcept { return epsilon_; }
    std::size_t uniform_draws() const noexcept { return uniform_draws_; }
    std::size_t inner_draws() const noexcept { return inner_draws_; }
    Sampler& inner() noexcept { return *inner_; }

private:
    std::unique_ptr<Sampler> inner_;
    double epsilon_;
    Rng coin_;
    UniformSampler uniform_;
    std::size_t uniform_draws_ = 0;
    std::size_t inner_draws_ = 0;
};

/// Rejects draws outside the prolate hyperspheroid {x : |x - start| + |x - goal| <= bound}.
/// Unbounded (passes everything through) until set_bound() receives a finite cost.
class InformedSampler final : public Sampler {
public:
    static constexpr std::size_t kMaxConsecutiveRejections = 100000;

    InformedSampler(Sampler& inner, Config start, Config goal) : inner_(inner), start_(start), goal_(goal) {}
    Config next() override;
    std::size_t dim() const noexcept override { return inner_.dim(); }

    void set_bound(double cost) noexcept { bound_ = cost; }
    double bound() const noexcept { return bound_; }
    bool in_informed_set(const Config& q) const noexcept;
    std::size_t rejections() const noexcept { return rejections_; }

private:
    Sampler& inner_;
    Config start_, goal_;
    double bound_ = std::numeric_limits<double>::infinity();
    std::size_t rejections_ = 0;
};

}  // namespace flowplan
