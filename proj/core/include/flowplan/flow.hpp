#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowplan/config.hpp"
#include "flowplan/env.hpp"
#include "flowplan/mlp.hpp"

namespace flowplan {

/// Planning information the flow is conditioned on. Absent endpoints are
/// encoded as a -1 sentinel vector with a zero mask bit.
struct ConditioningContext {
    WorkspaceEncoding omega;
    std::optional<Config> q_init;
    std::optional<Config> q_target;
};

/// [omega (128), q_init (D), init bit, q_target (D), target bit]
std::size_t context_dim(std::size_t dim) noexcept;
RowVector context_vector(const ConditioningContext& ctx, std::size_t dim);

struct FlowLayout {
    int dim = 2;
    int context_dim = 0;
    int num_blocks = 8;
    std::vector<int> hidden = {64, 64};
    double clamp = 2.0;
    double boundary_eps = 1e-4;

    /// Size of part a: ceil(D/2).
    int split() const noexcept { return (dim + 1) / 2; }
    static FlowLayout for_robot(RobotKind robot);

    friend bool operator==(const FlowLayout&, const FlowLayout&) = default;
};

/// Intermediate values of a batched coupling forward pass, kept for backprop.
struct CouplingCache {
    Matrix a, b, a_next;
    Matrix s_a, s_b;  // clamped log-scales
    Matrix exp_s_a, exp_s_b;
    std::array<BatchCache, 4> nets;
};

/// Affine coupling block: part a is scaled/translated by networks of part b,
/// then part b by networks of the updated part a. Scales are soft-clamped as
/// clamp * tanh(s / clamp).
class CouplingBlock {
public:
    enum Net : int { kScaleA = 0, kShiftA = 1, kScaleB = 2, kShiftB = 3 };

    CouplingBlock(int dim, int split, int context_dim, const std::vector<int>& hidden, double clamp);

    int dim() const noexcept { return dim_; }
    int split() const noexcept { return split_; }
    int context_dim() const noexcept { return context_dim_; }
    double clamp() const noexcept { return clamp_; }

    const DenseLayout& net_layout(Net which) const noexcept { return layouts_[which]; }
    std::span<double> net_params(Net which) noexcept;
    std::span<const double> net_params(Net which) const noexcept;
    std::span<double> params() noexcept { return {params_.data(), static_cast<std::size_t>(params_.size())}; }
    std::span<const double> params() const noexcept {
        return {params_.data(), static_cast<std::size_t>(params_.size())};
    }
    std::size_t param_count() const noexcept { return static_cast<std::size_t>(params_.size()); }

    /// Glorot hidden layers; output layers zero (identity block) unless `random_outputs`.
    void initialize(Rng& rng, bool random_outputs = false);

    /// Batched forward; adds per-row log-determinants into `logdet`.
    Matrix forward(const Matrix& z, const Matrix& ctx, Vector& logdet, CouplingCache* cache = nullptr) const;
    /// Batched exact inverse; subtracts per-row log-determinants from `logdet`.
    Matrix inverse(const Matrix& z_next, const Matrix& ctx, Vector& logdet) const;

    /// Backprop through forward(). `grad_logdet` is d loss / d logdet per row.
    /// Accumulates into `param_grad` (length param_count()) and returns d loss / d z.
    Matrix backward(const Matrix& ctx, const CouplingCache& cache, const Matrix& grad_z_next, const Vector& grad_logdet,
                    std::span<double> param_grad) const;

private:
    int dim_, split_, context_dim_;
    double clamp_;
    std::array<DenseLayout, 4> layouts_;
    std::array<std::size_t, 4> offsets_{};
    Vector params_;
};

/// Single-vector convenience wrappers.
std::pair<Vector, double> coupling_forward(const CouplingBlock& block, std::span<const double> z,
                                           std::span<const double> ctx);
std::pair<Vector, double> coupling_inverse(const CouplingBlock& block, std::span<const double> z_next,
                                           std::span<const double> ctx);

struct FlowPass {
    Matrix out;
    Vector logdet;
};

/// Conditional normalizing flow over [0,1]^D: a logit pre-transform followed by
/// K coupling blocks with a halves swap between consecutive blocks, on top of a
/// standard Gaussian base.
class FlowModel {
public:
    /// Identity-initialized model (zero conditioner outputs) with seeded hidden weights.
    FlowModel(FlowLayout layout, std::uint64_t seed);

    const FlowLayout& layout() const noexcept { return layout_; }
    int dim() const noexcept { return layout_.dim; }
    std::vector<CouplingBlock>& blocks() noexcept { return blocks_; }
    const std::vector<CouplingBlock>& blocks() const noexcept { return blocks_; }
    std::size_t param_count() const noexcept;
    Vector parameters() const;
    void set_parameters(const Vector& flat);

    std::map<std::string, std::string>& metadata() noexcept { return metadata_; }
    const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }

    /// Clamp into [eps, 1-eps] and apply the logit; returns the pre-transform log-determinant per row.
    Matrix to_unbounded(const Matrix& q, Vector& logdet) const;

    /// Unbounded space -> latent. `ctx` has one row (shared) or one row per input.
    FlowPass forward(const Matrix& x, const Matrix& ctx) const;
    /// Latent -> unbounded space.
    FlowPass inverse(const Matrix& z, const Matrix& ctx) const;

    /// forward() keeping per-block intermediates for backward().
    FlowPass forward_cached(const Matrix& x, const Matrix& ctx, std::vector<CouplingCache>& caches) const;
    /// Accumulates parameter gradients, one span per block, given d loss / d z and d loss / d logdet.
    void backward(const Matrix& ctx, const std::vector<CouplingCache>& caches, const Matrix& grad_z,
                  const Vector& grad_logdet, std::vector<std::span<double>>& param_grads) const;

    /// log Q(q | ctx) for each row of q.
    Vector log_prob(const Matrix& q, const Matrix& ctx) const;
    double log_prob(const Config& q, const RowVector& ctx) const;

    /// Map latent rows to configurations strictly inside (0,1)^D.
    Matrix decode(const Matrix& z, const Matrix& ctx) const;
    Matrix sample_matrix(const RowVector& ctx, std::size_t n, std::uint64_t seed) const;
    std::vector<Config> sample(const RowVector& ctx, std::size_t n, std::uint64_t seed) const;

private:
    FlowLayout layout_;
    std::vector<CouplingBlock> blocks_;
    std::map<std::string, std::string> metadata_;
};

/// log|det J| of q -> z computed from a central-difference Jacobian. Test aid, D <= 4.
double logdet_numeric_check(const FlowModel& model, const Config& q, const RowVector& ctx, double step = 1e-6);
/// The analytic counterpart (pre-transform plus every block).
double logdet_analytic(const FlowModel& model, const Config& q, const RowVector& ctx);

std::string flow_to_json(const FlowModel& model);
FlowModel flow_from_json(std::string_view text);
void save_flow(const FlowModel& model, const std::filesystem::path& path);
FlowModel load_flow(const std::filesystem::path& path);

}  // namespace flowplan
