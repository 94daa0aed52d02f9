#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "flowplan/random.hpp"

namespace flowplan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Layer widths of a fully connected tanh network, input first, output last.
/// Parameters are stored layer by layer as W (n_out x n_in, column-major) then b (n_out).
struct DenseLayout {
    std::vector<int> sizes;

    std::size_t num_layers() const noexcept { return sizes.empty() ? 0 : sizes.size() - 1; }
    int input_size() const noexcept { return sizes.front(); }
    int output_size() const noexcept { return sizes.back(); }
    std::size_t param_count() const noexcept;
    /// Offset of the output layer's weights within the parameter vector.
    std::size_t output_layer_offset() const noexcept;

    friend bool operator==(const DenseLayout&, const DenseLayout&) = default;
};

/// Dense network with tanh hidden activations and an identity output layer.
class DenseNet {
public:
    explicit DenseNet(DenseLayout layout);
    DenseNet(DenseLayout layout, Vector params);

    /// Glorot-uniform weights, zero biases; optionally zero the output layer.
    static DenseNet glorot(DenseLayout layout, Rng& rng, bool zero_output_layer);

    const DenseLayout& layout() const noexcept { return layout_; }
    const Vector& params() const noexcept { return params_; }
    Vector& params() noexcept { return params_; }

private:
    DenseLayout layout_;
    Vector params_;
};

Vector net_forward(const DenseNet& net, std::span<const double> input);

struct NetGradients {
    Vector params;
    Vector input;
};

/// Reverse-mode gradients of <output_gradient, net(input)>.
NetGradients net_backward(const DenseNet& net, std::span<const double> input, std::span<const double> output_gradient);

/// Glorot initialization into an existing parameter span.
void glorot_init(const DenseLayout& layout, std::span<double> params, Rng& rng, bool zero_output_layer);

/// Batched evaluation on a raw parameter span. The first layer input is the
/// column concatenation [x, ctx]; `ctx` may have zero columns, one row
/// (broadcast to every row of x) or as many rows as x.
struct BatchCache {
    std::vector<Matrix> activations;  // post-activation output of every layer
};

Matrix forward_batch(const DenseLayout& layout, std::span<const double> params, const Matrix& x, const Matrix& ctx,
                     BatchCache* cache = nullptr);

/// Accumulates parameter gradients into `param_grad` and, when non-null,
/// writes the gradient with respect to `x` (context columns are not differentiated).
void backward_batch(const DenseLayout& layout, std::span<const double> params, const Matrix& x, const Matrix& ctx,
                    const BatchCache& cache, const Matrix& grad_out, std::span<double> param_grad, Matrix* grad_x);

struct AdamConfig {
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    OptimizerState(std::size_t n, AdamConfig config = {});

    Vector first_moment;
    Vector second_moment;
    std::int64_t step = 0;
    AdamConfig config;
};

/// One bias-corrected adaptive-moment update. Throws NumericalError on a
/// non-finite gradient and leaves both state and params untouched.
void optimizer_step(OptimizerState& state, Eigen::Ref<Vector> params, const Vector& grads);

}  // namespace flowplan
