#include "flowplan/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "flowplan/errors.hpp"

namespace flowplan {

namespace {

using ConstMatMap = Eigen::Map<const Matrix>;
using MatMap = Eigen::Map<Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;
using VecMap = Eigen::Map<Vector>;

void check_layout(const DenseLayout& layout) {
    if (layout.sizes.size() < 2) throw std::invalid_argument("DenseLayout: need at least input and output sizes");
    for (int s : layout.sizes)
        if (s <= 0) throw std::invalid_argument("DenseLayout: layer sizes must be positive");
}

}  // namespace

std::size_t DenseLayout::param_count() const noexcept {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        n += static_cast<std::size_t>(sizes[l] + 1) * static_cast<std::size_t>(sizes[l + 1]);
    return n;
}

std::size_t DenseLayout::output_layer_offset() const noexcept {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 2 < sizes.size(); ++l)
        n += static_cast<std::size_t>(sizes[l] + 1) * static_cast<std::size_t>(sizes[l + 1]);
    return n;
}

DenseNet::DenseNet(DenseLayout layout) : layout_(std::move(layout)) {
    check_layout(layout_);
    params_ = Vector::Zero(static_cast<Eigen::Index>(layout_.param_count()));
}

DenseNet::DenseNet(DenseLayout layout, Vector params) : layout_(std::move(layout)), params_(std::move(params)) {
    check_layout(layout_);
    if (static_cast<std::size_t>(params_.size()) != layout_.param_count())
        throw std::invalid_argument("DenseNet: parameter vector length does not match layout");
}

DenseNet DenseNet::glorot(DenseLayout layout, Rng& rng, bool zero_output_layer) {
    DenseNet net(std::move(layout));
    glorot_init(net.layout_, {net.params_.data(), static_cast<std::size_t>(net.params_.size())}, rng,
                zero_output_layer);
    return net;
}

void glorot_init(const DenseLayout& layout, std::span<double> params, Rng& rng, bool zero_output_layer) {
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layout.num_layers(); ++l) {
        const int n_in = layout.sizes[l];
        const int n_out = layout.sizes[l + 1];
        const bool last = l + 1 == layout.num_layers();
        const double a = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
        const std::size_t nw = static_cast<std::size_t>(n_in) * static_cast<std::size_t>(n_out);
        for (std::size_t i = 0; i < nw; ++i) params[offset + i] = (last && zero_output_layer) ? 0.0 : rng.uniform(-a, a);
        offset += nw;
        for (int i = 0; i < n_out; ++i) params[offset + static_cast<std::size_t>(i)] = 0.0;
        offset += static_cast<std::size_t>(n_out);
    }
}

Matrix forward_batch(const DenseLayout& layout, std::span<const double> params, const Matrix& x, const Matrix& ctx,
                     BatchCache* cache) {
    const Eigen::Index n_x = x.cols();
    const Eigen::Index n_ctx = ctx.cols();
    if (n_x + n_ctx != layout.input_size())
        throw std::invalid_argument("forward_batch: input width " + std::to_string(n_x + n_ctx) + " != layer size " +
                                    std::to_string(layout.input_size()));
    if (n_ctx > 0 && ctx.rows() != 1 && ctx.rows() != x.rows())
        throw std::invalid_argument("forward_batch: context rows must be 1 or match the batch");
    if (params.size() != layout.param_count())
        throw std::invalid_argument("forward_batch: parameter span does not match layout");

    if (cache) cache->activations.resize(layout.num_layers());
    const std::size_t L = layout.num_layers();
    std::size_t offset = 0;
    Matrix h;
    for (std::size_t l = 0; l < L; ++l) {
        const int n_in = layout.sizes[l];
        const int n_out = layout.sizes[l + 1];
        ConstMatMap W(params.data() + offset, n_out, n_in);
        offset += static_cast<std::size_t>(n_in) * static_cast<std::size_t>(n_out);
        ConstVecMap b(params.data() + offset, n_out);
        offset += static_cast<std::size_t>(n_out);

        Matrix pre;
        if (l == 0) {
            pre.noalias() = x * W.leftCols(n_x).transpose();
            if (n_ctx > 0) {
                if (ctx.rows() == 1 && x.rows() != 1) {
                    const RowVector shared = ctx * W.rightCols(n_ctx).transpose();
                    pre.rowwise() += shared;
                } else {
                    pre.noalias() += ctx * W.rightCols(n_ctx).transpose();
                }
            }
        } else {
            pre.noalias() = h * W.transpose();
        }
        pre.rowwise() += b.transpose();
        if (l + 1 < L) pre = pre.array().tanh();
        if (cache) cache->activations[l] = pre;
        h = std::move(pre);
    }
    return h;
}

void backward_batch(const DenseLayout& layout, std::span<const double> params, const Matrix& x, const Matrix& ctx,
                    const BatchCache& cache, const Matrix& grad_out, std::span<double> param_grad, Matrix* grad_x) {
    const std::size_t L = layout.num_layers();
    if (cache.activations.size() != L) throw std::invalid_argument("backward_batch: cache does not match layout");
    if (param_grad.size() != layout.param_count())
        throw std::invalid_argument("backward_batch: gradient span does not match layout");

    std::vector<std::size_t> offsets(L);
    std::size_t offset = 0;
    for (std::size_t l = 0; l < L; ++l) {
        offsets[l] = offset;
        offset += static_cast<std::size_t>(layout.sizes[l] + 1) * static_cast<std::size_t>(layout.sizes[l + 1]);
    }

    const Eigen::Index n_x = x.cols();
    const Eigen::Index n_ctx = ctx.cols();
    Matrix g = grad_out;
    for (std::size_t li = L; li-- > 0;) {
        const int n_in = layout.sizes[li];
        const int n_out = layout.sizes[li + 1];
        ConstMatMap W(params.data() + offsets[li], n_out, n_in);
        MatMap dW(param_grad.data() + offsets[li], n_out, n_in);
        VecMap db(param_grad.data() + offsets[li] + static_cast<std::size_t>(n_in) * n_out, n_out);

        db += g.colwise().sum().transpose();
        if (li > 0) {
            const Matrix& a_prev = cache.activations[li - 1];
            dW.noalias() += g.transpose() * a_prev;
            Matrix g_prev = g * W;
            g = (g_prev.array() * (1.0 - a_prev.array().square())).matrix();
        } else {
            dW.leftCols(n_x).noalias() += g.transpose() * x;
            if (n_ctx > 0) {
                if (ctx.rows() == 1 && x.rows() != 1) {
                    dW.rightCols(n_ctx).noalias() += g.colwise().sum().transpose() * ctx;
                } else {
                    dW.rightCols(n_ctx).noalias() += g.transpose() * ctx;
                }
            }
            if (grad_x) grad_x->noalias() = g * W.leftCols(n_x);
        }
    }
}

Vector net_forward(const DenseNet& net, std::span<const double> input) {
    if (static_cast<int>(input.size()) != net.layout().input_size())
        throw std::invalid_argument("net_forward: input length " + std::to_string(input.size()) +
                                    " does not match layer size " + std::to_string(net.layout().input_size()));
    const Matrix x = Eigen::Map<const RowVector>(input.data(), static_cast<Eigen::Index>(input.size()));
    const Matrix out = forward_batch(net.layout(), {net.params().data(), static_cast<std::size_t>(net.params().size())},
                                     x, Matrix(1, 0));
    return out.row(0).transpose();
}

NetGradients net_backward(const DenseNet& net, std::span<const double> input, std::span<const double> output_gradient) {
    if (static_cast<int>(input.size()) != net.layout().input_size() ||
        static_cast<int>(output_gradient.size()) != net.layout().output_size())
        throw std::invalid_argument("net_backward: input or output-gradient length does not match the layout");
    const std::span<const double> params{net.params().data(), static_cast<std::size_t>(net.params().size())};
    const Matrix x = Eigen::Map<const RowVector>(input.data(), static_cast<Eigen::Index>(input.size()));
    const Matrix empty(1, 0);
    BatchCache cache;
    forward_batch(net.layout(), params, x, empty, &cache);
    const Matrix g =
        Eigen::Map<const RowVector>(output_gradient.data(), static_cast<Eigen::Index>(output_gradient.size()));
    NetGradients out;
    out.params = Vector::Zero(net.params().size());
    Matrix gx;
    backward_batch(net.layout(), params, x, empty, cache, g, {out.params.data(), static_cast<std::size_t>(out.params.size())},
                   &gx);
    out.input = gx.row(0).transpose();
    return out;
}

OptimizerState::OptimizerState(std::size_t n, AdamConfig cfg)
    : first_moment(Vector::Zero(static_cast<Eigen::Index>(n))),
      second_moment(Vector::Zero(static_cast<Eigen::Index>(n))),
      config(cfg) {}

void optimizer_step(OptimizerState& state, Eigen::Ref<Vector> params, const Vector& grads) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw std::invalid_argument("optimizer_step: parameter, gradient and state lengths differ");
    if (!grads.allFinite()) throw NumericalError("optimizer_step: non-finite gradient (training diverged)");

    const auto& c = state.config;
    state.step += 1;
    state.first_moment = c.beta1 * state.first_moment + (1.0 - c.beta1) * grads;
    state.second_moment = c.beta2 * state.second_moment + (1.0 - c.beta2) * grads.cwiseAbs2();
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    params.array() -= c.step_size * (state.first_moment.array() / bc1) /
                      ((state.second_moment.array() / bc2).sqrt() + c.epsilon);
}

}  // namespace flowplan
