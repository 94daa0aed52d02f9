#include "flowplan/flow.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "flowplan/errors.hpp"

namespace flowplan {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_finite(const Matrix& m, const char* where) {
    if (!m.allFinite()) throw NumericalError(std::string(where) + ": non-finite value (numerical blow-up)");
}

// Swap halves between blocks: [z_a, z_b] -> [z_b, z_a].
Matrix rotate_left(const Matrix& z, int k) {
    Matrix out(z.rows(), z.cols());
    const auto D = z.cols();
    out.leftCols(D - k) = z.rightCols(D - k);
    out.rightCols(k) = z.leftCols(k);
    return out;
}

}  // namespace

std::size_t context_dim(std::size_t dim) noexcept { return 2 * kEncodingPoints + 2 * dim + 2; }

RowVector context_vector(const ConditioningContext& ctx, std::size_t dim) {
    if (ctx.omega.points.size() != 2 * kEncodingPoints)
        throw std::invalid_argument("context_vector: workspace encoding has the wrong length");
    RowVector v(static_cast<Eigen::Index>(context_dim(dim)));
    Eigen::Index k = 0;
    for (double p : ctx.omega.points) v[k++] = p;
    const auto put = [&](const std::optional<Config>& q) {
        if (q && q->size() != dim) throw std::invalid_argument("context_vector: endpoint dimension mismatch");
        for (std::size_t i = 0; i < dim; ++i) v[k++] = q ? (*q)[i] : kEncodingSentinel;
        v[k++] = q ? 1.0 : 0.0;
    };
    put(ctx.q_init);
    put(ctx.q_target);
    return v;
}

FlowLayout FlowLayout::for_robot(RobotKind robot) {
    FlowLayout l;
    l.dim = static_cast<int>(robot_dims(robot));
    l.context_dim = static_cast<int>(flowplan::context_dim(robot_dims(robot)));
    return l;
}

CouplingBlock::CouplingBlock(int dim, int split, int context_dim, const std::vector<int>& hidden, double clamp)
    : dim_(dim), split_(split), context_dim_(context_dim), clamp_(clamp) {
    if (split < 1 || split >= dim) throw std::invalid_argument("CouplingBlock: split must satisfy 1 <= split < dim");
    if (context_dim < 0 || !(clamp > 0.0)) throw std::invalid_argument("CouplingBlock: bad context size or clamp");
    const auto make = [&](int in, int out) {
        DenseLayout l;
        l.sizes.push_back(in + context_dim);
        l.sizes.insert(l.sizes.end(), hidden.begin(), hidden.end());
        l.sizes.push_back(out);
        return l;
    };
    layouts_[kScaleA] = make(dim - split, split);
    layouts_[kShiftA] = make(dim - split, split);
    layouts_[kScaleB] = make(split, dim - split);
    layouts_[kShiftB] = make(split, dim - split);
    std::size_t offset = 0;
    for (int i = 0; i < 4; ++i) {
        offsets_[i] = offset;
        offset += layouts_[i].param_count();
    }
    params_ = Vector::Zero(static_cast<Eigen::Index>(offset));
}

std::span<double> CouplingBlock::net_params(Net which) noexcept {
    return {params_.data() + offsets_[which], layouts_[which].param_count()};
}

std::span<const double> CouplingBlock::net_params(Net which) const noexcept {
    return {params_.data() + offsets_[which], layouts_[which].param_count()};
}

void CouplingBlock::initialize(Rng& rng, bool random_outputs) {
    for (int i = 0; i < 4; ++i) glorot_init(layouts_[i], net_params(static_cast<Net>(i)), rng, !random_outputs);
}

Matrix CouplingBlock::forward(const Matrix& z, const Matrix& ctx, Vector& logdet, CouplingCache* cache) const {
    if (z.cols() != dim_) throw std::invalid_argument("CouplingBlock::forward: input width != dim");
    const Matrix a = z.leftCols(split_);
    const Matrix b = z.rightCols(dim_ - split_);
    BatchCache* nc = cache ? cache->nets.data() : nullptr;

    const Matrix s_a = clamp_ * (forward_batch(layouts_[kScaleA], net_params(kScaleA), b, ctx, nc ? nc + 0 : nullptr).array() / clamp_).tanh();
    const Matrix t_a = forward_batch(layouts_[kShiftA], net_params(kShiftA), b, ctx, nc ? nc + 1 : nullptr);
    const Matrix exp_a = s_a.array().exp();
    const Matrix a_next = (a.array() * exp_a.array() + t_a.array()).matrix();

    const Matrix s_b = clamp_ * (forward_batch(layouts_[kScaleB], net_params(kScaleB), a_next, ctx, nc ? nc + 2 : nullptr).array() / clamp_).tanh();
    const Matrix t_b = forward_batch(layouts_[kShiftB], net_params(kShiftB), a_next, ctx, nc ? nc + 3 : nullptr);
    const Matrix exp_b = s_b.array().exp();

    Matrix out(z.rows(), dim_);
    out.leftCols(split_) = a_next;
    out.rightCols(dim_ - split_) = (b.array() * exp_b.array() + t_b.array()).matrix();
    require_finite(out, "coupling forward");

    logdet += s_a.rowwise().sum() + s_b.rowwise().sum();
    if (cache) {
        cache->a = a;
        cache->b = b;
        cache->a_next = a_next;
        cache->s_a = s_a;
        cache->s_b = s_b;
        cache->exp_s_a = exp_a;
        cache->exp_s_b = exp_b;
    }
    return out;
}

Matrix CouplingBlock::inverse(const Matrix& z_next, const Matrix& ctx, Vector& logdet) const {
    if (z_next.cols() != dim_) throw std::invalid_argument("CouplingBlock::inverse: input width != dim");
    const Matrix a_next = z_next.leftCols(split_);
    const Matrix b_next = z_next.rightCols(dim_ - split_);

    const Matrix s_b = clamp_ * (forward_batch(layouts_[kScaleB], net_params(kScaleB), a_next, ctx).array() / clamp_).tanh();
    const Matrix t_b = forward_batch(layouts_[kShiftB], net_params(kShiftB), a_next, ctx);
    const Matrix b = ((b_next - t_b).array() * (-s_b.array()).exp()).matrix();

    const Matrix s_a = clamp_ * (forward_batch(layouts_[kScaleA], net_params(kScaleA), b, ctx).array() / clamp_).tanh();
    const Matrix t_a = forward_batch(layouts_[kShiftA], net_params(kShiftA), b, ctx);

    Matrix out(z_next.rows(), dim_);
    out.leftCols(split_) = ((a_next - t_a).array() * (-s_a.array()).exp()).matrix();
    out.rightCols(dim_ - split_) = b;
    require_finite(out, "coupling inverse");
    logdet -= s_a.rowwise().sum() + s_b.rowwise().sum();
    return out;
}

Matrix CouplingBlock::backward(const Matrix& ctx, const CouplingCache& c, const Matrix& grad_z_next,
                               const Vector& grad_logdet, std::span<double> param_grad) const {
    if (param_grad.size() != param_count()) throw std::invalid_argument("CouplingBlock::backward: gradient length");
    const auto grad_span = [&](Net which) {
        return std::span<double>(param_grad.data() + offsets_[which], layouts_[which].param_count());
    };
    const Matrix g_a_next_direct = grad_z_next.leftCols(split_);
    const Matrix g_b_next = grad_z_next.rightCols(dim_ - split_);

    // b' = b * exp(s_b(a')) + t_b(a')
    Matrix g_b = (g_b_next.array() * c.exp_s_b.array()).matrix();
    Matrix g_s_b = (g_b_next.array() * c.b.array() * c.exp_s_b.array()).matrix();
    g_s_b.colwise() += grad_logdet;
    const Matrix g_raw_b = (g_s_b.array() * (1.0 - (c.s_b.array() / clamp_).square())).matrix();

    Matrix gx_sb, gx_tb;
    backward_batch(layouts_[kScaleB], net_params(kScaleB), c.a_next, ctx, c.nets[kScaleB], g_raw_b, grad_span(kScaleB), &gx_sb);
    backward_batch(layouts_[kShiftB], net_params(kShiftB), c.a_next, ctx, c.nets[kShiftB], g_b_next, grad_span(kShiftB), &gx_tb);
    const Matrix g_a_next = g_a_next_direct + gx_sb + gx_tb;

    // a' = a * exp(s_a(b)) + t_a(b)
    Matrix out(grad_z_next.rows(), dim_);
    out.leftCols(split_) = (g_a_next.array() * c.exp_s_a.array()).matrix();
    Matrix g_s_a = (g_a_next.array() * c.a.array() * c.exp_s_a.array()).matrix();
    g_s_a.colwise() += grad_logdet;
    const Matrix g_raw_a = (g_s_a.array() * (1.0 - (c.s_a.array() / clamp_).square())).matrix();

    Matrix gx_sa, gx_ta;
    backward_batch(layouts_[kScaleA], net_params(kScaleA), c.b, ctx, c.nets[kScaleA], g_raw_a, grad_span(kScaleA), &gx_sa);
    backward_batch(layouts_[kShiftA], net_params(kShiftA), c.b, ctx, c.nets[kShiftA], g_a_next, grad_span(kShiftA), &gx_ta);
    out.rightCols(dim_ - split_) = g_b + gx_sa + gx_ta;
    return out;
}

std::pair<Vector, double> coupling_forward(const CouplingBlock& block, std::span<const double> z,
                                           std::span<const double> ctx) {
    if (static_cast<int>(z.size()) != block.dim() || static_cast<int>(ctx.size()) != block.context_dim())
        throw std::invalid_argument("coupling_forward: input or context length mismatch");
    const Matrix zm = Eigen::Map<const RowVector>(z.data(), static_cast<Eigen::Index>(z.size()));
    const Matrix cm = Eigen::Map<const RowVector>(ctx.data(), static_cast<Eigen::Index>(ctx.size()));
    Vector ld = Vector::Zero(1);
    const Matrix out = block.forward(zm, cm, ld);
    return {out.row(0).transpose(), ld[0]};
}

std::pair<Vector, double> coupling_inverse(const CouplingBlock& block, std::span<const double> z_next,
                                           std::span<const double> ctx) {
    if (static_cast<int>(z_next.size()) != block.dim() || static_cast<int>(ctx.size()) != block.context_dim())
        throw std::invalid_argument("coupling_inverse: input or context length mismatch");
    const Matrix zm = Eigen::Map<const RowVector>(z_next.data(), static_cast<Eigen::Index>(z_next.size()));
    const Matrix cm = Eigen::Map<const RowVector>(ctx.data(), static_cast<Eigen::Index>(ctx.size()));
    Vector ld = Vector::Zero(1);
    const Matrix out = block.inverse(zm, cm, ld);
    return {out.row(0).transpose(), ld[0]};
}

FlowModel::FlowModel(FlowLayout layout, std::uint64_t seed) : layout_(std::move(layout)) {
    if (layout_.num_blocks < 1) throw std::invalid_argument("FlowModel: need at least one coupling block");
    if (layout_.dim < 2 || layout_.dim > static_cast<int>(kMaxDim))
        throw std::invalid_argument("FlowModel: dimension must be in [2, kMaxDim]");
    if (!(layout_.boundary_eps > 0.0 && layout_.boundary_eps < 0.5))
        throw std::invalid_argument("FlowModel: boundary epsilon must be in (0, 0.5)");
    Rng rng(seed);
    blocks_.reserve(static_cast<std::size_t>(layout_.num_blocks));
    for (int k = 0; k < layout_.num_blocks; ++k) {
        blocks_.emplace_back(layout_.dim, layout_.split(), layout_.context_dim, layout_.hidden, layout_.clamp);
        blocks_.back().initialize(rng);
    }
}

std::size_t FlowModel::param_count() const noexcept {
    std::size_t n = 0;
    for (const auto& b : blocks_) n += b.param_count();
    return n;
}

Vector FlowModel::parameters() const {
    Vector flat(static_cast<Eigen::Index>(param_count()));
    Eigen::Index k = 0;
    for (const auto& b : blocks_)
        for (double p : b.params()) flat[k++] = p;
    return flat;
}

void FlowModel::set_parameters(const Vector& flat) {
    if (static_cast<std::size_t>(flat.size()) != param_count())
        throw std::invalid_argument("FlowModel::set_parameters: length mismatch");
    Eigen::Index k = 0;
    for (auto& b : blocks_)
        for (double& p : b.params()) p = flat[k++];
}

Matrix FlowModel::to_unbounded(const Matrix& q, Vector& logdet) const {
    if (q.cols() != layout_.dim) throw std::invalid_argument("FlowModel: configuration width != dim");
    const double eps = layout_.boundary_eps;
    const Eigen::ArrayXXd qc = q.array().max(eps).min(1.0 - eps);
    logdet -= (qc * (1.0 - qc)).log().rowwise().sum().matrix();
    return (qc.log() - (-qc).log1p()).matrix();
}

FlowPass FlowModel::forward(const Matrix& x, const Matrix& ctx) const {
    FlowPass pass{x, Vector::Zero(x.rows())};
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        if (k > 0) pass.out = rotate_left(pass.out, layout_.split());
        pass.out = blocks_[k].forward(pass.out, ctx, pass.logdet);
    }
    return pass;
}

FlowPass FlowModel::forward_cached(const Matrix& x, const Matrix& ctx, std::vector<CouplingCache>& caches) const {
    caches.resize(blocks_.size());
    FlowPass pass{x, Vector::Zero(x.rows())};
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        if (k > 0) pass.out = rotate_left(pass.out, layout_.split());
        pass.out = blocks_[k].forward(pass.out, ctx, pass.logdet, &caches[k]);
    }
    return pass;
}

void FlowModel::backward(const Matrix& ctx, const std::vector<CouplingCache>& caches, const Matrix& grad_z,
                         const Vector& grad_logdet, std::vector<std::span<double>>& param_grads) const {
    if (caches.size() != blocks_.size() || param_grads.size() != blocks_.size())
        throw std::invalid_argument("FlowModel::backward: caches/gradients do not match block count");
    Matrix g = grad_z;
    for (std::size_t k = blocks_.size(); k-- > 0;) {
        g = blocks_[k].backward(ctx, caches[k], g, grad_logdet, param_grads[k]);
        if (k > 0) g = rotate_left(g, layout_.dim - layout_.split());
    }
}

FlowPass FlowModel::inverse(const Matrix& z, const Matrix& ctx) const {
    FlowPass pass{z, Vector::Zero(z.rows())};
    for (std::size_t k = blocks_.size(); k-- > 0;) {
        pass.out = blocks_[k].inverse(pass.out, ctx, pass.logdet);
        if (k > 0) pass.out = rotate_left(pass.out, layout_.dim - layout_.split());
    }
    return pass;
}

Vector FlowModel::log_prob(const Matrix& q, const Matrix& ctx) const {
    Vector logdet = Vector::Zero(q.rows());
    const Matrix x = to_unbounded(q, logdet);
    const FlowPass pass = forward(x, ctx);
    return ((-0.5 * pass.out.rowwise().squaredNorm()).array() - layout_.dim * kHalfLog2Pi + logdet.array() +
            pass.logdet.array())
        .matrix();
}

double FlowModel::log_prob(const Config& q, const RowVector& ctx) const {
    const Matrix qm = Eigen::Map<const RowVector>(q.data(), static_cast<Eigen::Index>(q.size()));
    return log_prob(qm, Matrix(ctx))[0];
}

Matrix FlowModel::decode(const Matrix& z, const Matrix& ctx) const {
    const FlowPass pass = inverse(z, ctx);
    const double eps = layout_.boundary_eps;
    return (1.0 / (1.0 + (-pass.out.array()).exp())).max(eps).min(1.0 - eps).matrix();
}

Matrix FlowModel::sample_matrix(const RowVector& ctx, std::size_t n, std::uint64_t seed) const {
    if (n == 0) throw std::invalid_argument("FlowModel::sample: n must be at least 1");
    Rng rng(seed);
    Matrix z(static_cast<Eigen::Index>(n), layout_.dim);
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
    return decode(z, Matrix(ctx));
}

std::vector<Config> FlowModel::sample(const RowVector& ctx, std::size_t n, std::uint64_t seed) const {
    const Matrix q = sample_matrix(ctx, n, seed);
    std::vector<Config> out;
    out.reserve(n);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        Config c(static_cast<std::size_t>(q.cols()));
        for (Eigen::Index j = 0; j < q.cols(); ++j) c[static_cast<std::size_t>(j)] = q(i, j);
        out.push_back(c);
    }
    return out;
}

double logdet_analytic(const FlowModel& model, const Config& q, const RowVector& ctx) {
    const Matrix qm = Eigen::Map<const RowVector>(q.data(), static_cast<Eigen::Index>(q.size()));
    Vector ld = Vector::Zero(1);
    const Matrix x = model.to_unbounded(qm, ld);
    return ld[0] + model.forward(x, Matrix(ctx)).logdet[0];
}

double logdet_numeric_check(const FlowModel& model, const Config& q, const RowVector& ctx, double step) {
    const auto D = static_cast<Eigen::Index>(q.size());
    if (D > 4) throw std::invalid_argument("logdet_numeric_check: intended for D <= 4");
    // Stack +h / -h perturbations per coordinate into one batch.
    Matrix probes(2 * D, D);
    for (Eigen::Index j = 0; j < D; ++j) {
        for (Eigen::Index i = 0; i < D; ++i) probes(2 * j, i) = probes(2 * j + 1, i) = q[static_cast<std::size_t>(i)];
        probes(2 * j, j) += step;
        probes(2 * j + 1, j) -= step;
    }
    Vector unused = Vector::Zero(2 * D);
    const Matrix z = model.forward(model.to_unbounded(probes, unused), Matrix(ctx)).out;
    Matrix jac(D, D);
    for (Eigen::Index j = 0; j < D; ++j) jac.col(j) = (z.row(2 * j) - z.row(2 * j + 1)).transpose() / (2.0 * step);
    return std::log(std::abs(jac.fullPivLu().determinant()));
}

}  // namespace flowplan
