#include "flowplan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "flowplan/errors.hpp"
#include "flowplan/random.hpp"
#include "io_util.hpp"

namespace flowplan {

namespace {

constexpr Eigen::Index kEvalChunk = 4096;

Matrix gather(const Matrix& m, const std::vector<std::size_t>& idx, std::size_t from, std::size_t to) {
    Matrix out(static_cast<Eigen::Index>(to - from), m.cols());
    for (std::size_t i = from; i < to; ++i) out.row(static_cast<Eigen::Index>(i - from)) = m.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

void check_rows(const Matrix& q, const Matrix& ctx, const FlowModel& model, const char* where) {
    if (q.rows() == 0) throw std::invalid_argument(std::string(where) + ": no rows");
    if (q.cols() != model.dim() || ctx.cols() != model.layout().context_dim || ctx.rows() != q.rows())
        throw std::invalid_argument(std::string(where) + ": row shapes do not match the model layout");
}

}  // namespace

LossResult loss(const FlowModel& model, const Matrix& q, const Matrix& ctx, double prior_variance,
                double prior_weight) {
    check_rows(q, ctx, model, "loss");
    const auto n = static_cast<double>(q.rows());

    Vector pre_logdet = Vector::Zero(q.rows());
    const Matrix x = model.to_unbounded(q, pre_logdet);
    std::vector<CouplingCache> caches;
    const FlowPass pass = model.forward_cached(x, ctx, caches);

    const Vector per_row = 0.5 * pass.out.rowwise().squaredNorm() - pass.logdet - pre_logdet;
    const Vector theta = model.parameters();

    LossResult r;
    r.loss = per_row.mean() + prior_weight * theta.squaredNorm() / (2.0 * prior_variance);
    if (!std::isfinite(r.loss)) throw NumericalError("loss: non-finite value (training diverged)");

    r.gradient = (prior_weight / prior_variance) * theta;
    std::vector<std::span<double>> grads;
    std::size_t offset = 0;
    for (const auto& b : model.blocks()) {
        grads.emplace_back(r.gradient.data() + offset, b.param_count());
        offset += b.param_count();
    }
    model.backward(ctx, caches, pass.out / n, Vector::Constant(q.rows(), -1.0 / n), grads);
    if (!r.gradient.allFinite()) throw NumericalError("loss: non-finite gradient (training diverged)");
    return r;
}

double evaluate_nll(const FlowModel& model, const Matrix& q, const Matrix& ctx) {
    check_rows(q, ctx, model, "evaluate_nll");
    double total = 0.0;
    for (Eigen::Index start = 0; start < q.rows(); start += kEvalChunk) {
        const Eigen::Index len = std::min(kEvalChunk, q.rows() - start);
        total += model.log_prob(q.middleRows(start, len), ctx.middleRows(start, len)).sum();
    }
    return -total / static_cast<double>(q.rows());
}

void mask_context_init(Matrix& ctx, Eigen::Index row, std::size_t dim) {
    const auto D = static_cast<Eigen::Index>(dim);
    const Eigen::Index base = 2 * kEncodingPoints;
    ctx.row(row).segment(base, D).setConstant(kEncodingSentinel);
    ctx(row, base + D) = 0.0;
}

void mask_context_target(Matrix& ctx, Eigen::Index row, std::size_t dim) {
    const auto D = static_cast<Eigen::Index>(dim);
    const Eigen::Index base = 2 * kEncodingPoints + D + 1;
    ctx.row(row).segment(base, D).setConstant(kEncodingSentinel);
    ctx(row, base + D) = 0.0;
}

FlowModel train(FlowModel model, const TrainingRows& train_rows, const TrainingRows& val_rows,
                const TrainConfig& config, TrainReport* report, const EpochCallback& on_epoch) {
    if (config.batch_size == 0 || !(config.step_size > 0.0) || !(config.prior_variance > 0.0) ||
        config.prior_weight < 0.0)
        throw std::invalid_argument("train: batch size, step size and prior variance must be positive");
    if (config.mask_init < 0.0 || config.mask_init >= 1.0 || config.mask_target < 0.0 || config.mask_target >= 1.0)
        throw std::invalid_argument("train: mask probabilities must lie in [0, 1)");
    check_rows(train_rows.q, train_rows.ctx, model, "train");
    check_rows(val_rows.q, val_rows.ctx, model, "train (validation)");

    TrainReport local;
    TrainReport& rep = report ? *report : local;
    rep = TrainReport{};

    const std::size_t n = train_rows.size();
    const std::size_t dim = static_cast<std::size_t>(model.dim());
    const double prior_weight = config.prior_weight > 0.0 ? config.prior_weight : 1.0 / static_cast<double>(n);

    Vector params = model.parameters();
    Vector best = params;
    double best_nll = evaluate_nll(model, val_rows.q, val_rows.ctx);
    rep.initial_val_nll = best_nll;

    AdamConfig adam;
    adam.step_size = config.step_size;
    OptimizerState opt(params.size(), adam);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto t0 = std::chrono::steady_clock::now();

    for (std::size_t epoch = 1; epoch <= config.epochs;) {
        Rng rng(derive_seed(config.seed, {epoch, rep.step_reductions}));
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        double loss_sum = 0.0, grad_sum = 0.0;
        std::size_t batches = 0;
        const Vector epoch_start = params;
        try {
            for (std::size_t from = 0; from < n; from += config.batch_size) {
                const std::size_t to = std::min(n, from + config.batch_size);
                const Matrix q = gather(train_rows.q, order, from, to);
                Matrix ctx = gather(train_rows.ctx, order, from, to);
                for (Eigen::Index r = 0; r < ctx.rows(); ++r) {
                    if (rng.uniform() < config.mask_init) mask_context_init(ctx, r, dim);
                    if (rng.uniform() < config.mask_target) mask_context_target(ctx, r, dim);
                }
                const LossResult lr = loss(model, q, ctx, config.prior_variance, prior_weight);
                optimizer_step(opt, params, lr.gradient);
                model.set_parameters(params);
                loss_sum += lr.loss;
                grad_sum += lr.gradient.norm();
                ++batches;
            }
            const double val = evaluate_nll(model, val_rows.q, val_rows.ctx);
            if (!std::isfinite(val)) throw NumericalError("train: validation NLL is not finite");

            rep.train_loss.push_back(loss_sum / static_cast<double>(batches));
            rep.val_nll.push_back(val);
            rep.grad_norm.push_back(grad_sum / static_cast<double>(batches));
            rep.seconds.push_back(
                config.record_time ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                                   : 0.0);
            if (val < best_nll) {
                best_nll = val;
                best = params;
                rep.best_epoch = epoch;
            }
            if (on_epoch) on_epoch(epoch, rep);
            ++epoch;
        } catch (const NumericalError&) {
            if (rep.step_reductions >= config.max_step_reductions) throw;
            ++rep.step_reductions;
            adam.step_size *= 0.5;
            opt = OptimizerState(params.size(), adam);
            params = rep.best_epoch > 0 ? best : epoch_start;
            model.set_parameters(params);
        }
    }
    model.set_parameters(best);
    return model;
}

FlowModel train(const Dataset& dataset, const TrainConfig& config, TrainReport* report,
                const EpochCallback& on_epoch) {
    const TrainingRows tr = training_rows(dataset, Split::Train);
    TrainingRows va = training_rows(dataset, Split::Validation);
    if (tr.size() == 0) throw std::invalid_argument("train: dataset has no training rows");
    if (va.size() == 0) va = tr;
    FlowModel model(FlowLayout::for_robot(dataset.robot), derive_seed(config.seed, {0x1417}));
    model = train(std::move(model), tr, va, config, report, on_epoch);
    auto& meta = model.metadata();
    meta["robot"] = std::string(to_string(dataset.robot));
    meta["dataset_seed"] = std::to_string(dataset.seed);
    meta["train_seed"] = std::to_string(config.seed);
    meta["epochs"] = std::to_string(config.epochs);
    meta["train_rows"] = std::to_string(tr.size());
    meta["validation_rows"] = std::to_string(va.size());
    meta["environments"] = std::to_string(dataset.environments.size());
    if (report) {
        meta["best_epoch"] = std::to_string(report->best_epoch);
        const double v = report->best_epoch > 0 ? report->val_nll[report->best_epoch - 1] : report->initial_val_nll;
        meta["best_val_nll"] = std::to_string(v);
    }
    return model;
}

void write_report_csv(const TrainReport& report, const std::filesystem::path& path) {
    std::string out = "epoch,train_loss,val_nll,grad_norm,seconds\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "0,,%.10g,,0\n", report.initial_val_nll);
    out += buf;
    for (std::size_t i = 0; i < report.epochs(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.6f\n", i + 1, report.train_loss[i], report.val_nll[i],
                      report.grad_norm[i], report.seconds[i]);
        out += buf;
    }
    detail::write_file(path, out);
}

}  // namespace flowplan
