#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "flowplan/dataset.hpp"
#include "flowplan/flow.hpp"

namespace flowplan {

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    double step_size = 1e-3;
    double prior_variance = 1.0;
    /// Weight of the prior term relative to the mean per-row loss. Zero means 1 / (number of training rows).
    double prior_weight = 0.0;
    double mask_init = 0.25;
    double mask_target = 0.25;
    std::size_t max_step_reductions = 3;
    bool record_time = true;
    std::uint64_t seed = 0;
};

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_nll;
    std::vector<double> grad_norm;
    std::vector<double> seconds;
    double initial_val_nll = 0.0;
    std::size_t best_epoch = 0;  // 0 = the initial model
    std::size_t step_reductions = 0;

    std::size_t epochs() const noexcept { return train_loss.size(); }
};

struct LossResult {
    double loss = 0.0;
    Vector gradient;
};

/// Mean over rows of 0.5 |z|^2 - log|J| plus prior_weight * |theta|^2 / (2 prior_variance).
/// Throws NumericalError when the loss or its gradient is not finite.
LossResult loss(const FlowModel& model, const Matrix& q, const Matrix& ctx, double prior_variance,
                double prior_weight = 1.0);

/// Mean negative log-likelihood of the rows (no prior term).
double evaluate_nll(const FlowModel& model, const Matrix& q, const Matrix& ctx);

/// Replace q_init / q_target in one context row by the sentinel and clear its mask bit.
void mask_context_init(Matrix& ctx, Eigen::Index row, std::size_t dim);
void mask_context_target(Matrix& ctx, Eigen::Index row, std::size_t dim);

using EpochCallback = std::function<void(std::size_t epoch, const TrainReport&)>;

/// Minibatch training with best-validation checkpointing. `model` supplies the
/// layout and initial parameters; the returned model holds the best parameters seen.
FlowModel train(FlowModel model, const TrainingRows& train_rows, const TrainingRows& val_rows,
                const TrainConfig& config, TrainReport* report = nullptr, const EpochCallback& on_epoch = {});

/// Trains a fresh model for the dataset's robot on its train/validation splits.
/// Without validation rows the training rows are used for checkpoint selection.
FlowModel train(const Dataset& dataset, const TrainConfig& config, TrainReport* report = nullptr,
                const EpochCallback& on_epoch = {});

/// epoch,train_loss,val_nll,grad_norm,seconds (epoch 0 = initial model).
void write_report_csv(const TrainReport& report, const std::filesystem::path& path);

}  // namespace flowplan
