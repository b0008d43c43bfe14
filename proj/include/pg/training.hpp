#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pg/geometry.hpp"
#include "pg/network.hpp"
#include "pg/tensor.hpp"

namespace pg {

struct TrainConfig {
    std::size_t epochs = 100;
    double lr0 = 0.02;
    double decay = 0.95; // per-epoch multiplicative factor
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    bool class_weighted = false;      // inverse-frequency cross-entropy weights
    std::size_t checkpoint_every = 10;

    void validate() const;
};

double lr_at(std::size_t epoch, const TrainConfig& cfg);

/// Bias-corrected Adam over a parameter registry.
class AdamOptimizer {
public:
    AdamOptimizer(const TrainConfig& cfg) : cfg_(cfg) {}

    /// One update from the gradients currently stored on the parameters.
    void step(ParamRegistry& reg, double lr);

    std::size_t steps_taken() const { return t_; }

    // Raw state access for checkpointing.
    struct State {
        std::vector<double> m, v;
    };
    std::vector<State>& states() { return states_; }
    std::size_t& step_counter() { return t_; }

private:
    TrainConfig cfg_;
    std::vector<State> states_;
    std::size_t t_ = 0;
};

struct EvalReport {
    std::vector<std::size_t> confusion; // C*C, row = truth, col = prediction
    std::size_t num_classes = 0;
    double oa = 0.0;
    double macc = 0.0;
    double miou = 0.0;
    std::vector<double> per_class_iou; // NaN for classes absent everywhere

    std::size_t at(std::size_t truth, std::size_t pred) const {
        return confusion[truth * num_classes + pred];
    }
};

/// Derives OA / mAcc / mIoU from a confusion matrix; classes absent from
/// both truth and prediction are excluded from the means.
EvalReport report_from_confusion(std::vector<std::size_t> confusion, std::size_t num_classes);

EvalReport evaluate(SegmentationNetwork& net, const std::vector<PointCloud>& dataset);

struct EpochLog {
    std::size_t epoch = 0;
    double lr = 0.0;
    double mean_loss = 0.0;
    double train_oa = 0.0;
    double val_oa = 0.0;   // NaN when no validation set
    double val_miou = 0.0; // NaN when no validation set
};

struct TrainResult {
    std::vector<EpochLog> log;
};

/// Batch-size-1 training loop: per epoch, a seeded shuffle of the dataset
/// and one optimizer step per cloud. `on_epoch`, when set, runs after each
/// epoch (checkpointing hook). `start_epoch` supports resumed runs.
TrainResult train(SegmentationNetwork& net, AdamOptimizer& opt,
                  const std::vector<PointCloud>& dataset, const TrainConfig& cfg,
                  const std::vector<PointCloud>* val_set = nullptr,
                  std::size_t start_epoch = 0,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Inverse-frequency class weights over a labeled dataset, normalized to
/// mean 1; unseen classes get weight 1.
std::vector<double> inverse_frequency_weights(const std::vector<PointCloud>& dataset,
                                              std::size_t num_classes);

std::string train_log_csv_header();
std::string train_log_csv_row(const EpochLog& row);

} // namespace pg
