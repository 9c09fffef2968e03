#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpv/model/cpv_model.h"
#include "cpv/planner/dataset.h"
#include "cpv/train/config.h"

namespace cpv::train {

class NonFiniteLoss : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

// Samples `batch_size` (pair, timestep) items: pair uniform over `pairs`,
// t uniform in [0, H-1], split uniform in [1, H-1] (1 when H = 1). Each
// item's negative is a uniformly chosen slot holding a different pair, or
// -1 when the batch holds a single pair. Views point into `ds`.
model::TrainBatch make_batch(const planner::Dataset& ds, std::span<const std::size_t> pairs, std::uint64_t seed,
                             int batch_size);
model::TrainBatch make_batch(const planner::Dataset& ds, std::uint64_t seed, int batch_size);

// Teacher-forced accuracy over explicit (pair, timestep) samples.
struct StepRef {
    std::size_t pair = 0;
    std::uint32_t t = 0;
};
std::vector<StepRef> all_steps(const planner::Dataset& ds, std::span<const std::size_t> pairs);
double teacher_forced_accuracy(model::CpvModel<float>& m, const planner::Dataset& ds, std::span<const StepRef> steps);

struct LossSummary {
    double il = 0.0;
    double hom = 0.0;
    double pair = 0.0;
    double total = 0.0;
};

// Mean losses over fixed batches; hom/pair are NaN when not computable.
LossSummary evaluate_losses(model::CpvModel<float>& m, std::span<const model::TrainBatch> batches,
                            const model::LossWeights& w);

struct MetricsRow {
    int epoch = 0;
    std::uint64_t step = 0;
    // Mean optimised total over the steps since the previous row.
    double running_total = 0.0;
    LossSummary train;
    LossSummary val;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double seconds = 0.0;
};

std::string metrics_header();
std::string format_metrics_row(const MetricsRow& r);

struct TrainResult {
    std::vector<MetricsRow> rows;
    int best_epoch = 0;
    double best_val_il = 0.0;
    std::uint64_t steps = 0;
    std::filesystem::path final_checkpoint;
    std::filesystem::path best_checkpoint;
};

// Best checkpoint path: "<checkpoint>.best".
std::filesystem::path best_checkpoint_path(const TrainConfig& cfg);
std::uint64_t steps_per_epoch(const TrainConfig& cfg, std::span<const std::size_t> train);

// Row 0 is the freshly initialised model. Writes the metrics CSV (and a
// "<metrics>.timing.csv" sidecar with wall-clock seconds) after each row.
TrainResult train(const TrainConfig& cfg);
TrainResult train(const TrainConfig& cfg, const planner::Dataset& ds);

}  // namespace cpv::train
