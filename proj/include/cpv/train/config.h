#pragma once

// Flat key=value training configuration.
//
//   # comment
//   mode = cpv
//   lambda_hom = 1
//
// Unknown keys, duplicate keys and malformed values are errors.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "cpv/model/cpv_model.h"

namespace cpv::train {

class ConfigError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    model::ConditioningMode mode = model::ConditioningMode::Cpv;
    double lambda_hom = 1.0;
    double lambda_pair = 1.0;
    int embed_dim = 512;
    double lr = 1e-4;
    int batch_size = 32;
    int epochs = 20;
    // 0: one sampled batch per training pair.
    int steps_per_epoch = 0;
    std::uint64_t seed = 1;
    std::string dataset;
    std::string checkpoint = "model.cpvm";
    std::string metrics = "metrics.csv";
    // Metrics row every this many epochs (the last epoch always logs).
    int eval_every = 1;
    // Fixed probe batches for the train/validation loss columns.
    int probe_batches = 4;
    // Timesteps per split for teacher-forced accuracy; 0 means all.
    int accuracy_samples = 2000;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);
// Inverse of parse_config; every key is written.
std::string format_config(const TrainConfig& cfg);
// Throws ConfigError naming the first offending field.
void validate(const TrainConfig& cfg);

}  // namespace cpv::train
