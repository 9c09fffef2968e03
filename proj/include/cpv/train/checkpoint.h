#pragma once

// Model checkpoint file.
//
//   "CPVM" | version u32 | mode u8 | embed_dim u32 | n_params u32
//   per parameter: name length u32 | name | rank u8 | dims u32[rank]
//   per parameter: float32 values
//   has_adam u8 [ | step u64 | lr, beta1, beta2, eps as u64 bit patterns
//                 | per parameter: m values | v values ]

#include <filesystem>
#include <optional>

#include "cpv/common/binary_io.h"
#include "cpv/model/cpv_model.h"
#include "cpv/nn/adam.h"

namespace cpv::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public FormatError {
 public:
    using FormatError::FormatError;
};

struct Checkpoint {
    model::CpvModel<float> model;
    std::optional<nn::AdamState<float>> adam;
};

std::vector<std::uint8_t> encode_checkpoint(const model::CpvModel<float>& m, const nn::AdamState<float>* adam = nullptr);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const model::CpvModel<float>& m,
                     const nn::AdamState<float>* adam = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Loads into an existing model; throws CheckpointError if the stored mode,
// embedding size or any parameter shape differs.
void load_checkpoint_into(const std::filesystem::path& path, model::CpvModel<float>& m);

}  // namespace cpv::train
