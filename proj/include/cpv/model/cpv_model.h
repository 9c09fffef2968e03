#pragma once

// Plan-vector encoder g and the demonstration-conditioned policy.
//
// g(o_a, o_b): conv stack over the two frames stacked on the channel axis,
// then a linear map to a D-dimensional plan vector. The policy runs its own
// conv stack on the current frame and feeds the features, concatenated with
// the conditioning vector, through four 64-unit ReLU layers to 6 logits.
//
// Conditioning modes:
//   Cpv   - g(ref_0, ref_T) - g(o_0, o_t)
//   Te    - g(ref_0, ref_T)
//   Naive - no encoder; the policy conv sees (ref_0, ref_T, o_0, o_t) stacked
//           into 12 channels.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "cpv/craftworld/craftworld.h"
#include "cpv/model/frame.h"
#include "cpv/nn/layers.h"
#include "cpv/nn/tensor.h"

namespace cpv::model {

enum class ConditioningMode : std::uint8_t { Cpv, Te, Naive };

std::string_view to_string(ConditioningMode m);
std::optional<ConditioningMode> parse_mode(std::string_view s);

inline constexpr std::array<int, 4> kConvChannels{16, 32, 64, 64};
inline constexpr int kHiddenUnits = 64;
inline constexpr int kHiddenLayers = 4;

// Flattened conv-stack output size for a 33x30 frame.
constexpr int conv_feature_size() {
    int h = craft::kObsHeight, w = craft::kObsWidth;
    for (std::size_t i = 0; i < kConvChannels.size(); ++i) {
        h = nn::conv_out_size(h);
        w = nn::conv_out_size(w);
    }
    return h * w * kConvChannels.back();
}

struct ModelConfig {
    ConditioningMode mode = ConditioningMode::Cpv;
    int embed_dim = 512;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LossWeights {
    double hom = 1.0;
    double pair = 1.0;
};

// One (pair, timestep) training sample. `negative` indexes another item in
// the same batch that comes from a different pair.
struct BatchItem {
    FrameView ref_first;
    FrameView ref_last;
    FrameView demo_first;
    FrameView demo_t;
    FrameView demo_split;
    FrameView demo_last;
    int action = 0;
    std::size_t pair = 0;
    std::uint32_t timestep = 0;
    std::uint32_t split = 0;
    int negative = -1;
};

struct TrainBatch {
    std::vector<BatchItem> items;
    std::size_t size() const { return items.size(); }
};

struct FramePair {
    FrameView first;
    FrameView last;
};

template <typename T>
struct CpvContext {
    std::span<const T> v_ref;
    std::span<const T> v_prog;
};

template <typename T>
struct TeContext {
    std::span<const T> v_ref;
};

struct NaiveContext {
    FrameView ref_first;
    FrameView ref_last;
    FrameView start;
};

template <typename T>
using PolicyContext = std::variant<CpvContext<T>, TeContext<T>, NaiveContext>;

struct LossOptions {
    bool gradients = false;
    // Evaluate Hom/Pair even when their weight is zero (metrics).
    bool all_terms = false;
    // Hash ReLU masks and hinge activity into LossBreakdown::pattern.
    bool fingerprint = false;
};

struct LossBreakdown {
    double il = 0.0;
    // NaN when not evaluated.
    double hom = 0.0;
    double pair = 0.0;
    double total = 0.0;
    std::size_t correct = 0;
    std::size_t count = 0;
    std::uint64_t pattern = 0;
};

template <typename T>
class CpvModel {
 public:
    CpvModel(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    bool has_encoder() const { return cfg_.mode != ConditioningMode::Naive; }
    int policy_input_channels() const;
    int context_size() const;

    std::span<nn::Parameter<T>> parameters() { return params_; }
    std::span<const nn::Parameter<T>> parameters() const { return params_; }
    std::size_t parameter_count() const;
    void zero_grad();

    // Copies flattened parameter values / gradients in declaration order.
    std::vector<double> flat_values() const;
    std::vector<double> flat_grads() const;
    void set_flat_values(std::span<const double> v);

    template <typename U>
    CpvModel<U> cast() const;

    // Plan vectors for a batch of frame pairs, [N, D].
    nn::Tensor<T> embed_batch(std::span<const FramePair> pairs) const;
    std::vector<T> embed(FrameView first, FrameView last) const;

    // Logits for one step. Throws std::invalid_argument if the context type
    // does not match the mode.
    std::array<T, craft::kNumActions> policy_logits(FrameView o_t, const PolicyContext<T>& ctx) const;

    // Losses over a batch; with opts.gradients the weighted total's gradient
    // is accumulated into parameter grads.
    LossBreakdown compute_losses(const TrainBatch& batch, const LossWeights& w, const LossOptions& opts);

 private:
    template <typename U>
    friend class CpvModel;

    struct ConvTape {
        std::vector<nn::Tensor<T>> acts;  // input, then post-ReLU output of each layer
    };

    CpvModel() = default;

    void build(std::uint64_t seed);
    nn::Tensor<T> conv_stack_forward(std::size_t first_param, nn::Tensor<T> input, ConvTape* tape) const;
    void conv_stack_backward(std::size_t first_param, const ConvTape& tape, nn::Tensor<T> grad_features);

    ModelConfig cfg_;
    std::vector<nn::Parameter<T>> params_;
    std::size_t enc_conv_ = 0;
    std::size_t enc_fc_ = 0;
    std::size_t pol_conv_ = 0;
    std::size_t pol_fc_ = 0;
};

// Convenience wrappers over compute_losses.
template <typename T>
double il_loss(CpvModel<T>& model, const TrainBatch& batch);
template <typename T>
double hom_loss(CpvModel<T>& model, const TrainBatch& batch);
template <typename T>
double pair_loss(CpvModel<T>& model, const TrainBatch& batch);
// L_IL + w.hom * L_Hom + w.pair * L_Pair; accumulates gradients.
template <typename T>
LossBreakdown total_loss(CpvModel<T>& model, const TrainBatch& batch, const LossWeights& w);

template <typename T>
std::size_t argmax(const std::array<T, craft::kNumActions>& logits);

}  // namespace cpv::model
