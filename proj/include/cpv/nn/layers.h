#pragma once

// Fixed-architecture layer kernels with explicit backward passes.
//
// Image tensors are channels-last: [N, H, W, C]. Convolution weights are
// [3*3*C_in, C_out] with row index (ky*3 + kx)*C_in + c_in; linear weights
// are [F_in, F_out]. Backward functions accumulate into parameter gradients
// and return the gradient with respect to the input.

#include <array>
#include <cstdint>
#include <span>

#include "cpv/common/rng.h"
#include "cpv/nn/tensor.h"

namespace cpv::nn {

inline constexpr int kConvKernel = 3;
inline constexpr int kConvStride = 2;
inline constexpr int kConvPad = 1;

constexpr int conv_out_size(int n) { return (n + 2 * kConvPad - kConvKernel) / kConvStride + 1; }

enum class LayerKind { Conv, Linear, ReLU };

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    int in = 0;   // channels or features
    int out = 0;
};

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

// Returns the input gradient, or an empty tensor when need_input_grad is false.
template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                          Tensor<T>& grad_weight, Tensor<T>& grad_bias, bool need_input_grad = true);

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                          Tensor<T>& grad_weight, Tensor<T>& grad_bias, bool need_input_grad = true);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input);

// `output` is the forward result; the gradient passes where output > 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& output, const Tensor<T>& grad_out);

template <typename T>
struct CrossEntropyResult {
    T loss = 0;
    Tensor<T> grad;  // d loss / d logits, already divided by N
};

// Mean over rows of -log softmax(logits)[label]. Throws std::out_of_range
// for labels outside [0, classes).
template <typename T>
CrossEntropyResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

// Kaiming-uniform (fan-in) weights, zero bias.
template <typename T>
void kaiming_uniform(Tensor<T>& weight, int fan_in, Rng& rng);

}  // namespace cpv::nn
