#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cpv/nn/tensor.h"

namespace cpv::nn {

struct AdamHyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct AdamState {
    AdamHyper hyper;
    std::uint64_t step = 0;
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
};

// Allocates zero moments shaped like `params`.
template <typename T>
AdamState<T> make_adam_state(std::span<const Parameter<T>> params, AdamHyper hyper);

// One bias-corrected Adam update using each parameter's grad.
template <typename T>
void adam_step(std::span<Parameter<T>> params, AdamState<T>& state);

}  // namespace cpv::nn
