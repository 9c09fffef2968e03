#pragma once

// Finite-difference checks of every layer type and of the full training
// objective, all in double precision.

#include <cstdint>
#include <string>
#include <vector>

#include "cpv/model/cpv_model.h"
#include "cpv/nn/grad_check.h"

namespace cpv::cli {

struct GradSuiteOptions {
    std::uint64_t seed = 1;
    double eps = 1e-5;
    int embed_dim = 512;
    // Coordinates checked per parameter tensor of the full model.
    std::size_t coords_per_tensor = 8;
};

struct GradSuiteEntry {
    std::string name;
    nn::GradCheckResult result;
};

std::vector<GradSuiteEntry> run_grad_suite(const GradSuiteOptions& opts);

// Total loss (lambda_hom = lambda_pair = 1) of a fresh model on a two-pair
// microbatch, checked tensor by tensor.
nn::GradCheckResult check_model_gradients(model::ConditioningMode mode, const GradSuiteOptions& opts);

}  // namespace cpv::cli
