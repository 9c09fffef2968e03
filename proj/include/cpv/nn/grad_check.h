#pragma once

#include <cstdint>
#include <functional>
#include <span>

namespace cpv::nn {

// Value of a scalar objective plus a fingerprint of its non-smooth branch
// choices (ReLU masks, hinge activity). Two evaluations with different
// fingerprints straddle a kink.
struct Probe {
    double value = 0.0;
    std::uint64_t pattern = 0;
};

using Objective = std::function<Probe(std::span<const double>)>;

struct GradCheckOptions {
    double eps = 1e-5;
    // Coordinates to check; 0 checks every coordinate.
    std::size_t max_coords = 0;
    std::uint64_t seed = 0;
    // Resampling budget when drawn coordinates sit at a kink.
    std::size_t max_resample = 10000;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    std::size_t skipped_kinks = 0;
};

// Central differences (f(p+e) - f(p-e)) / 2e against `analytic`, relative
// error |a - n| / max(|a|, |n|, 1e-8). Coordinates whose perturbation flips
// the objective's pattern are skipped and another coordinate is drawn.
GradCheckResult grad_check(const Objective& f, std::span<const double> params, std::span<const double> analytic,
                           const GradCheckOptions& opts = {});

}  // namespace cpv::nn
