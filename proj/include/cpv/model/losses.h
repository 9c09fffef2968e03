#pragma once

#include <span>
#include <vector>

namespace cpv::model {

inline constexpr double kTripletMargin = 1.0;

template <typename T>
struct TripletResult {
    T value = 0;
    // Subgradients; all zero when the hinge is inactive.
    std::vector<T> grad_anchor;
    std::vector<T> grad_positive;
    std::vector<T> grad_negative;
    bool active = false;
};

// max(||a - p|| - ||a - n|| + 1, 0) with Euclidean norms. A zero-length
// difference contributes a zero subgradient.
template <typename T>
TripletResult<T> triplet_margin(std::span<const T> anchor, std::span<const T> positive, std::span<const T> negative);

}  // namespace cpv::model
