#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cpv/craftworld/craftworld.h"

namespace cpv::model {

// Normalised float frame, HWC, values in [0, 1].
using Frame = std::vector<float>;

Frame to_frame(const craft::Observation& obs);
Frame average_frames(const Frame& a, const Frame& b);

// Non-owning view over either an 8-bit observation or a float frame.
class FrameView {
 public:
    FrameView() = default;
    FrameView(const craft::Observation& obs) : u8_(obs.data()) {}  // NOLINT(google-explicit-constructor)
    FrameView(const Frame& f) : f32_(f.data()) {}                   // NOLINT(google-explicit-constructor)

    bool empty() const { return u8_ == nullptr && f32_ == nullptr; }
    float operator[](std::size_t i) const { return u8_ ? static_cast<float>(u8_[i]) / 255.0f : f32_[i]; }

 private:
    const std::uint8_t* u8_ = nullptr;
    const float* f32_ = nullptr;
};

}  // namespace cpv::model
