#include "cpv/model/frame.h"

#include <stdexcept>

namespace cpv::model {

Frame to_frame(const craft::Observation& obs) {
    Frame f(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) f[i] = static_cast<float>(obs[i]) / 255.0f;
    return f;
}

Frame average_frames(const Frame& a, const Frame& b) {
    if (a.size() != b.size()) throw std::invalid_argument("average_frames: size mismatch");
    Frame out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = 0.5f * (a[i] + b[i]);
    return out;
}

}  // namespace cpv::model
