#include "cpv/nn/adam.h"

#include <cmath>

namespace cpv::nn {

template <typename T>
AdamState<T> make_adam_state(std::span<const Parameter<T>> params, AdamHyper hyper) {
    AdamState<T> s;
    s.hyper = hyper;
    for (const auto& p : params) {
        s.m.emplace_back(p.value.shape());
        s.v.emplace_back(p.value.shape());
    }
    return s;
}

template <typename T>
void adam_step(std::span<Parameter<T>> params, AdamState<T>& state) {
    if (params.size() != state.m.size()) throw ShapeError("adam_step: parameter count does not match optimizer state");
    ++state.step;
    const auto& h = state.hyper;
    const double t = static_cast<double>(state.step);
    const T b1 = static_cast<T>(h.beta1);
    const T b2 = static_cast<T>(h.beta2);
    const T bc1 = static_cast<T>(1.0 - std::pow(h.beta1, t));
    const T bc2 = static_cast<T>(1.0 - std::pow(h.beta2, t));
    const T lr = static_cast<T>(h.lr);
    const T eps = static_cast<T>(h.eps);

    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        auto& m = state.m[k];
        auto& v = state.v[k];
        if (m.shape() != p.value.shape() || p.grad.shape() != p.value.shape())
            throw ShapeError("adam_step: shape mismatch for " + p.name);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const T g = p.grad[i];
            m[i] = b1 * m[i] + (T(1) - b1) * g;
            v[i] = b2 * v[i] + (T(1) - b2) * g * g;
            const T m_hat = m[i] / bc1;
            const T v_hat = v[i] / bc2;
            p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

template AdamState<float> make_adam_state(std::span<const Parameter<float>>, AdamHyper);
template AdamState<double> make_adam_state(std::span<const Parameter<double>>, AdamHyper);
template void adam_step(std::span<Parameter<float>>, AdamState<float>&);
template void adam_step(std::span<Parameter<double>>, AdamState<double>&);

}  // namespace cpv::nn
