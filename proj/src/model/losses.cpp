#include "cpv/model/losses.h"

#include <cmath>
#include <stdexcept>

namespace cpv::model {

template <typename T>
TripletResult<T> triplet_margin(std::span<const T> a, std::span<const T> p, std::span<const T> n) {
    if (a.size() != p.size() || a.size() != n.size()) throw std::invalid_argument("triplet_margin: dimension mismatch");
    const std::size_t d = a.size();
    T dp2 = 0, dn2 = 0;
    for (std::size_t i = 0; i < d; ++i) {
        dp2 += (a[i] - p[i]) * (a[i] - p[i]);
        dn2 += (a[i] - n[i]) * (a[i] - n[i]);
    }
    const T dist_p = std::sqrt(dp2);
    const T dist_n = std::sqrt(dn2);
    const T raw = dist_p - dist_n + static_cast<T>(kTripletMargin);

    TripletResult<T> r;
    r.grad_anchor.assign(d, T(0));
    r.grad_positive.assign(d, T(0));
    r.grad_negative.assign(d, T(0));
    if (!(raw > T(0))) return r;

    r.value = raw;
    r.active = true;
    for (std::size_t i = 0; i < d; ++i) {
        const T up = dist_p > T(0) ? (a[i] - p[i]) / dist_p : T(0);
        const T un = dist_n > T(0) ? (a[i] - n[i]) / dist_n : T(0);
        r.grad_anchor[i] = up - un;
        r.grad_positive[i] = -up;
        r.grad_negative[i] = un;
    }
    return r;
}

template TripletResult<float> triplet_margin(std::span<const float>, std::span<const float>, std::span<const float>);
template TripletResult<double> triplet_margin(std::span<const double>, std::span<const double>,
                                              std::span<const double>);

}  // namespace cpv::model
