#include "cpv/nn/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cpv/common/rng.h"

namespace cpv::nn {

GradCheckResult grad_check(const Objective& f, std::span<const double> params, std::span<const double> analytic,
                           const GradCheckOptions& opts) {
    if (params.size() != analytic.size()) throw std::invalid_argument("grad_check: gradient size mismatch");
    std::vector<double> p(params.begin(), params.end());
    const std::uint64_t base_pattern = f(p).pattern;

    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(opts.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t want = opts.max_coords == 0 ? p.size() : std::min(opts.max_coords, p.size());

    GradCheckResult res;
    for (std::size_t k = 0; k < order.size() && res.checked < want; ++k) {
        const std::size_t i = order[k];
        const double saved = p[i];
        p[i] = saved + opts.eps;
        const Probe up = f(p);
        p[i] = saved - opts.eps;
        const Probe down = f(p);
        p[i] = saved;
        if (up.pattern != base_pattern || down.pattern != base_pattern) {
            if (++res.skipped_kinks > opts.max_resample) break;
            continue;
        }
        const double numeric = (up.value - down.value) / (2.0 * opts.eps);
        const double a = analytic[i];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
        if (rel > res.max_rel_error || res.checked == 0) {
            res.max_rel_error = std::max(res.max_rel_error, rel);
            if (rel >= res.max_rel_error) res.worst_index = i;
        }
        ++res.checked;
    }
    return res;
}

}  // namespace cpv::nn
