#include "cpv/cli/grad_suite.h"

#include <random>

#include "cpv/model/cpv_model.h"
#include "cpv/model/losses.h"
#include "cpv/nn/layers.h"
#include "cpv/planner/dataset.h"

namespace cpv::cli {

using nn::GradCheckResult;
using nn::Probe;
using nn::Shape;
using nn::Tensor;

namespace {

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
    Tensor<double> t(std::move(shape));
    std::uniform_real_distribution<double> d(-scale, scale);
    for (auto& v : t.values()) v = d(rng);
    return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::uint64_t mask_hash(const Tensor<double>& t) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : t.values()) h = (h ^ (v > 0 ? 0x9e37U : 1U)) * 0x100000001b3ULL;
    return h;
}

// Flat view over several tensors.
struct Flat {
    std::vector<Shape> shapes;
    std::vector<double> values;

    void add(const Tensor<double>& t) {
        shapes.push_back(t.shape());
        values.insert(values.end(), t.values().begin(), t.values().end());
    }
    std::vector<Tensor<double>> unpack(std::span<const double> p) const {
        std::vector<Tensor<double>> out;
        std::size_t k = 0;
        for (const auto& s : shapes) {
            const auto n = nn::shape_size(s);
            out.emplace_back(s, std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(k),
                                                    p.begin() + static_cast<std::ptrdiff_t>(k + n)));
            k += n;
        }
        return out;
    }
};

std::vector<double> concat(std::initializer_list<const Tensor<double>*> ts) {
    std::vector<double> out;
    for (auto* t : ts) out.insert(out.end(), t->values().begin(), t->values().end());
    return out;
}

GradCheckResult check_conv(const GradSuiteOptions& o, std::mt19937_64& rng) {
    auto x = random_tensor({2, 9, 8, 3}, rng);
    auto w = random_tensor({27, 4}, rng, 0.5);
    auto b = random_tensor({4}, rng, 0.5);
    const auto probe_shape = nn::conv2d_forward(x, w, b).shape();
    auto r = random_tensor(probe_shape, rng);
    Flat flat;
    flat.add(x), flat.add(w), flat.add(b);
    auto f = [&](std::span<const double> p) {
        auto t = flat.unpack(p);
        return Probe{dot(nn::conv2d_forward(t[0], t[1], t[2]), r), 0};
    };
    Tensor<double> gw(w.shape()), gb(b.shape());
    auto gx = nn::conv2d_backward(x, w, r, gw, gb, true);
    return nn::grad_check(f, flat.values, concat({&gx, &gw, &gb}), {.eps = o.eps, .seed = o.seed});
}

GradCheckResult check_linear(const GradSuiteOptions& o, std::mt19937_64& rng) {
    auto x = random_tensor({3, 7}, rng);
    auto w = random_tensor({7, 5}, rng);
    auto b = random_tensor({5}, rng);
    auto r = random_tensor({3, 5}, rng);
    Flat flat;
    flat.add(x), flat.add(w), flat.add(b);
    auto f = [&](std::span<const double> p) {
        auto t = flat.unpack(p);
        return Probe{dot(nn::linear_forward(t[0], t[1], t[2]), r), 0};
    };
    Tensor<double> gw(w.shape()), gb(b.shape());
    auto gx = nn::linear_backward(x, w, r, gw, gb, true);
    return nn::grad_check(f, flat.values, concat({&gx, &gw, &gb}), {.eps = o.eps, .seed = o.seed});
}

GradCheckResult check_relu(const GradSuiteOptions& o, std::mt19937_64& rng) {
    auto x = random_tensor({4, 16}, rng);
    auto r = random_tensor({4, 16}, rng);
    auto f = [&](std::span<const double> p) {
        Tensor<double> t(x.shape(), std::vector<double>(p.begin(), p.end()));
        auto y = nn::relu_forward(t);
        return Probe{dot(y, r), mask_hash(y)};
    };
    auto g = nn::relu_backward(nn::relu_forward(x), r);
    return nn::grad_check(f, x.values(), g.values(), {.eps = o.eps, .seed = o.seed});
}

GradCheckResult check_softmax(const GradSuiteOptions& o, std::mt19937_64& rng) {
    auto z = random_tensor({5, 6}, rng, 3.0);
    const std::vector<int> labels{0, 3, 5, 1, 2};
    auto f = [&](std::span<const double> p) {
        Tensor<double> t(z.shape(), std::vector<double>(p.begin(), p.end()));
        return Probe{nn::softmax_cross_entropy(t, labels).loss, 0};
    };
    return nn::grad_check(f, z.values(), nn::softmax_cross_entropy(z, labels).grad.values(),
                          {.eps = o.eps, .seed = o.seed});
}

GradCheckResult check_triplet(const GradSuiteOptions& o, std::mt19937_64& rng) {
    constexpr std::size_t D = 6;
    auto v = random_tensor({3 * static_cast<int>(D)}, rng);
    // Negative close to the anchor so the hinge is active.
    for (std::size_t k = 0; k < D; ++k) v[2 * D + k] = v[k] + 0.1 * v[2 * D + k];
    auto eval = [&](std::span<const double> p) {
        return model::triplet_margin<double>(p.subspan(0, D), p.subspan(D, D), p.subspan(2 * D, D));
    };
    auto f = [&](std::span<const double> p) {
        auto r = eval(p);
        return Probe{r.value, r.active ? 1U : 0U};
    };
    auto r = eval(v.values());
    std::vector<double> g;
    g.insert(g.end(), r.grad_anchor.begin(), r.grad_anchor.end());
    g.insert(g.end(), r.grad_positive.begin(), r.grad_positive.end());
    g.insert(g.end(), r.grad_negative.begin(), r.grad_negative.end());
    return nn::grad_check(f, v.values(), g, {.eps = o.eps, .seed = o.seed});
}

}  // namespace

GradCheckResult check_model_gradients(model::ConditioningMode mode, const GradSuiteOptions& o) {
    const planner::Dataset ds = planner::generate_dataset(o.seed, 2, 1, 2, {});
    model::TrainBatch batch;
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& p = ds.pairs[i];
        const std::uint32_t H = p.demo.length;
        model::BatchItem it;
        it.ref_first = p.reference.first();
        it.ref_last = p.reference.last();
        it.demo_first = p.demo.first();
        it.timestep = H / 2;
        it.split = std::max<std::uint32_t>(1, H / 2);
        it.demo_t = p.demo.observations[it.timestep];
        it.demo_split = p.demo.observations[it.split];
        it.demo_last = p.demo.last();
        it.action = static_cast<int>(p.demo.actions[it.timestep]);
        it.pair = i;
        it.negative = static_cast<int>(1 - i);
        batch.items.push_back(it);
    }
    const model::LossWeights w{1.0, 1.0};
    model::CpvModel<double> net({mode, o.embed_dim}, o.seed);
    net.zero_grad();
    model::total_loss(net, batch, w);
    const std::vector<double> base = net.flat_values();
    const std::vector<double> grads = net.flat_grads();

    GradCheckResult total;
    std::size_t offset = 0;
    std::uint64_t k = 0;
    for (const auto& p : net.parameters()) {
        const std::size_t n = p.value.size();
        std::vector<double> full = base;
        auto f = [&](std::span<const double> sub) {
            std::copy(sub.begin(), sub.end(), full.begin() + static_cast<std::ptrdiff_t>(offset));
            net.set_flat_values(full);
            auto r = net.compute_losses(batch, w, {.fingerprint = true});
            return Probe{r.total, r.pattern};
        };
        std::span<const double> sub(base.data() + offset, n), gsub(grads.data() + offset, n);
        auto r = nn::grad_check(f, sub, gsub,
                                {.eps = o.eps, .max_coords = std::min(n, o.coords_per_tensor), .seed = o.seed + k++});
        if (r.max_rel_error > total.max_rel_error || total.checked == 0) {
            total.max_rel_error = r.max_rel_error;
            total.worst_index = offset + r.worst_index;
        }
        total.checked += r.checked;
        total.skipped_kinks += r.skipped_kinks;
        offset += n;
    }
    net.set_flat_values(base);
    return total;
}

std::vector<GradSuiteEntry> run_grad_suite(const GradSuiteOptions& opts) {
    std::mt19937_64 rng(opts.seed);
    std::vector<GradSuiteEntry> out;
    out.push_back({"conv2d", check_conv(opts, rng)});
    out.push_back({"linear", check_linear(opts, rng)});
    out.push_back({"relu", check_relu(opts, rng)});
    out.push_back({"softmax_cross_entropy", check_softmax(opts, rng)});
    out.push_back({"triplet_margin", check_triplet(opts, rng)});
    out.push_back({"total_loss", check_model_gradients(model::ConditioningMode::Cpv, opts)});
    return out;
}

}  // namespace cpv::cli
