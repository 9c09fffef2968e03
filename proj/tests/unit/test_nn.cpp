#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cpv/nn/adam.h"
#include "cpv/nn/grad_check.h"
#include "cpv/nn/layers.h"

using namespace cpv;
using namespace cpv::nn;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
    Tensor<T> t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-scale, scale);
    for (auto& v : t.values()) v = static_cast<T>(d(rng));
    return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Packs (input, weight, bias) into one flat vector so grad_check can perturb all three.
struct Packed {
    std::vector<Shape> shapes;
    std::vector<double> flat;

    explicit Packed(std::initializer_list<const Tensor<double>*> ts) {
        for (auto* t : ts) {
            shapes.push_back(t->shape());
            flat.insert(flat.end(), t->values().begin(), t->values().end());
        }
    }
    std::vector<Tensor<double>> unpack(std::span<const double> p) const {
        std::vector<Tensor<double>> out;
        std::size_t k = 0;
        for (const auto& s : shapes) {
            const auto n = shape_size(s);
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

}  // namespace

TEST(Conv2d, OutputSizeFormula) {
    EXPECT_EQ(conv_out_size(33), 17);
    EXPECT_EQ(conv_out_size(30), 15);
    EXPECT_EQ(conv_out_size(1), 1);
    EXPECT_EQ(conv_out_size(2), 1);
}

TEST(Conv2d, SingleTapCopiesInput) {
    Tensor<double> x({1, 1, 1, 1}, 0.75);
    Tensor<double> w({9, 1});
    w[4] = 1.0;  // centre tap (ky=1, kx=1)
    Tensor<double> b({1});
    auto y = conv2d_forward(x, w, b);
    ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
    EXPECT_EQ(y[0], 0.75);
}

TEST(Conv2d, ZeroWeightsGiveZeroOutputAndZeroUpstreamGivesZeroGrad) {
    auto x = random_tensor<double>({2, 9, 8, 3}, 1);
    Tensor<double> w({27, 4}), b({4});
    auto y = conv2d_forward(x, w, b);
    for (double v : y.values()) EXPECT_EQ(v, 0.0);

    Tensor<double> gw({27, 4}), gb({4});
    Tensor<double> gy(y.shape());
    auto gx = conv2d_backward(x, random_tensor<double>({27, 4}, 2), gy, gw, gb);
    for (double v : gw.values()) EXPECT_EQ(v, 0.0);
    for (double v : gx.values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, RejectsChannelMismatch) {
    Tensor<float> x({1, 5, 5, 2}), w({27, 4}), b({4});
    EXPECT_THROW(conv2d_forward(x, w, b), ShapeError);
}

TEST(Conv2d, GradientsMatchFiniteDifferences) {
    // N=2, C=3, H=9, W=8 (channels-last).
    auto x = random_tensor<double>({2, 9, 8, 3}, 11);
    auto w = random_tensor<double>({27, 5}, 12, 0.5);
    auto b = random_tensor<double>({5}, 13);
    const auto probe = random_tensor<double>({2, 5, 4, 5}, 14);

    Packed packed{&x, &w, &b};
    auto f = [&](std::span<const double> p) {
        auto t = packed.unpack(p);
        return Probe{dot(conv2d_forward(t[0], t[1], t[2]), probe), 0};
    };
    Tensor<double> gw(w.shape()), gb(b.shape());
    auto gx = conv2d_backward(x, w, probe, gw, gb);
    auto analytic = concat({&gx, &gw, &gb});

    auto r = grad_check(f, packed.flat, analytic, {.eps = 1e-5});
    EXPECT_EQ(r.checked, packed.flat.size());
    EXPECT_LE(r.max_rel_error, 1e-4);
}

TEST(Linear, IdentityAndBias) {
    auto x = random_tensor<double>({3, 4}, 3);
    Tensor<double> eye({4, 4});
    for (int i = 0; i < 4; ++i) eye[static_cast<std::size_t>(i * 4 + i)] = 1.0;
    Tensor<double> zero_b({4});
    EXPECT_EQ(linear_forward(x, eye, zero_b), x);

    Tensor<double> zx({2, 4});
    auto b = random_tensor<double>({3}, 4);
    auto y = linear_forward(zx, random_tensor<double>({4, 3}, 5), b);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) EXPECT_EQ(y[static_cast<std::size_t>(r * 3 + c)], b[static_cast<std::size_t>(c)]);
}

TEST(Linear, RejectsInnerDimensionMismatch) {
    Tensor<float> x({2, 3}), w({4, 2}), b({2});
    EXPECT_THROW(linear_forward(x, w, b), ShapeError);
}

TEST(Linear, GradientsMatchFiniteDifferences) {
    auto x = random_tensor<double>({4, 7}, 21);
    auto w = random_tensor<double>({7, 5}, 22);
    auto b = random_tensor<double>({5}, 23);
    const auto probe = random_tensor<double>({4, 5}, 24);
    Packed packed{&x, &w, &b};
    auto f = [&](std::span<const double> p) {
        auto t = packed.unpack(p);
        return Probe{dot(linear_forward(t[0], t[1], t[2]), probe), 0};
    };
    Tensor<double> gw(w.shape()), gb(b.shape());
    auto gx = linear_backward(x, w, probe, gw, gb);
    auto r = grad_check(f, packed.flat, concat({&gx, &gw, &gb}));
    EXPECT_LE(r.max_rel_error, 1e-4);
}

TEST(Relu, KinkCoordinatesAreSkipped) {
    // One input sits exactly on the kink; its perturbation flips the mask.
    Tensor<double> x({1, 3}, std::vector<double>{0.5, 0.0, -0.5});
    auto mask_of = [](const Tensor<double>& t) {
        std::uint64_t m = 0;
        for (std::size_t i = 0; i < t.size(); ++i) m |= (t[i] > 0 ? 1ULL : 0ULL) << i;
        return m;
    };
    auto f = [&](std::span<const double> p) {
        Tensor<double> t({1, 3}, std::vector<double>(p.begin(), p.end()));
        auto y = relu_forward(t);
        return Probe{y[0] + 2 * y[1] + 3 * y[2], mask_of(t)};
    };
    const auto y = relu_forward(x);
    auto g = relu_backward(y, Tensor<double>({1, 3}, std::vector<double>{1, 2, 3}));
    auto r = grad_check(f, x.values(), g.values());
    EXPECT_EQ(r.skipped_kinks, 1u);
    EXPECT_EQ(r.checked, 2u);
    EXPECT_LE(r.max_rel_error, 1e-8);
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLogSix) {
    Tensor<double> z({3, 6});
    std::vector<int> labels{0, 3, 5};
    auto r = softmax_cross_entropy(z, labels);
    EXPECT_NEAR(r.loss, std::log(6.0), 1e-15);
    EXPECT_NEAR(r.loss, 1.7918, 1e-4);
}

TEST(SoftmaxCrossEntropy, DominantTrueLogitDrivesLossToZero) {
    Tensor<double> z({1, 6});
    z[2] = 50.0;
    std::vector<int> labels{2};
    EXPECT_LT(softmax_cross_entropy(z, labels).loss, 1e-20);
}

TEST(SoftmaxCrossEntropy, LabelOutOfRangeThrows) {
    Tensor<float> z({1, 6});
    std::vector<int> labels{6};
    EXPECT_THROW(softmax_cross_entropy(z, labels), std::out_of_range);
    labels[0] = -1;
    EXPECT_THROW(softmax_cross_entropy(z, labels), std::out_of_range);
}

TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
    auto z = random_tensor<double>({4, 6}, 31, 3.0);
    std::vector<int> labels{1, 0, 5, 2};
    auto f = [&](std::span<const double> p) {
        Tensor<double> t({4, 6}, std::vector<double>(p.begin(), p.end()));
        return Probe{softmax_cross_entropy(t, labels).loss, 0};
    };
    auto r = grad_check(f, z.values(), softmax_cross_entropy(z, labels).grad.values());
    EXPECT_LE(r.max_rel_error, 1e-4);
}

TEST(GradCheck, LinearFunctionIsExactToRoundoff) {
    std::vector<double> c{1.5, -2.0, 0.25, 4.0};
    std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    auto f = [&](std::span<const double> q) {
        double s = 0;
        for (std::size_t i = 0; i < q.size(); ++i) s += c[i] * q[i];
        return Probe{s, 0};
    };
    auto r = grad_check(f, p, c);
    EXPECT_EQ(r.checked, 4u);
    EXPECT_LT(r.max_rel_error, 1e-9);
}

TEST(GradCheck, DetectsWrongGradient) {
    std::vector<double> p{1.0, 2.0};
    auto f = [](std::span<const double> q) { return Probe{q[0] * q[0] + q[1], 0}; };
    std::vector<double> wrong{1.0, 1.0};  // true gradient is (2, 1)
    EXPECT_GT(grad_check(f, p, wrong).max_rel_error, 0.4);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    std::vector<Parameter<float>> params;
    params.emplace_back("p", Shape{3});
    params[0].value = Tensor<float>({3}, std::vector<float>{1.f, -2.f, 3.f});
    auto before = params[0].value;
    auto st = make_adam_state<float>(params, {});
    for (int i = 0; i < 5; ++i) adam_step<float>(params, st);
    EXPECT_EQ(params[0].value, before);
    EXPECT_EQ(st.step, 5u);
}

TEST(Adam, TwoStepsMatchClosedForm) {
    std::vector<Parameter<double>> params;
    params.emplace_back("p", Shape{1});
    params[0].value[0] = 0.5;
    params[0].grad[0] = 1.0;
    auto st = make_adam_state<double>(params, {.lr = 0.001, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8});

    // Hand computation for g = 1:
    //   m1 = 0.1, v1 = 0.001          -> m_hat = 1, v_hat = 1
    //   m2 = 0.19, v2 = 0.001999      -> m_hat = 0.19/0.19 = 1, v_hat = 0.001999/0.001999 = 1
    // so each step moves by 0.001 / (1 + 1e-8).
    const double delta = 0.001 / (1.0 + 1e-8);
    adam_step<double>(params, st);
    EXPECT_NEAR(params[0].value[0], 0.5 - delta, 1e-15);
    EXPECT_NEAR(st.m[0][0], 0.1, 1e-15);
    EXPECT_NEAR(st.v[0][0], 0.001, 1e-15);
    adam_step<double>(params, st);
    EXPECT_NEAR(params[0].value[0], 0.5 - 2 * delta, 1e-15);
    EXPECT_NEAR(st.m[0][0], 0.19, 1e-15);
    EXPECT_NEAR(st.v[0][0], 0.001999, 1e-15);
}

TEST(Adam, ConstantGradientStepIsBoundedByLearningRate) {
    std::vector<Parameter<double>> params;
    params.emplace_back("p", Shape{4});
    for (std::size_t i = 0; i < 4; ++i) params[0].grad[i] = std::pow(10.0, static_cast<double>(i) - 2.0);
    auto st = make_adam_state<double>(params, {.lr = 1e-3});
    for (int k = 0; k < 200; ++k) {
        auto before = params[0].value;
        adam_step<double>(params, st);
        for (std::size_t i = 0; i < 4; ++i) {
            const double step = before[i] - params[0].value[i];
            EXPECT_GT(step, 0.0);
            EXPECT_LE(step, 1e-3 * (1.0 + 1e-6));
        }
    }
}

TEST(Precision, FloatAndDoubleForwardAgree) {
    auto xd = random_tensor<double>({2, 9, 8, 3}, 41);
    auto wd = random_tensor<double>({27, 6}, 42, 0.5);
    auto bd = random_tensor<double>({6}, 43);
    auto yd = conv2d_forward(xd, wd, bd);
    auto yf = conv2d_forward(xd.cast<float>(), wd.cast<float>(), bd.cast<float>());
    for (std::size_t i = 0; i < yd.size(); ++i)
        EXPECT_LE(std::abs(yd[i] - yf[i]), 1e-4 * std::max(1.0, std::abs(yd[i])));
}
