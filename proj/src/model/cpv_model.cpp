#include "cpv/model/cpv_model.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "cpv/common/rng.h"
#include "cpv/model/losses.h"

namespace cpv::model {

using nn::Parameter;
using nn::Tensor;

namespace {

constexpr std::size_t kFramePixels = std::size_t{craft::kObsHeight} * craft::kObsWidth;
constexpr int kFeat = conv_feature_size();

// Stacks `frames` frames per item along the channel axis: [n, 33, 30, 3*frames].
template <typename T>
Tensor<T> pack_frames(std::size_t n, int frames, const std::function<FrameView(std::size_t, int)>& get) {
    const int channels = craft::kObsChannels * frames;
    Tensor<T> out({static_cast<int>(n), craft::kObsHeight, craft::kObsWidth, channels});
    T* dst = out.data();
    std::vector<FrameView> views(static_cast<std::size_t>(frames));
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < frames; ++k) views[static_cast<std::size_t>(k)] = get(i, k);
        for (std::size_t p = 0; p < kFramePixels; ++p)
            for (int k = 0; k < frames; ++k) {
                const FrameView& v = views[static_cast<std::size_t>(k)];
                for (int c = 0; c < craft::kObsChannels; ++c) *dst++ = static_cast<T>(v[p * craft::kObsChannels + c]);
            }
    }
    return out;
}

template <typename T>
void relu_inplace(Tensor<T>& t) {
    for (auto& v : t.values()) v = v > T(0) ? v : T(0);
}

struct Fingerprint {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void bit(bool b) { h = (h ^ (b ? 0x9e37U : 0x1U)) * 0x100000001b3ULL; }
    template <typename T>
    void mask(const Tensor<T>& t) {
        for (T v : t.values()) bit(v > T(0));
    }
};

template <typename T>
std::span<const T> row(const Tensor<T>& t, std::size_t r) {
    const auto cols = static_cast<std::size_t>(t.dim(1));
    return {t.data() + r * cols, cols};
}

template <typename T>
std::span<T> row(Tensor<T>& t, std::size_t r) {
    const auto cols = static_cast<std::size_t>(t.dim(1));
    return {t.data() + r * cols, cols};
}

template <typename T>
void axpy(std::span<T> dst, T scale, std::span<const T> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

}  // namespace

std::string_view to_string(ConditioningMode m) {
    switch (m) {
        case ConditioningMode::Cpv: return "cpv";
        case ConditioningMode::Te: return "te";
        case ConditioningMode::Naive: return "naive";
    }
    return "?";
}

std::optional<ConditioningMode> parse_mode(std::string_view s) {
    if (s == "cpv") return ConditioningMode::Cpv;
    if (s == "te") return ConditioningMode::Te;
    if (s == "naive") return ConditioningMode::Naive;
    return std::nullopt;
}

template <typename T>
CpvModel<T>::CpvModel(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg_.mode != ConditioningMode::Naive && cfg_.embed_dim < 1)
        throw std::invalid_argument("CpvModel: embed_dim must be positive");
    build(seed);
}

template <typename T>
int CpvModel<T>::policy_input_channels() const {
    return cfg_.mode == ConditioningMode::Naive ? 4 * craft::kObsChannels : craft::kObsChannels;
}

template <typename T>
int CpvModel<T>::context_size() const {
    return has_encoder() ? cfg_.embed_dim : 0;
}

template <typename T>
void CpvModel<T>::build(std::uint64_t seed) {
    Rng rng = make_rng(derive_seed(seed, 0x696e6974ULL));
    auto add_conv_stack = [&](const std::string& prefix, int in_channels) {
        const std::size_t first = params_.size();
        int c = in_channels;
        for (std::size_t l = 0; l < kConvChannels.size(); ++l) {
            const int fan_in = nn::kConvKernel * nn::kConvKernel * c;
            const std::string name = prefix + ".conv" + std::to_string(l + 1);
            params_.emplace_back(name + ".weight", nn::Shape{fan_in, kConvChannels[l]});
            nn::kaiming_uniform(params_.back().value, fan_in, rng);
            params_.emplace_back(name + ".bias", nn::Shape{kConvChannels[l]});
            c = kConvChannels[l];
        }
        return first;
    };
    auto add_linear = [&](const std::string& name, int in, int out) {
        params_.emplace_back(name + ".weight", nn::Shape{in, out});
        nn::kaiming_uniform(params_.back().value, in, rng);
        params_.emplace_back(name + ".bias", nn::Shape{out});
    };

    if (has_encoder()) {
        enc_conv_ = add_conv_stack("encoder", 2 * craft::kObsChannels);
        enc_fc_ = params_.size();
        add_linear("encoder.fc", kFeat, cfg_.embed_dim);
    }
    pol_conv_ = add_conv_stack("policy", policy_input_channels());
    pol_fc_ = params_.size();
    int in = kFeat + context_size();
    for (int l = 0; l < kHiddenLayers; ++l) {
        add_linear("policy.fc" + std::to_string(l + 1), in, kHiddenUnits);
        in = kHiddenUnits;
    }
    add_linear("policy.out", kHiddenUnits, craft::kNumActions);
}

template <typename T>
std::size_t CpvModel<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

template <typename T>
void CpvModel<T>::zero_grad() {
    for (auto& p : params_) p.grad.fill(T(0));
}

template <typename T>
std::vector<double> CpvModel<T>::flat_values() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& p : params_) out.insert(out.end(), p.value.values().begin(), p.value.values().end());
    return out;
}

template <typename T>
std::vector<double> CpvModel<T>::flat_grads() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& p : params_) out.insert(out.end(), p.grad.values().begin(), p.grad.values().end());
    return out;
}

template <typename T>
void CpvModel<T>::set_flat_values(std::span<const double> v) {
    if (v.size() != parameter_count()) throw nn::ShapeError("set_flat_values: size mismatch");
    std::size_t k = 0;
    for (auto& p : params_)
        for (auto& x : p.value.values()) x = static_cast<T>(v[k++]);
}

template <typename T>
template <typename U>
CpvModel<U> CpvModel<T>::cast() const {
    CpvModel<U> out;
    out.cfg_ = cfg_;
    out.enc_conv_ = enc_conv_;
    out.enc_fc_ = enc_fc_;
    out.pol_conv_ = pol_conv_;
    out.pol_fc_ = pol_fc_;
    for (const auto& p : params_) {
        Parameter<U> q;
        q.name = p.name;
        q.value = p.value.template cast<U>();
        q.grad = Tensor<U>(p.value.shape());
        out.params_.push_back(std::move(q));
    }
    return out;
}

template <typename T>
Tensor<T> CpvModel<T>::conv_stack_forward(std::size_t first_param, Tensor<T> input, ConvTape* tape) const {
    const int n = input.dim(0);
    Tensor<T> x = std::move(input);
    if (tape) tape->acts.clear();
    for (std::size_t l = 0; l < kConvChannels.size(); ++l) {
        Tensor<T> y = nn::conv2d_forward(x, params_[first_param + 2 * l].value, params_[first_param + 2 * l + 1].value);
        relu_inplace(y);
        if (tape) tape->acts.push_back(std::move(x));
        x = std::move(y);
    }
    Tensor<T> features = x;
    features.reshape({n, kFeat});
    if (tape) tape->acts.push_back(std::move(x));
    return features;
}

template <typename T>
void CpvModel<T>::conv_stack_backward(std::size_t first_param, const ConvTape& tape, Tensor<T> grad_features) {
    Tensor<T> g = std::move(grad_features);
    g.reshape(tape.acts.back().shape());
    for (std::size_t l = kConvChannels.size(); l-- > 0;) {
        g = nn::relu_backward(tape.acts[l + 1], g);
        auto& w = params_[first_param + 2 * l];
        auto& b = params_[first_param + 2 * l + 1];
        g = nn::conv2d_backward(tape.acts[l], w.value, g, w.grad, b.grad, l > 0);
    }
}

template <typename T>
Tensor<T> CpvModel<T>::embed_batch(std::span<const FramePair> pairs) const {
    if (!has_encoder()) throw std::logic_error("embed: naive model has no encoder");
    auto input = pack_frames<T>(pairs.size(), 2, [&](std::size_t i, int k) {
        return k == 0 ? pairs[i].first : pairs[i].last;
    });
    Tensor<T> feat = conv_stack_forward(enc_conv_, std::move(input), nullptr);
    return nn::linear_forward(feat, params_[enc_fc_].value, params_[enc_fc_ + 1].value);
}

template <typename T>
std::vector<T> CpvModel<T>::embed(FrameView first, FrameView last) const {
    const FramePair p{first, last};
    Tensor<T> e = embed_batch(std::span(&p, 1));
    return {e.values().begin(), e.values().end()};
}

template <typename T>
std::array<T, craft::kNumActions> CpvModel<T>::policy_logits(FrameView o_t, const PolicyContext<T>& ctx) const {
    const int d = context_size();
    Tensor<T> input;
    std::vector<T> cond(static_cast<std::size_t>(d));
    auto check_dim = [d](std::span<const T> v) {
        if (static_cast<int>(v.size()) != d) throw std::invalid_argument("policy_logits: context has wrong dimension");
    };

    switch (cfg_.mode) {
        case ConditioningMode::Cpv: {
            const auto* c = std::get_if<CpvContext<T>>(&ctx);
            if (!c) throw std::invalid_argument("policy_logits: cpv mode needs (v_ref, v_prog)");
            check_dim(c->v_ref);
            check_dim(c->v_prog);
            for (std::size_t i = 0; i < cond.size(); ++i) cond[i] = c->v_ref[i] - c->v_prog[i];
            input = pack_frames<T>(1, 1, [&](std::size_t, int) { return o_t; });
            break;
        }
        case ConditioningMode::Te: {
            const auto* c = std::get_if<TeContext<T>>(&ctx);
            if (!c) throw std::invalid_argument("policy_logits: te mode needs v_ref");
            check_dim(c->v_ref);
            std::copy(c->v_ref.begin(), c->v_ref.end(), cond.begin());
            input = pack_frames<T>(1, 1, [&](std::size_t, int) { return o_t; });
            break;
        }
        case ConditioningMode::Naive: {
            const auto* c = std::get_if<NaiveContext>(&ctx);
            if (!c) throw std::invalid_argument("policy_logits: naive mode needs reference and start frames");
            const std::array<FrameView, 4> frames{c->ref_first, c->ref_last, c->start, o_t};
            input = pack_frames<T>(1, 4, [&](std::size_t, int k) { return frames[static_cast<std::size_t>(k)]; });
            break;
        }
    }

    Tensor<T> feat = conv_stack_forward(pol_conv_, std::move(input), nullptr);
    Tensor<T> h({1, kFeat + d});
    std::copy(feat.values().begin(), feat.values().end(), h.data());
    std::copy(cond.begin(), cond.end(), h.data() + kFeat);
    for (int l = 0; l < kHiddenLayers; ++l) {
        const std::size_t k = pol_fc_ + 2 * static_cast<std::size_t>(l);
        h = nn::linear_forward(h, params_[k].value, params_[k + 1].value);
        relu_inplace(h);
    }
    const std::size_t out = pol_fc_ + 2 * kHiddenLayers;
    Tensor<T> logits = nn::linear_forward(h, params_[out].value, params_[out + 1].value);
    std::array<T, craft::kNumActions> res{};
    std::copy(logits.values().begin(), logits.values().end(), res.begin());
    return res;
}

template <typename T>
LossBreakdown CpvModel<T>::compute_losses(const TrainBatch& batch, const LossWeights& w, const LossOptions& opts) {
    const std::size_t B = batch.size();
    if (B == 0) throw std::invalid_argument("compute_losses: empty batch");
    const bool optimise_hom = has_encoder() && w.hom > 0.0;
    const bool optimise_pair = has_encoder() && w.pair > 0.0;
    if ((optimise_hom || optimise_pair) && B < 2)
        throw std::invalid_argument("compute_losses: hom/pair losses need a batch of at least 2");
    bool negatives_ok = B >= 2;
    for (std::size_t i = 0; i < B && negatives_ok; ++i) {
        const int j = batch.items[i].negative;
        negatives_ok = j >= 0 && static_cast<std::size_t>(j) < B &&
                       batch.items[static_cast<std::size_t>(j)].pair != batch.items[i].pair;
    }
    if ((optimise_hom || optimise_pair) && !negatives_ok)
        throw std::invalid_argument("compute_losses: every item needs a negative from a different pair");
    const bool want_hom = optimise_hom || (opts.all_terms && has_encoder() && negatives_ok);
    const bool want_pair = optimise_pair || (opts.all_terms && has_encoder() && negatives_ok);
    const bool keep_tape = opts.gradients || opts.fingerprint;
    const int d = context_size();
    const bool cpv = cfg_.mode == ConditioningMode::Cpv;
    Fingerprint fp;

    // Encoder rows, in blocks of B: ref, [prog], [half1, half2], [whole].
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::size_t r_ref = kNone, r_prog = kNone, r_h1 = kNone, r_h2 = kNone, r_whole = kNone;
    std::vector<FramePair> enc_rows;
    auto add_block = [&](auto get) {
        const std::size_t start = enc_rows.size();
        for (const auto& it : batch.items) enc_rows.push_back(get(it));
        return start;
    };
    if (has_encoder()) {
        r_ref = add_block([](const BatchItem& it) { return FramePair{it.ref_first, it.ref_last}; });
        if (cpv) r_prog = add_block([](const BatchItem& it) { return FramePair{it.demo_first, it.demo_t}; });
        if (want_hom) {
            r_h1 = add_block([](const BatchItem& it) { return FramePair{it.demo_first, it.demo_split}; });
            r_h2 = add_block([](const BatchItem& it) { return FramePair{it.demo_split, it.demo_last}; });
        }
        if (want_hom || want_pair)
            r_whole = add_block([](const BatchItem& it) { return FramePair{it.demo_first, it.demo_last}; });
    }

    ConvTape enc_tape;
    Tensor<T> enc_feat, emb;
    if (has_encoder()) {
        auto input = pack_frames<T>(enc_rows.size(), 2, [&](std::size_t i, int k) {
            return k == 0 ? enc_rows[i].first : enc_rows[i].last;
        });
        enc_feat = conv_stack_forward(enc_conv_, std::move(input), keep_tape ? &enc_tape : nullptr);
        emb = nn::linear_forward(enc_feat, params_[enc_fc_].value, params_[enc_fc_ + 1].value);
        if (opts.fingerprint)
            for (std::size_t l = 1; l < enc_tape.acts.size(); ++l) fp.mask(enc_tape.acts[l]);
    }

    // Policy.
    ConvTape pol_tape;
    Tensor<T> pol_in;
    if (cfg_.mode == ConditioningMode::Naive) {
        pol_in = pack_frames<T>(B, 4, [&](std::size_t i, int k) {
            const auto& it = batch.items[i];
            switch (k) {
                case 0: return it.ref_first;
                case 1: return it.ref_last;
                case 2: return it.demo_first;
                default: return it.demo_t;
            }
        });
    } else {
        pol_in = pack_frames<T>(B, 1, [&](std::size_t i, int) { return batch.items[i].demo_t; });
    }
    Tensor<T> pol_feat = conv_stack_forward(pol_conv_, std::move(pol_in), keep_tape ? &pol_tape : nullptr);
    if (opts.fingerprint)
        for (std::size_t l = 1; l < pol_tape.acts.size(); ++l) fp.mask(pol_tape.acts[l]);

    std::vector<Tensor<T>> hidden;  // hidden[0] is the MLP input, then post-ReLU layers
    hidden.emplace_back(nn::Shape{static_cast<int>(B), kFeat + d});
    for (std::size_t i = 0; i < B; ++i) {
        auto dst = row(hidden[0], i);
        auto f = row(pol_feat, i);
        std::copy(f.begin(), f.end(), dst.begin());
        if (has_encoder()) {
            auto ref = row(emb, r_ref + i);
            for (int k = 0; k < d; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                dst[kFeat + kk] = cpv ? ref[kk] - row(emb, r_prog + i)[kk] : ref[kk];
            }
        }
    }
    for (int l = 0; l < kHiddenLayers; ++l) {
        const std::size_t k = pol_fc_ + 2 * static_cast<std::size_t>(l);
        Tensor<T> h = nn::linear_forward(hidden.back(), params_[k].value, params_[k + 1].value);
        relu_inplace(h);
        if (opts.fingerprint) fp.mask(h);
        hidden.push_back(std::move(h));
    }
    const std::size_t out_k = pol_fc_ + 2 * kHiddenLayers;
    Tensor<T> logits = nn::linear_forward(hidden.back(), params_[out_k].value, params_[out_k + 1].value);

    std::vector<int> labels(B);
    for (std::size_t i = 0; i < B; ++i) labels[i] = batch.items[i].action;
    auto ce = nn::softmax_cross_entropy(logits, labels);

    LossBreakdown res;
    res.il = static_cast<double>(ce.loss);
    res.count = B;
    for (std::size_t i = 0; i < B; ++i) {
        auto z = row(logits, i);
        const auto best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
        if (best == labels[i]) ++res.correct;
    }

    // Triplet terms.
    const auto Dsz = static_cast<std::size_t>(d);
    std::vector<TripletResult<T>> hom_terms, pair_terms;
    res.hom = std::numeric_limits<double>::quiet_NaN();
    res.pair = std::numeric_limits<double>::quiet_NaN();
    if (want_hom) {
        double sum = 0;
        std::vector<T> anchor(Dsz);
        for (std::size_t i = 0; i < B; ++i) {
            auto h1 = row(emb, r_h1 + i), h2 = row(emb, r_h2 + i);
            for (std::size_t k = 0; k < Dsz; ++k) anchor[k] = h1[k] + h2[k];
            const auto j = static_cast<std::size_t>(batch.items[i].negative);
            hom_terms.push_back(triplet_margin<T>(anchor, row(emb, r_whole + i), row(emb, r_whole + j)));
            sum += static_cast<double>(hom_terms.back().value);
            fp.bit(hom_terms.back().active);
        }
        res.hom = sum / static_cast<double>(B);
    }
    if (want_pair) {
        double sum = 0;
        for (std::size_t i = 0; i < B; ++i) {
            const auto j = static_cast<std::size_t>(batch.items[i].negative);
            pair_terms.push_back(triplet_margin<T>(row(emb, r_whole + i), row(emb, r_ref + i), row(emb, r_ref + j)));
            sum += static_cast<double>(pair_terms.back().value);
            fp.bit(pair_terms.back().active);
        }
        res.pair = sum / static_cast<double>(B);
    }
    res.total = res.il + (optimise_hom ? w.hom * res.hom : 0.0) + (optimise_pair ? w.pair * res.pair : 0.0);
    res.pattern = fp.h;
    if (!opts.gradients) return res;

    // Backward: policy MLP.
    Tensor<T> g = std::move(ce.grad);
    for (int l = kHiddenLayers; l >= 0; --l) {
        const std::size_t k = pol_fc_ + 2 * static_cast<std::size_t>(l);
        auto& wp = params_[k];
        auto& bp = params_[k + 1];
        const auto li = static_cast<std::size_t>(l);
        g = nn::linear_backward(hidden[li], wp.value, g, wp.grad, bp.grad, true);
        if (l > 0) g = nn::relu_backward(hidden[li], g);
    }
    // g is d/d(MLP input): split into conv features and conditioning vector.
    Tensor<T> g_feat({static_cast<int>(B), kFeat});
    for (std::size_t i = 0; i < B; ++i) {
        auto src = row(g, i);
        std::copy(src.begin(), src.begin() + kFeat, row(g_feat, i).begin());
    }
    conv_stack_backward(pol_conv_, pol_tape, std::move(g_feat));

    if (!has_encoder()) return res;
    Tensor<T> g_emb(emb.shape());
    for (std::size_t i = 0; i < B; ++i) {
        auto gc = row(g, i).subspan(kFeat);
        axpy<T>(row(g_emb, r_ref + i), T(1), gc);
        if (cpv) axpy<T>(row(g_emb, r_prog + i), T(-1), gc);
    }
    if (optimise_hom) {
        const T s = static_cast<T>(w.hom / static_cast<double>(B));
        for (std::size_t i = 0; i < B; ++i) {
            const auto& t = hom_terms[i];
            const auto j = static_cast<std::size_t>(batch.items[i].negative);
            axpy<T>(row(g_emb, r_h1 + i), s, t.grad_anchor);
            axpy<T>(row(g_emb, r_h2 + i), s, t.grad_anchor);
            axpy<T>(row(g_emb, r_whole + i), s, t.grad_positive);
            axpy<T>(row(g_emb, r_whole + j), s, t.grad_negative);
        }
    }
    if (optimise_pair) {
        const T s = static_cast<T>(w.pair / static_cast<double>(B));
        for (std::size_t i = 0; i < B; ++i) {
            const auto& t = pair_terms[i];
            const auto j = static_cast<std::size_t>(batch.items[i].negative);
            axpy<T>(row(g_emb, r_whole + i), s, t.grad_anchor);
            axpy<T>(row(g_emb, r_ref + i), s, t.grad_positive);
            axpy<T>(row(g_emb, r_ref + j), s, t.grad_negative);
        }
    }
    auto& wfc = params_[enc_fc_];
    auto& bfc = params_[enc_fc_ + 1];
    Tensor<T> g_enc = nn::linear_backward(enc_feat, wfc.value, g_emb, wfc.grad, bfc.grad, true);
    conv_stack_backward(enc_conv_, enc_tape, std::move(g_enc));
    return res;
}

template <typename T>
double il_loss(CpvModel<T>& model, const TrainBatch& batch) {
    return model.compute_losses(batch, {0.0, 0.0}, {}).il;
}

template <typename T>
double hom_loss(CpvModel<T>& model, const TrainBatch& batch) {
    if (!model.has_encoder()) throw std::invalid_argument("hom_loss: model has no encoder");
    if (batch.size() < 2) throw std::invalid_argument("hom_loss: batch of at least 2 required");
    for (const auto& it : batch.items)
        if (it.negative < 0) throw std::invalid_argument("hom_loss: every item needs a negative from another pair");
    return model.compute_losses(batch, {0.0, 0.0}, {.all_terms = true}).hom;
}

template <typename T>
double pair_loss(CpvModel<T>& model, const TrainBatch& batch) {
    if (!model.has_encoder()) throw std::invalid_argument("pair_loss: model has no encoder");
    if (batch.size() < 2) throw std::invalid_argument("pair_loss: batch of at least 2 required");
    for (const auto& it : batch.items)
        if (it.negative < 0) throw std::invalid_argument("pair_loss: every item needs a negative from another pair");
    return model.compute_losses(batch, {0.0, 0.0}, {.all_terms = true}).pair;
}

template <typename T>
LossBreakdown total_loss(CpvModel<T>& model, const TrainBatch& batch, const LossWeights& w) {
    return model.compute_losses(batch, w, {.gradients = true});
}

template <typename T>
std::size_t argmax(const std::array<T, craft::kNumActions>& logits) {
    return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

template class CpvModel<float>;
template class CpvModel<double>;
template CpvModel<double> CpvModel<float>::cast<double>() const;
template CpvModel<float> CpvModel<double>::cast<float>() const;
template CpvModel<float> CpvModel<float>::cast<float>() const;

template double il_loss(CpvModel<float>&, const TrainBatch&);
template double il_loss(CpvModel<double>&, const TrainBatch&);
template double hom_loss(CpvModel<float>&, const TrainBatch&);
template double hom_loss(CpvModel<double>&, const TrainBatch&);
template double pair_loss(CpvModel<float>&, const TrainBatch&);
template double pair_loss(CpvModel<double>&, const TrainBatch&);
template LossBreakdown total_loss(CpvModel<float>&, const TrainBatch&, const LossWeights&);
template LossBreakdown total_loss(CpvModel<double>&, const TrainBatch&, const LossWeights&);
template std::size_t argmax(const std::array<float, craft::kNumActions>&);
template std::size_t argmax(const std::array<double, craft::kNumActions>&);

}  // namespace cpv::model
