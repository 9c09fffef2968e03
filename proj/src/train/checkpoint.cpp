#include "cpv/train/checkpoint.h"

#include <bit>

#include "cpv/nn/layers.h"

namespace cpv::train {

namespace {

void put_values(ByteWriter& w, const nn::Tensor<float>& t) {
    for (float v : t.values()) w.f32(v);
}

void get_values(ByteReader& r, nn::Tensor<float>& t) {
    for (float& v : t.values()) v = r.f32();
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const model::CpvModel<float>& m, const nn::AdamState<float>* adam) {
    ByteWriter w;
    w.tag("CPVM");
    w.u32(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(m.config().mode));
    w.u32(static_cast<std::uint32_t>(m.config().embed_dim));
    const auto params = m.parameters();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        w.u32(static_cast<std::uint32_t>(p.name.size()));
        w.bytes({reinterpret_cast<const std::uint8_t*>(p.name.data()), p.name.size()});
        w.u8(static_cast<std::uint8_t>(p.value.rank()));
        for (int d : p.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    }
    for (const auto& p : params) put_values(w, p.value);
    w.u8(adam ? 1 : 0);
    if (adam) {
        if (adam->m.size() != params.size() || adam->v.size() != params.size())
            throw CheckpointError("encode_checkpoint: optimizer state does not match the model");
        w.u64(adam->step);
        for (double h : {adam->hyper.lr, adam->hyper.beta1, adam->hyper.beta2, adam->hyper.eps})
            w.u64(std::bit_cast<std::uint64_t>(h));
        for (std::size_t i = 0; i < params.size(); ++i) {
            put_values(w, adam->m[i]);
            put_values(w, adam->v[i]);
        }
    }
    return std::move(w.data());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    try {
        ByteReader r(bytes);
        r.expect_tag("CPVM", "checkpoint");
        const auto version = r.u32();
        if (version != kCheckpointVersion)
            throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
        const auto mode_id = r.u8();
        if (mode_id > static_cast<std::uint8_t>(model::ConditioningMode::Naive))
            throw CheckpointError("checkpoint: bad mode id " + std::to_string(mode_id));
        model::ModelConfig cfg{static_cast<model::ConditioningMode>(mode_id), static_cast<int>(r.u32())};
        if (cfg.embed_dim < 1 || cfg.embed_dim > (1 << 20)) throw CheckpointError("checkpoint: bad embed_dim");
        Checkpoint ck{model::CpvModel<float>(cfg, 0), std::nullopt};
        auto params = ck.model.parameters();
        const auto n = r.u32();
        if (n != params.size())
            throw CheckpointError("checkpoint: shape mismatch, " + std::to_string(n) + " parameters stored, " +
                                  std::to_string(params.size()) + " expected");
        for (auto& p : params) {
            const auto len = r.u32();
            auto name = r.bytes(len);
            const auto rank = r.u8();
            nn::Shape shape(rank);
            for (auto& d : shape) d = static_cast<int>(r.u32());
            if (std::string(name.begin(), name.end()) != p.name || shape != p.value.shape())
                throw CheckpointError("checkpoint: shape mismatch at " + p.name + ": stored " + nn::shape_string(shape) +
                                      ", expected " + nn::shape_string(p.value.shape()));
        }
        for (auto& p : params) get_values(r, p.value);
        const auto has_adam = r.u8();
        if (has_adam > 1) throw CheckpointError("checkpoint: bad optimizer flag");
        if (has_adam) {
            nn::AdamState<float> st;
            st.step = r.u64();
            for (double* h : {&st.hyper.lr, &st.hyper.beta1, &st.hyper.beta2, &st.hyper.eps})
                *h = std::bit_cast<double>(r.u64());
            for (const auto& p : params) {
                st.m.emplace_back(p.value.shape());
                st.v.emplace_back(p.value.shape());
                get_values(r, st.m.back());
                get_values(r, st.v.back());
            }
            ck.adam = std::move(st);
        }
        if (!r.at_end()) throw CheckpointError("checkpoint: trailing bytes");
        return ck;
    } catch (const CheckpointError&) {
        throw;
    } catch (const FormatError& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const model::CpvModel<float>& m,
                     const nn::AdamState<float>* adam) {
    write_file_atomic(path, encode_checkpoint(m, adam));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    try {
        return decode_checkpoint(read_file(path));
    } catch (const CheckpointError& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    }
}

void load_checkpoint_into(const std::filesystem::path& path, model::CpvModel<float>& m) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.model.config().mode != m.config().mode)
        throw CheckpointError(path.string() + ": mode mismatch, stored " + std::string(model::to_string(ck.model.config().mode)) +
                              ", expected " + std::string(model::to_string(m.config().mode)));
    if (m.has_encoder() && ck.model.config().embed_dim != m.config().embed_dim)
        throw CheckpointError(path.string() + ": shape mismatch, stored embed_dim " +
                              std::to_string(ck.model.config().embed_dim) + ", expected " +
                              std::to_string(m.config().embed_dim));
    m = std::move(ck.model);
}

}  // namespace cpv::train
