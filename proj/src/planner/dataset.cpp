#include "cpv/planner/dataset.h"

#include <algorithm>
#include <numeric>
#include <thread>

#include "cpv/common/binary_io.h"

namespace cpv::planner {

Split train_validation_split(const Dataset& ds) {
    std::vector<std::size_t> idx(ds.pairs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = make_rng(derive_seed(ds.meta.seed, 0x73706c6974ULL));
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_val = idx.size() / 10;
    Split s;
    s.train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(n_val));
    s.validation.assign(idx.end() - static_cast<std::ptrdiff_t>(n_val), idx.end());
    return s;
}

DemoPair generate_pair(std::uint64_t dataset_seed, std::size_t index, int k_min, int k_max,
                       const PlannerConfig& cfg) {
    const std::uint64_t pair_seed = derive_seed(dataset_seed, index);
    DemoPair p;
    p.task = sample_task(derive_seed(pair_seed, 1), k_min, k_max);
    Trajectory ref = plan_task(derive_seed(pair_seed, 2), p.task, cfg);
    p.demo = plan_task(derive_seed(pair_seed, 3), p.task, cfg);

    p.reference.start_seed = ref.start_seed;
    p.reference.length = ref.length;
    p.reference.events = std::move(ref.events);
    p.reference.observations = {ref.observations.front(), ref.observations.back()};
    return p;
}

Dataset generate_dataset(std::uint64_t seed, std::size_t n_pairs, int k_min, int k_max, const PlannerConfig& cfg,
                         int workers) {
    if (n_pairs < 1) throw std::invalid_argument("generate_dataset: n_pairs must be >= 1");
    Dataset ds;
    ds.meta = {seed, k_min, k_max, static_cast<float>(cfg.noise)};
    ds.pairs.resize(n_pairs);

    workers = std::max(1, workers);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    auto run = [&](int w) {
        try {
            for (std::size_t i = static_cast<std::size_t>(w); i < n_pairs; i += static_cast<std::size_t>(workers))
                ds.pairs[i] = generate_pair(seed, i, k_min, k_max, cfg);
        } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return ds;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
    ByteWriter w;
    w.tag("CPVD");
    w.u32(kDatasetVersion);
    w.u64(ds.pairs.size());
    w.u8(static_cast<std::uint8_t>(ds.meta.k_min));
    w.u8(static_cast<std::uint8_t>(ds.meta.k_max));
    w.f32(ds.meta.noise);
    w.u64(ds.meta.seed);
    for (const auto& p : ds.pairs) {
        w.u8(static_cast<std::uint8_t>(p.task.size()));
        for (auto s : p.task) w.u8(static_cast<std::uint8_t>(s));

        w.u64(p.reference.start_seed);
        w.u32(p.reference.length);
        w.bytes(p.reference.first());
        w.bytes(p.reference.last());

        w.u64(p.demo.start_seed);
        w.u32(p.demo.length);
        for (auto a : p.demo.actions) w.u8(static_cast<std::uint8_t>(a));
        for (const auto& o : p.demo.observations) w.bytes(o);
    }
    return std::move(w.data());
}

namespace {

craft::Observation read_frame(ByteReader& r) {
    craft::Observation o;
    auto b = r.bytes(craft::kObsBytes);
    std::copy(b.begin(), b.end(), o.begin());
    return o;
}

}  // namespace

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("CPVD", "dataset");
    if (auto v = r.u32(); v != kDatasetVersion) throw FormatError("dataset: unsupported version " + std::to_string(v));
    Dataset ds;
    const std::uint64_t n = r.u64();
    ds.meta.k_min = r.u8();
    ds.meta.k_max = r.u8();
    ds.meta.noise = r.f32();
    ds.meta.seed = r.u64();
    // Each pair needs at least three frames; reject absurd counts before allocating.
    if (n > r.remaining() / (3 * craft::kObsBytes)) throw FormatError("dataset: pair count exceeds file size");
    ds.pairs.resize(n);
    for (auto& p : ds.pairs) {
        const std::size_t len = r.u8();
        p.task.resize(len);
        for (auto& s : p.task) {
            const auto id = r.u8();
            if (id >= craft::kNumSkills) throw FormatError("dataset: bad skill id");
            s = static_cast<SkillEvent>(id);
        }
        p.reference.start_seed = r.u64();
        p.reference.length = r.u32();
        p.reference.observations.push_back(read_frame(r));
        p.reference.observations.push_back(read_frame(r));

        p.demo.start_seed = r.u64();
        p.demo.length = r.u32();
        if (p.demo.length > r.remaining()) throw FormatError("dataset: demo length exceeds file size");
        p.demo.actions.resize(p.demo.length);
        for (auto& a : p.demo.actions) {
            const auto id = r.u8();
            if (id >= craft::kNumActions) throw FormatError("dataset: bad action id");
            a = static_cast<Action>(id);
        }
        p.demo.observations.reserve(p.demo.length + 1);
        for (std::uint32_t i = 0; i <= p.demo.length; ++i) p.demo.observations.push_back(read_frame(r));
    }
    if (!r.at_end()) throw FormatError("dataset: trailing bytes");
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    write_file_atomic(path, encode_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

ReplayReport replay_check(const Dataset& ds) {
    ReplayReport rep;
    for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
        const auto& p = ds.pairs[i];
        ++rep.checked;
        auto fail = [&](std::string why) { rep.issues.push_back({i, std::move(why)}); };
        try {
            auto demo = replay(p.demo.start_seed, p.task, p.demo.actions);
            if (demo.observations != p.demo.observations) {
                fail("demo frames differ from replay");
                continue;
            }
            if (demo.events != p.task) {
                fail("demo events do not match task");
                continue;
            }
            // The reference keeps no actions; check its start frame and that
            // it is a distinct environment.
            const auto ref_start = craft::render(craft::sample_env(p.reference.start_seed, p.task));
            if (ref_start != p.reference.first()) {
                fail("reference first frame does not match its seed");
                continue;
            }
            if (p.reference.start_seed == p.demo.start_seed) {
                fail("reference and demo share an environment");
                continue;
            }
        } catch (const std::exception& e) {
            fail(e.what());
            continue;
        }
        ++rep.passed;
    }
    return rep;
}

}  // namespace cpv::planner
