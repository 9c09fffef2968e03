#include "cpv/train/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cpv/common/binary_io.h"
#include "cpv/common/rng.h"
#include "cpv/nn/adam.h"
#include "cpv/train/checkpoint.h"

namespace cpv::train {

using model::BatchItem;
using model::TrainBatch;

namespace {

constexpr std::uint64_t kTrainProbeTag = 0x7072747261696eULL;
constexpr std::uint64_t kValProbeTag = 0x70727661ULL;
constexpr std::uint64_t kAccuracyTag = 0x61636375ULL;
constexpr std::uint64_t kStepTag = 0x73746570ULL;
constexpr std::size_t kAccuracyChunk = 64;

BatchItem make_item(const planner::Dataset& ds, std::size_t pair, std::uint32_t t, std::uint32_t split) {
    const auto& p = ds.pairs[pair];
    BatchItem it;
    it.ref_first = p.reference.first();
    it.ref_last = p.reference.last();
    it.demo_first = p.demo.first();
    it.demo_t = p.demo.observations[t];
    it.demo_split = p.demo.observations[split];
    it.demo_last = p.demo.last();
    it.action = static_cast<int>(p.demo.actions[t]);
    it.pair = pair;
    it.timestep = t;
    it.split = split;
    return it;
}

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

TrainBatch make_batch(const planner::Dataset& ds, std::span<const std::size_t> pairs, std::uint64_t seed,
                      int batch_size) {
    if (pairs.empty()) throw std::invalid_argument("make_batch: no pairs to sample from");
    if (batch_size < 1) throw std::invalid_argument("make_batch: batch_size must be positive");
    Rng rng = make_rng(seed);
    TrainBatch batch;
    batch.items.reserve(static_cast<std::size_t>(batch_size));
    for (int b = 0; b < batch_size; ++b) {
        const std::size_t pair = pairs[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(pairs.size()) - 1))];
        const auto H = static_cast<int>(ds.pairs[pair].demo.length);
        if (H < 1) throw std::invalid_argument("make_batch: pair " + std::to_string(pair) + " has an empty demo");
        const auto t = static_cast<std::uint32_t>(uniform_int(rng, 0, H - 1));
        const auto split = H >= 2 ? static_cast<std::uint32_t>(uniform_int(rng, 1, H - 1)) : 1U;
        batch.items.push_back(make_item(ds, pair, t, split));
    }
    std::vector<int> others;
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
        others.clear();
        for (std::size_t j = 0; j < batch.items.size(); ++j)
            if (batch.items[j].pair != batch.items[i].pair) others.push_back(static_cast<int>(j));
        batch.items[i].negative =
            others.empty() ? -1 : others[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(others.size()) - 1))];
    }
    return batch;
}

TrainBatch make_batch(const planner::Dataset& ds, std::uint64_t seed, int batch_size) {
    std::vector<std::size_t> all(ds.pairs.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return make_batch(ds, all, seed, batch_size);
}

std::vector<StepRef> all_steps(const planner::Dataset& ds, std::span<const std::size_t> pairs) {
    std::vector<StepRef> out;
    for (std::size_t p : pairs)
        for (std::uint32_t t = 0; t < ds.pairs[p].demo.length; ++t) out.push_back({p, t});
    return out;
}

double teacher_forced_accuracy(model::CpvModel<float>& m, const planner::Dataset& ds, std::span<const StepRef> steps) {
    if (steps.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t correct = 0;
    for (std::size_t start = 0; start < steps.size(); start += kAccuracyChunk) {
        TrainBatch batch;
        const std::size_t end = std::min(steps.size(), start + kAccuracyChunk);
        for (std::size_t i = start; i < end; ++i) batch.items.push_back(make_item(ds, steps[i].pair, steps[i].t, 1));
        correct += m.compute_losses(batch, {0.0, 0.0}, {}).correct;
    }
    return static_cast<double>(correct) / static_cast<double>(steps.size());
}

LossSummary evaluate_losses(model::CpvModel<float>& m, std::span<const TrainBatch> batches, const model::LossWeights& w) {
    LossSummary s;
    if (batches.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan, nan};
    }
    for (const auto& b : batches) {
        auto r = m.compute_losses(b, {0.0, 0.0}, {.all_terms = true});
        s.il += r.il;
        s.hom += r.hom;
        s.pair += r.pair;
        double total = r.il;
        if (m.has_encoder() && w.hom > 0.0) total += w.hom * r.hom;
        if (m.has_encoder() && w.pair > 0.0) total += w.pair * r.pair;
        s.total += total;
    }
    const auto n = static_cast<double>(batches.size());
    s.il /= n;
    s.hom /= n;
    s.pair /= n;
    s.total /= n;
    return s;
}

std::string metrics_header() {
    return "epoch,step,running_total,train_il,train_hom,train_pair,train_total,val_il,val_hom,val_pair,val_total,"
           "train_accuracy,val_accuracy\n";
}

std::string format_metrics_row(const MetricsRow& r) {
    std::ostringstream o;
    o << r.epoch << ',' << r.step << ',' << num(r.running_total) << ',' << num(r.train.il) << ',' << num(r.train.hom)
      << ',' << num(r.train.pair) << ',' << num(r.train.total) << ',' << num(r.val.il) << ',' << num(r.val.hom) << ','
      << num(r.val.pair) << ',' << num(r.val.total) << ',' << num(r.train_accuracy) << ',' << num(r.val_accuracy)
      << '\n';
    return o.str();
}

std::filesystem::path best_checkpoint_path(const TrainConfig& cfg) { return cfg.checkpoint + ".best"; }

std::uint64_t steps_per_epoch(const TrainConfig& cfg, std::span<const std::size_t> train) {
    if (cfg.steps_per_epoch > 0) return static_cast<std::uint64_t>(cfg.steps_per_epoch);
    return std::max<std::uint64_t>(1, train.size());
}

TrainResult train(const TrainConfig& cfg) {
    validate(cfg);
    const planner::Dataset ds = planner::load_dataset(cfg.dataset);
    return train(cfg, ds);
}

TrainResult train(const TrainConfig& cfg, const planner::Dataset& ds) {
    validate(cfg);
    if (ds.pairs.empty()) throw std::invalid_argument("train: dataset is empty");
    const planner::Split split = planner::train_validation_split(ds);
    if (split.train.empty()) throw std::invalid_argument("train: no training pairs after the split");

    model::CpvModel<float> net({cfg.mode, cfg.embed_dim}, cfg.seed);
    const model::LossWeights weights{cfg.lambda_hom, cfg.lambda_pair};
    auto adam = nn::make_adam_state<float>(net.parameters(), {.lr = cfg.lr});

    // Fixed probe batches and accuracy samples.
    std::vector<TrainBatch> train_probe, val_probe;
    for (int k = 0; k < cfg.probe_batches; ++k) {
        train_probe.push_back(make_batch(ds, split.train, derive_seed(derive_seed(cfg.seed, kTrainProbeTag), k), cfg.batch_size));
        if (!split.validation.empty())
            val_probe.push_back(
                make_batch(ds, split.validation, derive_seed(derive_seed(cfg.seed, kValProbeTag), k), cfg.batch_size));
    }
    auto pick_steps = [&](std::span<const std::size_t> pairs, std::uint64_t tag) {
        auto steps = all_steps(ds, pairs);
        const auto n = static_cast<std::size_t>(cfg.accuracy_samples);
        if (n > 0 && steps.size() > n) {
            Rng rng = make_rng(derive_seed(cfg.seed, tag));
            std::shuffle(steps.begin(), steps.end(), rng);
            steps.resize(n);
            std::sort(steps.begin(), steps.end(),
                      [](const StepRef& a, const StepRef& b) { return a.pair != b.pair ? a.pair < b.pair : a.t < b.t; });
        }
        return steps;
    };
    const auto train_steps = pick_steps(split.train, kAccuracyTag);
    const auto val_steps = pick_steps(split.validation, kAccuracyTag + 1);

    const std::uint64_t per_epoch = steps_per_epoch(cfg, split.train);
    spdlog::info("train: {} pairs ({} train, {} validation), {} steps/epoch, {} parameters", ds.pairs.size(),
              split.train.size(), split.validation.size(), per_epoch, net.parameter_count());

    TrainResult result;
    result.final_checkpoint = cfg.checkpoint;
    result.best_checkpoint = best_checkpoint_path(cfg);
    result.best_val_il = std::numeric_limits<double>::infinity();
    std::string csv = metrics_header();
    std::string timing = "epoch,seconds\n";
    const auto t0 = std::chrono::steady_clock::now();

    auto record = [&](int epoch, double running) {
        MetricsRow row;
        row.epoch = epoch;
        row.step = result.steps;
        row.running_total = running;
        row.train = evaluate_losses(net, train_probe, weights);
        row.val = evaluate_losses(net, val_probe, weights);
        row.train_accuracy = teacher_forced_accuracy(net, ds, train_steps);
        row.val_accuracy = teacher_forced_accuracy(net, ds, val_steps);
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // Hom/Pair are NaN on a split with a single pair, so only IL is checked.
        if (!std::isfinite(row.train.il) || (!val_probe.empty() && !std::isfinite(row.val.il)))
            throw NonFiniteLoss("train: non-finite probe loss at epoch " + std::to_string(epoch));
        csv += format_metrics_row(row);
        timing += std::to_string(epoch) + ',' + num(row.seconds) + '\n';
        write_text_atomic(cfg.metrics, csv);
        write_text_atomic(cfg.metrics + ".timing.csv", timing);
        spdlog::info("epoch {} step {}: loss {:.4f} | train il {:.4f} hom {:.4f} pair {:.4f} acc {:.3f} | val il {:.4f} "
                  "acc {:.3f} | {:.1f}s",
                  epoch, row.step, running, row.train.il, row.train.hom, row.train.pair, row.train_accuracy, row.val.il,
                  row.val_accuracy, row.seconds);
        // Selection uses validation IL, or the training probe when there is
        // no validation split.
        const double sel = val_probe.empty() ? row.train.il : row.val.il;
        if (epoch > 0 && sel < result.best_val_il) {
            result.best_val_il = sel;
            result.best_epoch = epoch;
            save_checkpoint(result.best_checkpoint, net);
        }
        result.rows.push_back(row);
    };

    record(0, std::numeric_limits<double>::quiet_NaN());
    const std::uint64_t step_seed = derive_seed(cfg.seed, kStepTag);
    double running = 0.0;
    std::uint64_t counted = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::uint64_t s = 0; s < per_epoch; ++s) {
            const TrainBatch batch = make_batch(ds, split.train, derive_seed(step_seed, result.steps), cfg.batch_size);
            net.zero_grad();
            const auto loss = model::total_loss(net, batch, weights);
            if (!std::isfinite(loss.total))
                throw NonFiniteLoss("train: non-finite loss at step " + std::to_string(result.steps) + " (il " +
                                    num(loss.il) + ", hom " + num(loss.hom) + ", pair " + num(loss.pair) + ")");
            nn::adam_step<float>(net.parameters(), adam);
            running += loss.total;
            ++counted;
            ++result.steps;
        }
        if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
            record(epoch, running / static_cast<double>(counted));
            running = 0.0;
            counted = 0;
        }
    }
    save_checkpoint(result.final_checkpoint, net, &adam);
    return result;
}

}  // namespace cpv::train
