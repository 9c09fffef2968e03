#include "cpv/eval/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "cpv/common/rng.h"

namespace cpv::eval {

using craft::Action;
using model::ConditioningMode;

namespace {

constexpr std::uint64_t kTaskTag = 1;
constexpr std::uint64_t kRefTag = 2;
constexpr std::uint64_t kEnvTag = 3;
constexpr std::uint64_t kSecondTaskTag = 4;
constexpr std::uint64_t kSecondRefTag = 5;
constexpr std::uint64_t kRandomTag = 6;

template <typename Policy>
RolloutResult run(const GridState& start, const SkillList& task, int horizon, Criterion criterion, Policy&& policy) {
    if (horizon < 1) throw std::invalid_argument("rollout: horizon must be at least 1");
    RolloutResult r;
    GridState s = start;
    while (r.steps < horizon) {
        const std::optional<Action> a = policy(s, r.events);
        if (!a) break;
        auto out = craft::step(s, *a);
        s = out.next_state;
        ++r.steps;
        if (out.event) r.events.push_back(*out.event);
        if (score(r.events, task, criterion)) {
            r.success = true;
            break;
        }
    }
    r.final_state = s;
    return r;
}

// Whole-trajectory noise-free expert on a fresh environment for `task`.
planner::Trajectory solvable_start(std::uint64_t seed, const SkillList& task) {
    planner::PlannerConfig cfg;
    cfg.noise = 0.0;
    return planner::plan_task(seed, task, cfg);
}

std::vector<float> sum_vectors(const std::vector<float>& a, const std::vector<float>& b) {
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

template <typename Fn>
std::vector<RolloutResult> run_episodes(const EvalOptions& opts, Fn&& episode) {
    if (opts.episodes < 0) throw std::invalid_argument("eval: episodes must be non-negative");
    if (opts.policy == PolicyKind::Model && opts.model == nullptr)
        throw std::invalid_argument("eval: model policy requires a model");
    std::vector<RolloutResult> results(static_cast<std::size_t>(opts.episodes));
    const int workers = std::clamp(opts.workers, 1, std::max(1, opts.episodes));
    auto body = [&](int w) {
        for (int e = w; e < opts.episodes; e += workers)
            results[static_cast<std::size_t>(e)] = episode(derive_seed(opts.seed, static_cast<std::uint64_t>(e)));
    };
    if (workers == 1) {
        body(0);
    } else {
        std::vector<std::jthread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    body(w);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        pool.clear();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return results;
}

EvalResult summarize(std::string condition, const std::vector<RolloutResult>& rs, int horizon, const EvalOptions& opts) {
    EvalResult out;
    out.condition = std::move(condition);
    out.episodes = static_cast<int>(rs.size());
    out.horizon = horizon;
    out.criterion = opts.criterion;
    out.seed = opts.seed;
    double steps = 0;
    for (const auto& r : rs)
        if (r.success) {
            ++out.successes;
            steps += r.steps;
        }
    out.rate = out.episodes ? static_cast<double>(out.successes) / out.episodes : 0.0;
    out.mean_steps = out.successes ? steps / out.successes : std::numeric_limits<double>::quiet_NaN();
    return out;
}

RolloutResult play(const EvalOptions& opts, const Conditioning& cond, const Episode& ep, int horizon,
                   std::uint64_t episode_seed) {
    switch (opts.policy) {
        case PolicyKind::Expert: return rollout_expert(ep.start, ep.task, horizon, opts.criterion);
        case PolicyKind::Random:
            return rollout_random(ep.start, ep.task, horizon, opts.criterion, derive_seed(episode_seed, kRandomTag));
        case PolicyKind::Model: break;
    }
    return rollout(*opts.model, cond, ep.start, ep.task, horizon, opts.criterion);
}

}  // namespace

std::string_view to_string(Criterion c) { return c == Criterion::Contain ? "contain" : "exact"; }

std::optional<Criterion> parse_criterion(std::string_view s) {
    if (s == "contain") return Criterion::Contain;
    if (s == "exact") return Criterion::Exact;
    return std::nullopt;
}

std::string_view to_string(PolicyKind p) {
    switch (p) {
        case PolicyKind::Model: return "model";
        case PolicyKind::Expert: return "expert";
        case PolicyKind::Random: return "random";
    }
    return "?";
}

std::optional<PolicyKind> parse_policy(std::string_view s) {
    if (s == "model") return PolicyKind::Model;
    if (s == "expert") return PolicyKind::Expert;
    if (s == "random") return PolicyKind::Random;
    return std::nullopt;
}

bool score(std::span<const SkillEvent> events, std::span<const SkillEvent> task, Criterion c) {
    std::array<int, craft::kNumSkills> need{}, have{};
    for (SkillEvent e : task) ++need[static_cast<std::size_t>(e)];
    for (SkillEvent e : events) ++have[static_cast<std::size_t>(e)];
    for (std::size_t i = 0; i < need.size(); ++i) {
        if (c == Criterion::Contain ? have[i] < need[i] : have[i] != need[i]) return false;
    }
    return true;
}

RolloutResult rollout(const model::CpvModel<float>& m, const Conditioning& cond, const GridState& start,
                      const SkillList& task, int horizon, Criterion criterion) {
    const ConditioningMode mode = m.config().mode;
    if (mode == ConditioningMode::Naive) {
        if (cond.ref_first.empty() || cond.ref_last.empty())
            throw std::invalid_argument("rollout: naive mode needs reference frames");
    } else if (cond.v_ref.size() != static_cast<std::size_t>(m.context_size())) {
        throw std::invalid_argument("rollout: reference vector has the wrong size");
    }
    const craft::Observation o0 = craft::render(start);
    return run(start, task, horizon, criterion, [&](const GridState& s, const std::vector<SkillEvent>&) {
        const craft::Observation ot = craft::render(s);
        std::array<float, craft::kNumActions> logits{};
        switch (mode) {
            case ConditioningMode::Cpv: {
                const std::vector<float> v_prog = m.embed(o0, ot);
                logits = m.policy_logits(ot, model::CpvContext<float>{cond.v_ref, v_prog});
                break;
            }
            case ConditioningMode::Te: logits = m.policy_logits(ot, model::TeContext<float>{cond.v_ref}); break;
            case ConditioningMode::Naive:
                logits = m.policy_logits(ot, model::NaiveContext{cond.ref_first, cond.ref_last, o0});
                break;
        }
        return std::optional<Action>(static_cast<Action>(model::argmax(logits)));
    });
}

RolloutResult rollout_expert(const GridState& start, const SkillList& task, int horizon, Criterion criterion) {
    std::size_t next = 0;
    std::size_t seen = 0;
    return run(start, task, horizon, criterion, [&](const GridState& s, const std::vector<SkillEvent>& events) {
        for (; seen < events.size(); ++seen)
            if (next < task.size() && events[seen] == task[next]) ++next;
        if (next >= task.size()) return std::optional<Action>();
        return planner::expert_action(s, task[next]);
    });
}

RolloutResult rollout_random(const GridState& start, const SkillList& task, int horizon, Criterion criterion,
                             std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return run(start, task, horizon, criterion, [&](const GridState&, const std::vector<SkillEvent>&) {
        return std::optional<Action>(static_cast<Action>(uniform_int(rng, 0, craft::kNumActions - 1)));
    });
}

Conditioning condition_on(const model::CpvModel<float>& m, const planner::Trajectory& reference) {
    Conditioning c;
    if (m.has_encoder()) {
        c.v_ref = m.embed(reference.first(), reference.last());
    } else {
        c.ref_first = model::to_frame(reference.first());
        c.ref_last = model::to_frame(reference.last());
    }
    return c;
}

double mean_expert_steps(int skills, std::uint64_t seed, int probes, double noise) {
    if (skills < 1 || probes < 1) throw std::invalid_argument("mean_expert_steps: need skills >= 1 and probes >= 1");
    double total = 0;
    for (int i = 0; i < probes; ++i) {
        const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));
        const SkillList task = planner::sample_task(derive_seed(s, kTaskTag), skills, skills);
        planner::PlannerConfig cfg;
        cfg.noise = noise;
        total += planner::plan_task(derive_seed(s, kEnvTag), task, cfg).length;
    }
    return total / probes;
}

int horizon_for(int skills, std::uint64_t seed, int probes) {
    switch (skills) {
        case 4: return 160;
        case 8: return 280;
        case 16: return 550;
        default: break;
    }
    static std::mutex mu;
    static std::map<std::tuple<int, std::uint64_t, int>, int> cache;
    const auto key = std::make_tuple(skills, seed, probes);
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const int h = std::max(1, static_cast<int>(std::lround(3.0 * mean_expert_steps(skills, seed, probes))));
    std::lock_guard lock(mu);
    cache[key] = h;
    return h;
}

Episode make_generalization_episode(int skills, std::uint64_t episode_seed, double reference_noise) {
    planner::PlannerConfig ref_cfg;
    ref_cfg.noise = reference_noise;
    Episode ep;
    ep.task = planner::sample_task(derive_seed(episode_seed, kTaskTag), skills, skills);
    ep.references.push_back(planner::plan_task(derive_seed(episode_seed, kRefTag), ep.task, ref_cfg));
    ep.reference_tasks.push_back(ep.task);
    ep.start = craft::sample_env(solvable_start(derive_seed(episode_seed, kEnvTag), ep.task).start_seed, ep.task);
    return ep;
}

Episode make_composition_episode(int k1, int k2, std::uint64_t episode_seed, double reference_noise) {
    if (k1 < 1 || k2 < 0) throw std::invalid_argument("composition: need k1 >= 1 and k2 >= 0");
    planner::PlannerConfig ref_cfg;
    ref_cfg.noise = reference_noise;
    Episode ep;
    const SkillList t1 = planner::sample_task(derive_seed(episode_seed, kTaskTag), k1, k1);
    ep.references.push_back(planner::plan_task(derive_seed(episode_seed, kRefTag), t1, ref_cfg));
    ep.reference_tasks.push_back(t1);
    ep.task = t1;
    if (k2 > 0) {
        const SkillList t2 = planner::sample_task(derive_seed(episode_seed, kSecondTaskTag), k2, k2);
        ep.references.push_back(planner::plan_task(derive_seed(episode_seed, kSecondRefTag), t2, ref_cfg));
        ep.reference_tasks.push_back(t2);
        ep.task.insert(ep.task.end(), t2.begin(), t2.end());
    }
    ep.start = craft::sample_env(solvable_start(derive_seed(episode_seed, kEnvTag), ep.task).start_seed, ep.task);
    return ep;
}

EvalResult eval_generalization(int skills, const EvalOptions& opts) {
    if (skills < 1) throw std::invalid_argument("eval_generalization: skills must be positive");
    const int horizon = opts.horizon > 0 ? opts.horizon : horizon_for(skills);
    auto results = run_episodes(opts, [&](std::uint64_t es) {
        const Episode ep = make_generalization_episode(skills, es, opts.reference_noise);
        Conditioning cond;
        if (opts.policy == PolicyKind::Model) cond = condition_on(*opts.model, ep.references[0]);
        return play(opts, cond, ep, horizon, es);
    });
    return summarize("skills" + std::to_string(skills) + "/" + std::string(to_string(opts.criterion)), results, horizon,
                     opts);
}

EvalResult eval_composition(int k1, int k2, const EvalOptions& opts) {
    if (opts.policy == PolicyKind::Model && opts.model == nullptr)
        throw std::invalid_argument("eval_composition: model policy requires a model");
    const int horizon = opts.horizon > 0 ? opts.horizon : horizon_for(k1 + k2);
    auto results = run_episodes(opts, [&](std::uint64_t es) {
        const Episode ep = make_composition_episode(k1, k2, es, opts.reference_noise);
        Conditioning cond;
        if (opts.policy == PolicyKind::Model) {
            const auto& m = *opts.model;
            const craft::Observation start_obs = craft::render(ep.start);
            const auto& r1 = ep.references[0];
            if (m.has_encoder()) {
                const auto v2 = k2 > 0 ? m.embed(ep.references[1].first(), ep.references[1].last())
                                       : m.embed(start_obs, start_obs);
                cond.v_ref = sum_vectors(m.embed(r1.first(), r1.last()), v2);
            } else {
                const craft::Observation& f2 = k2 > 0 ? ep.references[1].first() : start_obs;
                const craft::Observation& l2 = k2 > 0 ? ep.references[1].last() : start_obs;
                cond.ref_first = model::average_frames(model::to_frame(r1.first()), model::to_frame(f2));
                cond.ref_last = model::average_frames(model::to_frame(r1.last()), model::to_frame(l2));
            }
        }
        return play(opts, cond, ep, horizon, es);
    });
    return summarize("compose" + std::to_string(k1) + "+" + std::to_string(k2) + "/" +
                         std::string(to_string(opts.criterion)),
                     results, horizon, opts);
}

HomGap hom_gap(const model::CpvModel<float>& m, const planner::Dataset& ds, std::span<const std::size_t> pairs,
               std::uint64_t seed) {
    if (!m.has_encoder()) throw std::invalid_argument("hom_gap: model has no encoder");
    if (pairs.empty()) throw std::invalid_argument("hom_gap: no demonstrations");
    constexpr std::size_t kChunk = 32;
    HomGap out;
    const auto D = static_cast<std::size_t>(m.context_size());
    for (std::size_t start = 0; start < pairs.size(); start += kChunk) {
        const std::size_t end = std::min(pairs.size(), start + kChunk);
        std::vector<model::FramePair> rows;
        for (std::size_t i = start; i < end; ++i) {
            const auto& demo = ds.pairs[pairs[i]].demo;
            Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
            const auto H = static_cast<int>(demo.length);
            const std::size_t t = H >= 2 ? static_cast<std::size_t>(uniform_int(rng, 1, H - 1)) : 1;
            rows.push_back({demo.first(), demo.observations[std::min<std::size_t>(t, demo.length)]});
            rows.push_back({demo.observations[std::min<std::size_t>(t, demo.length)], demo.last()});
            rows.push_back({demo.first(), demo.last()});
        }
        const auto emb = m.embed_batch(rows);
        for (std::size_t i = 0; i < end - start; ++i) {
            const float* a = emb.data() + (3 * i) * D;
            const float* b = a + D;
            const float* w = b + D;
            double r2 = 0, n2 = 0;
            for (std::size_t k = 0; k < D; ++k) {
                const double d = static_cast<double>(a[k]) + b[k] - w[k];
                r2 += d * d;
                n2 += static_cast<double>(w[k]) * w[k];
            }
            out.residual += std::sqrt(r2);
            out.whole_norm += std::sqrt(n2);
        }
    }
    out.count = pairs.size();
    out.residual /= static_cast<double>(out.count);
    out.whole_norm /= static_cast<double>(out.count);
    return out;
}

std::string results_header() { return "condition,episodes,successes,rate,mean_steps\n"; }

std::string format_result(const EvalResult& r) {
    char buf[256];
    if (std::isnan(r.mean_steps))
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%.6f,nan\n", r.condition.c_str(), r.episodes, r.successes, r.rate);
    else
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%.6f,%.4f\n", r.condition.c_str(), r.episodes, r.successes, r.rate,
                      r.mean_steps);
    return buf;
}

}  // namespace cpv::eval
