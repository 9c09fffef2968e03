#pragma once

// Closed-loop rollouts, success scoring, generalization and composition
// evaluation, and the homomorphism residual diagnostic.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpv/model/cpv_model.h"
#include "cpv/planner/dataset.h"
#include "cpv/planner/planner.h"

namespace cpv::eval {

using craft::GridState;
using craft::SkillEvent;
using craft::SkillList;

enum class Criterion : std::uint8_t { Contain, Exact };

std::string_view to_string(Criterion c);
std::optional<Criterion> parse_criterion(std::string_view s);

// Contain: multiset(task) is a sub-multiset of multiset(events).
// Exact: the multisets are equal.
bool score(std::span<const SkillEvent> events, std::span<const SkillEvent> task, Criterion c);

// What the agent is told about the task.
struct Conditioning {
    // Cpv / Te: the reference plan vector (possibly a sum of several).
    std::vector<float> v_ref;
    // Naive: reference endpoints (possibly averaged).
    model::Frame ref_first;
    model::Frame ref_last;
};

enum class PolicyKind : std::uint8_t { Model, Expert, Random };

std::string_view to_string(PolicyKind p);
std::optional<PolicyKind> parse_policy(std::string_view s);

struct RolloutResult {
    std::vector<SkillEvent> events;
    int steps = 0;
    bool success = false;
    GridState final_state;
};

// Greedy rollout of a model policy from `start`. Stops after `horizon`
// actions or as soon as the events satisfy `task` under `criterion`.
RolloutResult rollout(const model::CpvModel<float>& m, const Conditioning& cond, const GridState& start,
                      const SkillList& task, int horizon, Criterion criterion);

// Expert-as-policy: the noise-free planner executes `task` in order.
RolloutResult rollout_expert(const GridState& start, const SkillList& task, int horizon, Criterion criterion);

// Uniformly random actions drawn from `seed`.
RolloutResult rollout_random(const GridState& start, const SkillList& task, int horizon, Criterion criterion,
                             std::uint64_t seed);

// Conditioning for a single reference trajectory (first and last frame).
Conditioning condition_on(const model::CpvModel<float>& m, const planner::Trajectory& reference);

// 160 / 280 / 550 for 4 / 8 / 16 skills; otherwise 3x the mean length of
// the data-generation expert (noise 0.1) over `probes` tasks of that length.
int horizon_for(int skills, std::uint64_t seed = 0x686f72, int probes = 200);
double mean_expert_steps(int skills, std::uint64_t seed, int probes, double noise = 0.1);

struct EvalOptions {
    PolicyKind policy = PolicyKind::Model;
    const model::CpvModel<float>* model = nullptr;
    int episodes = 100;
    std::uint64_t seed = 0;
    Criterion criterion = Criterion::Contain;
    // 0: horizon_for(total skills).
    int horizon = 0;
    int workers = 1;
    // Noise used when generating reference trajectories.
    double reference_noise = 0.1;
};

struct EvalResult {
    std::string condition;
    int episodes = 0;
    int successes = 0;
    double rate = 0.0;
    // Over successful episodes; NaN when there are none.
    double mean_steps = 0.0;
    int horizon = 0;
    Criterion criterion = Criterion::Contain;
    std::uint64_t seed = 0;
};

// One episode's setup, exposed for tests.
struct Episode {
    SkillList task;
    std::vector<planner::Trajectory> references;
    std::vector<SkillList> reference_tasks;
    GridState start;
};

// References are generated with the planner at opts.reference_noise; the
// agent's start is a fresh environment the noise-free planner can solve.
Episode make_generalization_episode(int skills, std::uint64_t episode_seed, double reference_noise);
Episode make_composition_episode(int k1, int k2, std::uint64_t episode_seed, double reference_noise);

EvalResult eval_generalization(int skills, const EvalOptions& opts);
// Conditions on the sum of the two references' plan vectors (Naive: the
// average of their frames). k2 = 0 uses g(o, o) on the agent's first frame.
EvalResult eval_composition(int k1, int k2, const EvalOptions& opts);

struct HomGap {
    double residual = 0.0;
    // Mean ||g(o_0, o_T)|| for scale.
    double whole_norm = 0.0;
    std::size_t count = 0;
};

// Mean ||g(o_0,o_t) + g(o_t,o_T) - g(o_0,o_T)|| with t uniform in [1, H-1].
HomGap hom_gap(const model::CpvModel<float>& m, const planner::Dataset& ds, std::span<const std::size_t> pairs,
               std::uint64_t seed);

std::string results_header();
std::string format_result(const EvalResult& r);

}  // namespace cpv::eval
