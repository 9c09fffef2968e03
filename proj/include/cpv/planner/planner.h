#pragma once

// Search-based expert for the crafting world and trajectory generation.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cpv/common/rng.h"
#include "cpv/craftworld/craftworld.h"

namespace cpv::planner {

using craft::Action;
using craft::Cell;
using craft::GridState;
using craft::Observation;
using craft::SkillEvent;
using craft::SkillList;

struct PlannerConfig {
    double noise = 0.1;
    int skill_step_cap = 100;
    int retry_budget = 50;
};

class PlanningFailed : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

struct Trajectory {
    std::uint64_t start_seed = 0;
    // Number of actions taken (T for references, H for demonstrations).
    std::uint32_t length = 0;
    // Full trajectories hold length+1 frames; stored references hold only
    // the first and last frame.
    std::vector<Observation> observations;
    std::vector<Action> actions;
    std::vector<SkillEvent> events;

    const Observation& first() const { return observations.front(); }
    const Observation& last() const { return observations.back(); }
};

// Task length uniform in [k_min, k_max], skills i.i.d. uniform with replacement.
SkillList sample_task(std::uint64_t seed, int k_min, int k_max);

using CellPredicate = std::function<bool(const GridState&, Cell)>;

// Breadth-first search over agent positions. Returns the shortest movement
// sequence whose last move enters (or attempts to enter) a cell satisfying
// `goal`; empty when the agent already stands on a goal cell. Blocking cells,
// and cells matching `avoid`, are walls unless they are goals. Neighbours are
// expanded in Up, Down, Left, Right order. nullopt means unreachable.
std::optional<std::vector<Action>> shortest_path(const GridState& state, const CellPredicate& goal,
                                                 const CellPredicate& avoid = {});

// Tool needed for a skill, or Empty.
craft::CellObject required_tool(SkillEvent skill);
// Object the skill transforms.
craft::CellObject skill_target(SkillEvent skill);

// First action of the noise-free expert plan for `skill` from `state`:
// drop a wrong tool, fetch the right one, then trigger the transform on the
// nearest target while never entering cells that would fire another event.
std::optional<Action> expert_action(const GridState& state, SkillEvent skill);

struct SkillResult {
    bool success = false;
    std::vector<Action> actions;
    // States after each action.
    std::vector<GridState> states;
    std::vector<SkillEvent> events;
    GridState final_state;
};

// Runs the expert for one skill with per-step action noise (a uniformly
// random action replaces the plan with probability `noise`). Fails if an
// unintended event fires, no plan exists, or the step cap is hit.
SkillResult plan_skill(const GridState& state, SkillEvent skill, Rng& rng, double noise, int step_cap);
SkillResult plan_skill(const GridState& state, SkillEvent skill, std::uint64_t seed, double noise, int step_cap = 100);

// Samples an environment for `task` and runs the expert over each skill in
// order. Succeeds only if the emitted events equal the task exactly;
// otherwise retries with a derived environment seed. Throws PlanningFailed
// after cfg.retry_budget attempts.
Trajectory plan_task(std::uint64_t seed, const SkillList& task, const PlannerConfig& cfg);

// Replays `actions` from sample_env(start_seed, task).
struct Replay {
    std::vector<Observation> observations;
    std::vector<SkillEvent> events;
    GridState final_state;
};
Replay replay(std::uint64_t start_seed, const SkillList& task, const std::vector<Action>& actions);

}  // namespace cpv::planner
