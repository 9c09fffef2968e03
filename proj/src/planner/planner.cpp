#include "cpv/planner/planner.h"

#include <algorithm>
#include <array>
#include <deque>

namespace cpv::planner {

using craft::CellObject;

namespace {

constexpr std::array<Action, 4> kMoves{Action::Up, Action::Down, Action::Left, Action::Right};
constexpr int kCells = craft::kGridRows * craft::kGridCols;

int index_of(Cell c) { return c.row * craft::kGridCols + c.col; }

// Cells the expert must not enter while executing `skill`: anything that
// would emit an event other than the intended transform.
bool would_fire_event(const GridState& s, Cell c) {
    const CellObject o = s.at(c);
    if (o == CellObject::Bread) return true;
    if (o == CellObject::Wheat && s.held == CellObject::Axe) return true;
    if (o == CellObject::Logs && s.held == CellObject::Hammer) return true;
    return false;
}

}  // namespace

SkillList sample_task(std::uint64_t seed, int k_min, int k_max) {
    if (k_min < 1 || k_max < k_min) throw std::invalid_argument("sample_task: need 1 <= k_min <= k_max");
    Rng rng = make_rng(seed);
    const int len = uniform_int(rng, k_min, k_max);
    SkillList task(static_cast<std::size_t>(len));
    for (auto& s : task) s = static_cast<SkillEvent>(uniform_int(rng, 0, craft::kNumSkills - 1));
    return task;
}

std::optional<std::vector<Action>> shortest_path(const GridState& state, const CellPredicate& goal,
                                                 const CellPredicate& avoid) {
    if (goal(state, state.agent)) return std::vector<Action>{};

    std::array<int, kCells> parent{};
    std::array<Action, kCells> via{};
    parent.fill(-2);
    std::deque<Cell> frontier{state.agent};
    parent[static_cast<std::size_t>(index_of(state.agent))] = -1;

    auto unwind = [&](Cell from, Action last) {
        std::vector<Action> path{last};
        for (int at = index_of(from); parent[static_cast<std::size_t>(at)] != -1;
             at = parent[static_cast<std::size_t>(at)])
            path.push_back(via[static_cast<std::size_t>(at)]);
        std::reverse(path.begin(), path.end());
        return path;
    };

    while (!frontier.empty()) {
        const Cell cur = frontier.front();
        frontier.pop_front();
        for (Action a : kMoves) {
            const Cell nxt = craft::move_target(cur, a);
            if (!craft::in_bounds(nxt)) continue;
            if (goal(state, nxt)) return unwind(cur, a);
            if (craft::is_blocking(state.at(nxt))) continue;
            if (avoid && avoid(state, nxt)) continue;
            auto& p = parent[static_cast<std::size_t>(index_of(nxt))];
            if (p != -2) continue;
            p = index_of(cur);
            via[static_cast<std::size_t>(index_of(nxt))] = a;
            frontier.push_back(nxt);
        }
    }
    return std::nullopt;
}

CellObject required_tool(SkillEvent skill) {
    switch (skill) {
        case SkillEvent::ChopTree:
        case SkillEvent::MakeBread: return CellObject::Axe;
        case SkillEvent::BreakRock:
        case SkillEvent::BuildHouse: return CellObject::Hammer;
        case SkillEvent::EatBread: return CellObject::Empty;
    }
    return CellObject::Empty;
}

CellObject skill_target(SkillEvent skill) {
    switch (skill) {
        case SkillEvent::ChopTree: return CellObject::Tree;
        case SkillEvent::BreakRock: return CellObject::Rock;
        case SkillEvent::BuildHouse: return CellObject::Logs;
        case SkillEvent::MakeBread: return CellObject::Wheat;
        case SkillEvent::EatBread: return CellObject::Bread;
    }
    return CellObject::Empty;
}

std::optional<Action> expert_action(const GridState& state, SkillEvent skill) {
    const CellObject tool = required_tool(skill);
    auto first_of = [](const std::optional<std::vector<Action>>& path, Action at_goal) -> std::optional<Action> {
        if (!path) return std::nullopt;
        return path->empty() ? at_goal : path->front();
    };

    if (tool != CellObject::Empty && state.holding() && state.held != tool) {
        auto path = shortest_path(
            state, [](const GridState& s, Cell c) { return s.at(c) == CellObject::Empty; }, would_fire_event);
        return first_of(path, Action::Drop);
    }
    if (tool != CellObject::Empty && !state.holding()) {
        auto path = shortest_path(
            state, [tool](const GridState& s, Cell c) { return s.at(c) == tool; }, would_fire_event);
        return first_of(path, Action::Pickup);
    }
    const CellObject target = skill_target(skill);
    auto path = shortest_path(
        state,
        [target, &state](const GridState& s, Cell c) { return c != state.agent && s.at(c) == target; },
        would_fire_event);
    if (!path || path->empty()) return std::nullopt;
    return path->front();
}

SkillResult plan_skill(const GridState& state, SkillEvent skill, Rng& rng, double noise, int step_cap) {
    SkillResult res;
    GridState cur = state;
    for (int t = 0; t < step_cap; ++t) {
        const auto intended = expert_action(cur, skill);
        if (!intended) break;
        Action a = *intended;
        if (noise > 0.0 && uniform_real(rng) < noise)
            a = static_cast<Action>(uniform_int(rng, 0, craft::kNumActions - 1));
        auto out = craft::step(cur, a);
        cur = out.next_state;
        res.actions.push_back(a);
        res.states.push_back(cur);
        if (out.event) {
            res.events.push_back(*out.event);
            res.success = *out.event == skill;
            break;
        }
    }
    res.final_state = cur;
    return res;
}

SkillResult plan_skill(const GridState& state, SkillEvent skill, std::uint64_t seed, double noise, int step_cap) {
    Rng rng = make_rng(seed);
    return plan_skill(state, skill, rng, noise, step_cap);
}

Trajectory plan_task(std::uint64_t seed, const SkillList& task, const PlannerConfig& cfg) {
    if (task.empty()) throw std::invalid_argument("plan_task: empty task");
    for (int attempt = 0; attempt < cfg.retry_budget; ++attempt) {
        const std::uint64_t env_seed = derive_seed(seed, static_cast<std::uint64_t>(attempt));
        GridState s = craft::sample_env(env_seed, task);
        Rng rng = make_rng(derive_seed(env_seed, 0x6e6f697365ULL));

        Trajectory traj;
        traj.start_seed = env_seed;
        traj.observations.push_back(craft::render(s));
        bool ok = true;
        for (SkillEvent skill : task) {
            auto r = plan_skill(s, skill, rng, cfg.noise, cfg.skill_step_cap);
            for (std::size_t i = 0; i < r.actions.size(); ++i) {
                traj.actions.push_back(r.actions[i]);
                traj.observations.push_back(craft::render(r.states[i]));
            }
            traj.events.insert(traj.events.end(), r.events.begin(), r.events.end());
            s = r.final_state;
            if (!r.success) {
                ok = false;
                break;
            }
        }
        if (ok && traj.events == task) {
            traj.length = static_cast<std::uint32_t>(traj.actions.size());
            return traj;
        }
    }
    throw PlanningFailed("plan_task: no successful trajectory within " + std::to_string(cfg.retry_budget) +
                         " attempts");
}

Replay replay(std::uint64_t start_seed, const SkillList& task, const std::vector<Action>& actions) {
    Replay r;
    GridState s = craft::sample_env(start_seed, task);
    r.observations.push_back(craft::render(s));
    for (Action a : actions) {
        auto out = craft::step(s, a);
        s = out.next_state;
        if (out.event) r.events.push_back(*out.event);
        r.observations.push_back(craft::render(s));
    }
    r.final_state = s;
    return r;
}

}  // namespace cpv::planner
