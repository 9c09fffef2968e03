#include "cpv/craftworld/craftworld.h"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "cpv/common/rng.h"

namespace cpv::craft {

namespace {

constexpr std::array<std::string_view, kNumCellObjects> kObjectNames{
    "Empty", "Tree", "Rock", "Logs", "Wheat", "Bread", "Hammer", "Axe", "House"};
constexpr std::array<std::string_view, kNumActions> kActionNames{"Up", "Down", "Left", "Right", "Pickup", "Drop"};
constexpr std::array<std::string_view, kNumSkills> kSkillNames{"ChopTree", "BreakRock", "BuildHouse", "MakeBread",
                                                               "EatBread"};

constexpr std::array<Rgb, kNumCellObjects> kPalette{{
    {0, 0, 0},        // Empty
    {0, 128, 0},      // Tree
    {128, 128, 128},  // Rock
    {139, 69, 19},    // Logs
    {218, 165, 32},   // Wheat
    {255, 220, 100},  // Bread
    {80, 80, 255},    // Hammer
    {200, 60, 60},    // Axe
    {255, 140, 0},    // House
}};

// Objects that can appear at reset, in sampling order.
constexpr std::array<CellObject, 7> kSpawnable{CellObject::Tree,  CellObject::Rock,   CellObject::Logs, CellObject::Wheat,
                                               CellObject::Bread, CellObject::Hammer, CellObject::Axe};

void put_pixel(Observation& obs, int y, int x, Rgb c) {
    auto i = (static_cast<std::size_t>(y) * kObsWidth + static_cast<std::size_t>(x)) * kObsChannels;
    obs[i] = c.r;
    obs[i + 1] = c.g;
    obs[i + 2] = c.b;
}

void fill_block(Observation& obs, int y0, int x0, Rgb c) {
    for (int dy = 0; dy < kCellPx; ++dy)
        for (int dx = 0; dx < kCellPx; ++dx) put_pixel(obs, y0 + dy, x0 + dx, c);
}

}  // namespace

std::string_view to_string(CellObject o) { return kObjectNames[static_cast<std::size_t>(o)]; }
std::string_view to_string(Action a) { return kActionNames[static_cast<std::size_t>(a)]; }
std::string_view to_string(SkillEvent s) { return kSkillNames[static_cast<std::size_t>(s)]; }

std::optional<SkillEvent> parse_skill(std::string_view name) {
    for (int i = 0; i < kNumSkills; ++i)
        if (kSkillNames[static_cast<std::size_t>(i)] == name) return static_cast<SkillEvent>(i);
    return std::nullopt;
}

Cell move_target(Cell from, Action a) {
    switch (a) {
        case Action::Up: return {from.row - 1, from.col};
        case Action::Down: return {from.row + 1, from.col};
        case Action::Left: return {from.row, from.col - 1};
        case Action::Right: return {from.row, from.col + 1};
        default: return from;
    }
}

bool in_bounds(Cell c) { return c.row >= 0 && c.row < kGridRows && c.col >= 0 && c.col < kGridCols; }

bool is_valid(const GridState& s) {
    if (!in_bounds(s.agent) || is_blocking(s.at(s.agent))) return false;
    return s.held == CellObject::Empty || is_pickupable(s.held);
}

StepOutcome step(const GridState& state, Action action) {
    StepOutcome out{state, std::nullopt};
    GridState& next = out.next_state;

    if (action == Action::Pickup) {
        CellObject& under = next.at(next.agent);
        if (!next.holding() && is_pickupable(under)) {
            next.held = under;
            under = CellObject::Empty;
        }
        return out;
    }
    if (action == Action::Drop) {
        CellObject& under = next.at(next.agent);
        if (next.holding() && under == CellObject::Empty) {
            under = next.held;
            next.held = CellObject::Empty;
        }
        return out;
    }

    const Cell target = move_target(next.agent, action);
    if (!in_bounds(target)) return out;

    CellObject& obj = next.at(target);
    const CellObject held = next.held;
    auto transform = [&](CellObject into, SkillEvent ev) {
        obj = into;
        out.event = ev;
    };

    if (obj == CellObject::Tree && held == CellObject::Axe) {
        transform(CellObject::Logs, SkillEvent::ChopTree);
    } else if (obj == CellObject::Rock && held == CellObject::Hammer) {
        transform(CellObject::Empty, SkillEvent::BreakRock);
    } else if (obj == CellObject::Logs && held == CellObject::Hammer) {
        transform(CellObject::House, SkillEvent::BuildHouse);
    } else if (obj == CellObject::Wheat && held == CellObject::Axe) {
        transform(CellObject::Bread, SkillEvent::MakeBread);
    } else if (obj == CellObject::Bread) {
        transform(CellObject::Empty, SkillEvent::EatBread);
        next.agent = target;
    } else if (!is_blocking(obj)) {
        next.agent = target;
    }
    return out;
}

Rgb color_of(CellObject o) { return kPalette[static_cast<std::size_t>(o)]; }

Observation render(const GridState& state) {
    Observation obs{};
    for (int r = 0; r < kGridRows; ++r)
        for (int c = 0; c < kGridCols; ++c) fill_block(obs, r * kCellPx, c * kCellPx, color_of(state.at({r, c})));
    put_pixel(obs, state.agent.row * kCellPx + 1, state.agent.col * kCellPx + 1, kAgentColor);
    if (state.holding()) fill_block(obs, kGridRows * kCellPx, 0, kHeldIndicatorColor);
    return obs;
}

std::vector<std::uint8_t> to_ppm(const Observation& obs) {
    std::string header = "P6\n" + std::to_string(kObsWidth) + " " + std::to_string(kObsHeight) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), obs.begin(), obs.end());
    return out;
}

std::array<int, kNumCellObjects> required_objects(std::span<const SkillEvent> task) {
    std::array<int, kNumCellObjects> need{};
    auto bump = [&](CellObject o) { ++need[static_cast<std::size_t>(o)]; };
    bool axe = false;
    bool hammer = false;
    for (SkillEvent s : task) {
        switch (s) {
            case SkillEvent::ChopTree: bump(CellObject::Tree); axe = true; break;
            case SkillEvent::BreakRock: bump(CellObject::Rock); hammer = true; break;
            case SkillEvent::BuildHouse: bump(CellObject::Logs); hammer = true; break;
            case SkillEvent::MakeBread: bump(CellObject::Wheat); axe = true; break;
            case SkillEvent::EatBread: bump(CellObject::Bread); break;
        }
    }
    if (axe) bump(CellObject::Axe);
    if (hammer) bump(CellObject::Hammer);
    return need;
}

GridState sample_env(std::uint64_t seed, std::span<const SkillEvent> task) {
    if (task.empty()) throw std::invalid_argument("sample_env: task must be nonempty");
    Rng rng = make_rng(seed);

    auto counts = required_objects(task);
    for (CellObject o : kSpawnable) counts[static_cast<std::size_t>(o)] += uniform_int(rng, 0, 2);

    const int total = std::accumulate(counts.begin(), counts.end(), 0);
    if (total + 1 > kGridRows * kGridCols)
        throw InfeasibleSampling("sample_env: " + std::to_string(total) + " objects do not fit on the board");

    std::array<int, kGridRows * kGridCols> cells{};
    std::iota(cells.begin(), cells.end(), 0);
    std::shuffle(cells.begin(), cells.end(), rng);

    GridState s;
    std::size_t next = 0;
    for (CellObject o : kSpawnable)
        for (int k = 0; k < counts[static_cast<std::size_t>(o)]; ++k) s.grid[static_cast<std::size_t>(cells[next++])] = o;
    const int agent_cell = cells[next];
    s.agent = {agent_cell / kGridCols, agent_cell % kGridCols};
    return s;
}

ObjectCounts count_objects(const GridState& state) {
    ObjectCounts c;
    for (CellObject o : state.grid) ++c.on_grid[static_cast<std::size_t>(o)];
    c.held = state.held;
    return c;
}

std::string to_ascii(const GridState& state) {
    static constexpr std::array<char, kNumCellObjects> glyph{'.', 'T', 'R', 'L', 'w', 'b', 'h', 'a', 'H'};
    std::ostringstream os;
    for (int r = 0; r < kGridRows; ++r) {
        for (int c = 0; c < kGridCols; ++c) {
            Cell cell{r, c};
            os << (cell == state.agent ? '@' : glyph[static_cast<std::size_t>(state.at(cell))]);
        }
        os << '\n';
    }
    os << "held: " << (state.holding() ? to_string(state.held) : "nothing") << '\n';
    return os.str();
}

}  // namespace cpv::craft
