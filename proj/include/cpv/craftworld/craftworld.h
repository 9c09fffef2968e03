#pragma once

// Deterministic crafting grid world: a 10x10 board of objects, an agent that
// can carry one object, and five tool-driven transforms ("skills").

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cpv::craft {

inline constexpr int kGridRows = 10;
inline constexpr int kGridCols = 10;
inline constexpr int kCellPx = 3;
inline constexpr int kObsHeight = kGridRows * kCellPx + kCellPx;  // 33, bottom row is the held indicator
inline constexpr int kObsWidth = kGridCols * kCellPx;             // 30
inline constexpr int kObsChannels = 3;
inline constexpr std::size_t kObsBytes = std::size_t{kObsHeight} * kObsWidth * kObsChannels;

enum class CellObject : std::uint8_t { Empty, Tree, Rock, Logs, Wheat, Bread, Hammer, Axe, House };
inline constexpr int kNumCellObjects = 9;

enum class Action : std::uint8_t { Up, Down, Left, Right, Pickup, Drop };
inline constexpr int kNumActions = 6;

enum class SkillEvent : std::uint8_t { ChopTree, BreakRock, BuildHouse, MakeBread, EatBread };
inline constexpr int kNumSkills = 5;

constexpr bool is_blocking(CellObject o) {
    return o == CellObject::Tree || o == CellObject::Rock || o == CellObject::House;
}

constexpr bool is_pickupable(CellObject o) {
    return o == CellObject::Axe || o == CellObject::Hammer || o == CellObject::Logs;
}

constexpr bool is_movement(Action a) { return static_cast<int>(a) < 4; }

std::string_view to_string(CellObject o);
std::string_view to_string(Action a);
std::string_view to_string(SkillEvent s);
std::optional<SkillEvent> parse_skill(std::string_view name);

struct Cell {
    int row = 0;
    int col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

// Cell entered by a movement action (may be out of bounds).
Cell move_target(Cell from, Action a);
bool in_bounds(Cell c);

struct GridState {
    std::array<CellObject, kGridRows * kGridCols> grid{};
    Cell agent{};
    // Empty means nothing held; otherwise Axe, Hammer or Logs.
    CellObject held = CellObject::Empty;

    CellObject at(Cell c) const { return grid[static_cast<std::size_t>(c.row * kGridCols + c.col)]; }
    CellObject& at(Cell c) { return grid[static_cast<std::size_t>(c.row * kGridCols + c.col)]; }
    bool holding() const { return held != CellObject::Empty; }

    friend bool operator==(const GridState&, const GridState&) = default;
};

// Agent in bounds, not on a blocking cell, held object pickup-able or empty.
bool is_valid(const GridState& s);

struct StepOutcome {
    GridState next_state;
    // At most one event per step.
    std::optional<SkillEvent> event;

    std::vector<SkillEvent> events() const {
        return event ? std::vector<SkillEvent>{*event} : std::vector<SkillEvent>{};
    }
};

StepOutcome step(const GridState& state, Action action);

// HWC, 8-bit RGB.
using Observation = std::array<std::uint8_t, kObsBytes>;

struct Rgb {
    std::uint8_t r, g, b;
};

Rgb color_of(CellObject o);
inline constexpr Rgb kAgentColor{255, 255, 255};
inline constexpr Rgb kHeldIndicatorColor{255, 255, 255};

Observation render(const GridState& state);

// Binary PPM (P6) encoding of an observation.
std::vector<std::uint8_t> to_ppm(const Observation& obs);

using SkillList = std::vector<SkillEvent>;

class InfeasibleSampling : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

// Per-type object counts required so that `task` can be completed without
// relying on products of earlier skills.
std::array<int, kNumCellObjects> required_objects(std::span<const SkillEvent> task);

// Random initial state for `task`, fully determined by `seed`.
// Throws InfeasibleSampling if the objects do not fit on the board.
GridState sample_env(std::uint64_t seed, std::span<const SkillEvent> task);

struct ObjectCounts {
    std::array<int, kNumCellObjects> on_grid{};
    CellObject held = CellObject::Empty;

    int operator[](CellObject o) const { return on_grid[static_cast<std::size_t>(o)]; }
    // Grid count plus one if the object is held.
    int total(CellObject o) const { return (*this)[o] + (held == o && o != CellObject::Empty ? 1 : 0); }
    friend bool operator==(const ObjectCounts&, const ObjectCounts&) = default;
};

ObjectCounts count_objects(const GridState& state);

// Human-readable board, one character per cell ('@' marks the agent).
std::string to_ascii(const GridState& state);

}  // namespace cpv::craft
