#pragma once

// Single-agent Overcooked-style kitchen. All operations are pure: a
// WorldState goes in, a new WorldState comes out.

#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "apprentice/htn.hpp"

namespace apprentice {

enum class CellKind {
    Floor,
    Counter,
    OnionDispenser,
    TomatoDispenser,
    PlateDispenser,
    Pot,
    DeliveryStation,
};

enum class Direction { North, South, East, West };

enum class Item { None, Onion, Tomato, CleanPlate, SoupPlate };

enum class Milestone { PickedUpOnion, OnionInPot, PotTurnedOn, SoupPlated, SoupDelivered };

inline constexpr Milestone kAllMilestones[] = {
    Milestone::PickedUpOnion, Milestone::OnionInPot, Milestone::PotTurnedOn,
    Milestone::SoupPlated, Milestone::SoupDelivered,
};

struct Cell {
    int x = 0;
    int y = 0;
    auto operator<=>(const Cell&) const = default;
};

Cell step_toward(Cell c, Direction d);

class EnvironmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LayoutError : public EnvironmentError {
public:
    using EnvironmentError::EnvironmentError;
};

class Unreachable : public EnvironmentError {
public:
    using EnvironmentError::EnvironmentError;
};

class UnknownObject : public EnvironmentError {
public:
    explicit UnknownObject(const std::string& name)
        : EnvironmentError("unknown object: " + name), name(name) {}
    std::string name;
};

/// Layout legend, one character per cell:
///   '.' or ' '  floor          'X'  counter
///   'O'  onion dispenser       'T'  tomato dispenser
///   'D'  plate dispenser       'P'  pot
///   'S'  delivery station      '1'  agent start (floor)
/// Lines starting with ';' are comments.
class Grid {
public:
    Grid(int width, int height, std::vector<CellKind> cells);

    int width() const { return width_; }
    int height() const { return height_; }
    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
    CellKind at(Cell c) const;
    bool walkable(Cell c) const { return in_bounds(c) && at(c) == CellKind::Floor; }

    /// All cells of a kind in row-major scan order.
    std::vector<Cell> cells_of(CellKind kind) const;

    bool operator==(const Grid&) const = default;

private:
    int width_;
    int height_;
    std::vector<CellKind> cells_;
};

struct PotState {
    std::vector<Item> contents;
    enum class Phase { Idle, Cooking, Ready } phase = Phase::Idle;
    int ticks_remaining = 0;
    bool operator==(const PotState&) const = default;
};

struct AgentPose {
    Cell pos;
    Direction facing = Direction::South;
    Item holding = Item::None;
    bool operator==(const AgentPose&) const = default;
};

struct KitchenConfig {
    int pot_capacity = 3;
    /// Ticks between turning a pot on and the soup being ready; 0 means instant.
    int cook_ticks = 0;
    bool operator==(const KitchenConfig&) const = default;
};

struct WorldState {
    std::shared_ptr<const Grid> grid;
    KitchenConfig config;
    AgentPose agent;
    std::map<Cell, PotState> pots;
    std::set<Milestone> milestones;
    long tick = 0;

    bool operator==(const WorldState& other) const;
};

struct Layout {
    std::shared_ptr<const Grid> grid;
    Cell start;
};

Layout parse_layout(std::string_view text);
Layout load_layout(const std::string& path);
/// The bundled 9x6 kitchen.
Layout default_layout();

WorldState initial_state(const Layout& layout, KitchenConfig config = {});

struct WorldObject {
    ObjectRef name;
    CellKind kind;
    Cell cell;
};

/// Targetable objects: onion, tomato, plate, pot, delivery (in that class
/// order), instances in scan order, later instances suffixed 2, 3, ...
std::vector<WorldObject> world_objects(const Grid& grid);
std::vector<ObjectRef> list_objects(const WorldState& state);

/// BFS over floor cells from `from` to any floor cell orthogonally adjacent
/// to `target`. Neighbours are expanded N, S, E, W. Throws Unreachable.
std::vector<Direction> bfs_path(const Grid& grid, Cell from, Cell target);

struct MoveResult {
    WorldState state;
    std::vector<Direction> moves;
};

/// Walks to and faces `target`. A bare class name (`pot`) picks the nearest
/// instance by path length, ties by scan order; a suffixed name (`pot2`)
/// picks that instance. Throws UnknownObject or Unreachable.
MoveResult move_to(const WorldState& state, std::string_view target);

struct PressResult {
    WorldState state;
    std::vector<Milestone> new_milestones;
};

/// Interacts with the faced cell. Never throws; a no-op in any context where
/// no rule applies.
PressResult press_space(const WorldState& state);

/// Advances the clock, counting down cooking pots.
WorldState advance(const WorldState& state, int ticks);

struct Snapshot {
    WorldState state;
    bool operator==(const Snapshot&) const = default;
};

Snapshot snapshot(const WorldState& state);
WorldState restore(const Snapshot& snap);

std::string_view to_string(Milestone m);
std::optional<Milestone> milestone_from_string(std::string_view s);
std::string_view to_string(Direction d);
std::string_view to_string(Item i);
std::string_view to_string(PotState::Phase p);

/// Text picture of the kitchen with the agent drawn as ^ v > <.
std::vector<std::string> render(const WorldState& state);

nlohmann::ordered_json world_to_json(const WorldState& state);

}  // namespace apprentice
