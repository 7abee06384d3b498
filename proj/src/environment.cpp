#include "apprentice/environment.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include "apprentice/resources.hpp"

namespace apprentice {

Cell step_toward(Cell c, Direction d) {
    switch (d) {
        case Direction::North: return {c.x, c.y - 1};
        case Direction::South: return {c.x, c.y + 1};
        case Direction::East: return {c.x + 1, c.y};
        case Direction::West: return {c.x - 1, c.y};
    }
    return c;
}

Grid::Grid(int width, int height, std::vector<CellKind> cells)
    : width_(width), height_(height), cells_(std::move(cells)) {
    if (width <= 0 || height <= 0) throw LayoutError("grid must be non-empty");
    if (cells_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw LayoutError("cell count does not match grid size");
    }
}

CellKind Grid::at(Cell c) const {
    if (!in_bounds(c)) throw EnvironmentError("cell out of bounds");
    return cells_[static_cast<std::size_t>(c.y * width_ + c.x)];
}

std::vector<Cell> Grid::cells_of(CellKind kind) const {
    std::vector<Cell> out;
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            if (at({x, y}) == kind) out.push_back({x, y});
        }
    }
    return out;
}

bool WorldState::operator==(const WorldState& other) const {
    const bool same_grid = grid == other.grid || (grid && other.grid && *grid == *other.grid);
    return same_grid && config == other.config && agent == other.agent && pots == other.pots &&
           milestones == other.milestones && tick == other.tick;
}

// --- layouts ----------------------------------------------------------------

Layout parse_layout(std::string_view text) {
    std::vector<std::string> rows;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line.front() == ';') continue;
        if (line.empty()) continue;
        rows.push_back(line);
    }
    if (rows.empty()) throw LayoutError("layout has no rows");

    const int height = static_cast<int>(rows.size());
    const int width = static_cast<int>(rows.front().size());
    std::vector<CellKind> cells;
    std::optional<Cell> start;
    for (int y = 0; y < height; ++y) {
        if (static_cast<int>(rows[y].size()) != width) {
            throw LayoutError("layout row " + std::to_string(y + 1) + " has the wrong width");
        }
        for (int x = 0; x < width; ++x) {
            switch (rows[y][x]) {
                case '.': case ' ': cells.push_back(CellKind::Floor); break;
                case '1':
                    if (start) throw LayoutError("layout has more than one agent start");
                    start = Cell{x, y};
                    cells.push_back(CellKind::Floor);
                    break;
                case 'X': cells.push_back(CellKind::Counter); break;
                case 'O': cells.push_back(CellKind::OnionDispenser); break;
                case 'T': cells.push_back(CellKind::TomatoDispenser); break;
                case 'D': cells.push_back(CellKind::PlateDispenser); break;
                case 'P': cells.push_back(CellKind::Pot); break;
                case 'S': cells.push_back(CellKind::DeliveryStation); break;
                default:
                    throw LayoutError(std::string("unknown layout character '") + rows[y][x] +
                                      "' at row " + std::to_string(y + 1));
            }
        }
    }
    auto grid = std::make_shared<const Grid>(width, height, std::move(cells));
    for (int x = 0; x < width; ++x) {
        if (grid->at({x, 0}) == CellKind::Floor || grid->at({x, height - 1}) == CellKind::Floor) {
            throw LayoutError("border cells must not be floor");
        }
    }
    for (int y = 0; y < height; ++y) {
        if (grid->at({0, y}) == CellKind::Floor || grid->at({width - 1, y}) == CellKind::Floor) {
            throw LayoutError("border cells must not be floor");
        }
    }
    if (!start) throw LayoutError("layout has no agent start ('1')");
    if (grid->cells_of(CellKind::Pot).empty()) throw LayoutError("layout has no pot");
    return {std::move(grid), *start};
}

Layout load_layout(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LayoutError("cannot open layout file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_layout(buf.str());
}

Layout default_layout() { return parse_layout(resources::default_layout()); }

WorldState initial_state(const Layout& layout, KitchenConfig config) {
    WorldState s;
    s.grid = layout.grid;
    s.config = config;
    s.agent.pos = layout.start;
    for (Cell c : layout.grid->cells_of(CellKind::Pot)) s.pots[c] = PotState{};
    return s;
}

// --- objects ----------------------------------------------------------------

namespace {

struct ObjectClass {
    CellKind kind;
    std::string_view name;
};

constexpr ObjectClass kObjectClasses[] = {
    {CellKind::OnionDispenser, "onion"},
    {CellKind::TomatoDispenser, "tomato"},
    {CellKind::PlateDispenser, "plate"},
    {CellKind::Pot, "pot"},
    {CellKind::DeliveryStation, "delivery"},
};

}  // namespace

std::vector<WorldObject> world_objects(const Grid& grid) {
    std::vector<WorldObject> out;
    for (const auto& cls : kObjectClasses) {
        auto cells = grid.cells_of(cls.kind);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            std::string name(cls.name);
            if (i > 0) name += std::to_string(i + 1);
            out.push_back({std::move(name), cls.kind, cells[i]});
        }
    }
    return out;
}

std::vector<ObjectRef> list_objects(const WorldState& state) {
    std::vector<ObjectRef> out;
    for (auto& o : world_objects(*state.grid)) out.push_back(std::move(o.name));
    return out;
}

// --- movement ---------------------------------------------------------------

namespace {

constexpr Direction kExpansionOrder[] = {Direction::North, Direction::South, Direction::East,
                                         Direction::West};

bool adjacent(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y) == 1; }

std::optional<Direction> direction_between(Cell from, Cell to) {
    for (Direction d : kExpansionOrder) {
        if (step_toward(from, d) == to) return d;
    }
    return std::nullopt;
}

}  // namespace

std::vector<Direction> bfs_path(const Grid& grid, Cell from, Cell target) {
    if (!grid.walkable(from)) throw EnvironmentError("path start is not a floor cell");
    if (!grid.in_bounds(target)) throw EnvironmentError("path target is out of bounds");
    if (adjacent(from, target)) return {};

    const auto index = [&](Cell c) { return static_cast<std::size_t>(c.y * grid.width() + c.x); };
    std::vector<int> parent(static_cast<std::size_t>(grid.width() * grid.height()), -1);
    std::vector<Direction> via(parent.size(), Direction::North);
    std::vector<bool> seen(parent.size(), false);
    std::deque<Cell> frontier{from};
    seen[index(from)] = true;

    while (!frontier.empty()) {
        Cell cur = frontier.front();
        frontier.pop_front();
        for (Direction d : kExpansionOrder) {
            Cell next = step_toward(cur, d);
            if (!grid.walkable(next) || seen[index(next)]) continue;
            seen[index(next)] = true;
            parent[index(next)] = static_cast<int>(index(cur));
            via[index(next)] = d;
            if (adjacent(next, target)) {
                std::vector<Direction> path;
                for (Cell c = next; c != from;) {
                    path.push_back(via[index(c)]);
                    int p = parent[index(c)];
                    c = {p % grid.width(), p / grid.width()};
                }
                std::reverse(path.begin(), path.end());
                return path;
            }
            frontier.push_back(next);
        }
    }
    throw Unreachable("no path to cell (" + std::to_string(target.x) + ", " +
                      std::to_string(target.y) + ")");
}

MoveResult move_to(const WorldState& state, std::string_view target) {
    const auto objects = world_objects(*state.grid);
    auto named = std::find_if(objects.begin(), objects.end(),
                              [&](const WorldObject& o) { return o.name == target; });
    if (named == objects.end()) throw UnknownObject(std::string(target));

    // A bare class name means "the nearest one of these".
    std::vector<Cell> candidates{named->cell};
    const bool class_name = std::none_of(target.begin(), target.end(),
                                         [](char c) { return c >= '0' && c <= '9'; });
    if (class_name) candidates = state.grid->cells_of(named->kind);

    std::optional<std::vector<Direction>> best;
    Cell best_cell{};
    for (Cell c : candidates) {
        try {
            auto path = bfs_path(*state.grid, state.agent.pos, c);
            if (!best || path.size() < best->size()) {
                best = std::move(path);
                best_cell = c;
            }
        } catch (const Unreachable&) {
        }
    }
    if (!best) throw Unreachable("cannot reach " + std::string(target));

    MoveResult result{state, *best};
    AgentPose& agent = result.state.agent;
    for (Direction d : *best) {
        agent.pos = step_toward(agent.pos, d);
        agent.facing = d;
    }
    int ticks = static_cast<int>(best->size());
    auto face = direction_between(agent.pos, best_cell);
    if (face && *face != agent.facing) {
        agent.facing = *face;
        ++ticks;
    }
    result.state = advance(result.state, ticks);
    return result;
}

// --- interaction ------------------------------------------------------------

namespace {

void gain(WorldState& s, Milestone m, std::vector<Milestone>& out) {
    if (s.milestones.insert(m).second) out.push_back(m);
}

}  // namespace

PressResult press_space(const WorldState& state) {
    PressResult result{state, {}};
    WorldState& s = result.state;
    const Cell faced = step_toward(s.agent.pos, s.agent.facing);
    if (!s.grid->in_bounds(faced)) return result;

    Item& hand = s.agent.holding;
    bool acted = false;
    std::optional<Cell> started;
    switch (s.grid->at(faced)) {
        case CellKind::OnionDispenser:
            if (hand == Item::None) {
                hand = Item::Onion;
                gain(s, Milestone::PickedUpOnion, result.new_milestones);
                acted = true;
            }
            break;
        case CellKind::TomatoDispenser:
            if (hand == Item::None) {
                hand = Item::Tomato;
                acted = true;
            }
            break;
        case CellKind::PlateDispenser:
            if (hand == Item::None) {
                hand = Item::CleanPlate;
                acted = true;
            }
            break;
        case CellKind::Pot: {
            PotState& pot = s.pots.at(faced);
            const bool ingredient = hand == Item::Onion || hand == Item::Tomato;
            if (ingredient && pot.phase == PotState::Phase::Idle &&
                static_cast<int>(pot.contents.size()) < s.config.pot_capacity) {
                pot.contents.push_back(hand);
                if (hand == Item::Onion) gain(s, Milestone::OnionInPot, result.new_milestones);
                hand = Item::None;
                acted = true;
            } else if (hand == Item::None && pot.phase == PotState::Phase::Idle &&
                       !pot.contents.empty()) {
                started = faced;
                gain(s, Milestone::PotTurnedOn, result.new_milestones);
                acted = true;
            } else if (hand == Item::CleanPlate && pot.phase == PotState::Phase::Ready) {
                hand = Item::SoupPlate;
                pot = PotState{};
                gain(s, Milestone::SoupPlated, result.new_milestones);
                acted = true;
            }
            break;
        }
        case CellKind::DeliveryStation:
            if (hand == Item::SoupPlate) {
                hand = Item::None;
                gain(s, Milestone::SoupDelivered, result.new_milestones);
                acted = true;
            }
            break;
        case CellKind::Floor:
        case CellKind::Counter:
            break;
    }
    if (acted) s = advance(s, 1);
    // The pot just turned on starts its countdown after this tick.
    if (started) {
        PotState& pot = s.pots.at(*started);
        pot.ticks_remaining = std::max(0, s.config.cook_ticks);
        pot.phase = pot.ticks_remaining > 0 ? PotState::Phase::Cooking : PotState::Phase::Ready;
    }
    return result;
}

WorldState advance(const WorldState& state, int ticks) {
    if (ticks <= 0) return state;
    WorldState s = state;
    s.tick += ticks;
    for (auto& [cell, pot] : s.pots) {
        if (pot.phase != PotState::Phase::Cooking) continue;
        pot.ticks_remaining = std::max(0, pot.ticks_remaining - ticks);
        if (pot.ticks_remaining == 0) pot.phase = PotState::Phase::Ready;
    }
    return s;
}

Snapshot snapshot(const WorldState& state) { return Snapshot{state}; }
WorldState restore(const Snapshot& snap) { return snap.state; }

// --- names and rendering ----------------------------------------------------

std::string_view to_string(Milestone m) {
    switch (m) {
        case Milestone::PickedUpOnion: return "PickedUpOnion";
        case Milestone::OnionInPot: return "OnionInPot";
        case Milestone::PotTurnedOn: return "PotTurnedOn";
        case Milestone::SoupPlated: return "SoupPlated";
        case Milestone::SoupDelivered: return "SoupDelivered";
    }
    return "?";
}

std::optional<Milestone> milestone_from_string(std::string_view s) {
    for (Milestone m : kAllMilestones) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::North: return "N";
        case Direction::South: return "S";
        case Direction::East: return "E";
        case Direction::West: return "W";
    }
    return "?";
}

std::string_view to_string(Item i) {
    switch (i) {
        case Item::None: return "none";
        case Item::Onion: return "onion";
        case Item::Tomato: return "tomato";
        case Item::CleanPlate: return "plate";
        case Item::SoupPlate: return "soup";
    }
    return "?";
}

std::string_view to_string(PotState::Phase p) {
    switch (p) {
        case PotState::Phase::Idle: return "idle";
        case PotState::Phase::Cooking: return "cooking";
        case PotState::Phase::Ready: return "ready";
    }
    return "?";
}

std::vector<std::string> render(const WorldState& state) {
    const Grid& g = *state.grid;
    std::vector<std::string> rows;
    for (int y = 0; y < g.height(); ++y) {
        std::string row;
        for (int x = 0; x < g.width(); ++x) {
            Cell c{x, y};
            if (c == state.agent.pos) {
                constexpr char arrows[] = {'^', 'v', '>', '<'};
                row += arrows[static_cast<int>(state.agent.facing)];
                continue;
            }
            switch (g.at(c)) {
                case CellKind::Floor: row += '.'; break;
                case CellKind::Counter: row += 'X'; break;
                case CellKind::OnionDispenser: row += 'O'; break;
                case CellKind::TomatoDispenser: row += 'T'; break;
                case CellKind::PlateDispenser: row += 'D'; break;
                case CellKind::Pot: row += 'P'; break;
                case CellKind::DeliveryStation: row += 'S'; break;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::ordered_json world_to_json(const WorldState& state) {
    nlohmann::ordered_json j;
    j["tick"] = state.tick;
    j["agent"] = {{"x", state.agent.pos.x},
                  {"y", state.agent.pos.y},
                  {"facing", std::string(to_string(state.agent.facing))},
                  {"holding", std::string(to_string(state.agent.holding))}};
    auto pots = nlohmann::ordered_json::array();
    for (const auto& [cell, pot] : state.pots) {
        auto contents = nlohmann::ordered_json::array();
        for (Item i : pot.contents) contents.push_back(std::string(to_string(i)));
        pots.push_back({{"x", cell.x},
                        {"y", cell.y},
                        {"phase", std::string(to_string(pot.phase))},
                        {"ticks_remaining", pot.ticks_remaining},
                        {"contents", std::move(contents)}});
    }
    j["pots"] = std::move(pots);
    auto ms = nlohmann::ordered_json::array();
    for (Milestone m : state.milestones) ms.push_back(std::string(to_string(m)));
    j["milestones"] = std::move(ms);
    j["grid"] = render(state);
    return j;
}

}  // namespace apprentice
