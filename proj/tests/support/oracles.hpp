#pragma once

// Independent reference implementations the engine is checked against, plus
// random generators for property tests. Nothing here calls into the code
// under test except for data types.

#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "apprentice/environment.hpp"
#include "apprentice/htn.hpp"

namespace oracle {

using namespace apprentice;

// Expands by rewriting: keep a flat list of ground calls and repeatedly
// replace the leftmost non-primitive with its substituted body.
inline std::vector<PrimitiveCall> rewrite_expand(const KnowledgeBase& kb, const std::string& action,
                                                 const std::vector<ObjectRef>& args) {
    std::vector<PrimitiveCall> list{{action, args}};
    for (;;) {
        std::size_t i = 0;
        while (i < list.size() && kb.find(list[i].action)->kind == SchemaKind::Primitive) ++i;
        if (i == list.size()) return list;
        const ActionSchema& s = *kb.find(list[i].action);
        std::vector<PrimitiveCall> body;
        for (const Step& st : s.body) {
            PrimitiveCall c{st.action, {}};
            for (const Term& t : st.args) {
                if (const auto* v = std::get_if<Var>(&t)) {
                    std::size_t p = 0;
                    while (s.params[p] != v->name) ++p;
                    c.args.push_back(list[i].args[p]);
                } else {
                    c.args.push_back(std::get<Const>(t).object);
                }
            }
            body.push_back(c);
        }
        list.erase(list.begin() + static_cast<long>(i));
        list.insert(list.begin() + static_cast<long>(i), body.begin(), body.end());
    }
}

// Unit-weight Dijkstra from `from` to any floor cell next to `target`.
inline std::optional<int> shortest_to_adjacent(const Grid& grid, Cell from, Cell target) {
    const int w = grid.width();
    const int h = grid.height();
    const int inf = std::numeric_limits<int>::max();
    std::vector<int> dist(static_cast<std::size_t>(w * h), inf);
    using Item = std::pair<int, int>;  // distance, index
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    auto index = [w](Cell c) { return c.y * w + c.x; };
    auto adjacent = [&](Cell c) { return std::abs(c.x - target.x) + std::abs(c.y - target.y) == 1; };
    dist[static_cast<std::size_t>(index(from))] = 0;
    pq.push({0, index(from)});
    while (!pq.empty()) {
        auto [d, i] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(i)]) continue;
        const Cell c{i % w, i / w};
        if (adjacent(c)) return d;
        const Cell nbrs[] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
        for (Cell n : nbrs) {
            if (!grid.walkable(n)) continue;
            const auto ni = static_cast<std::size_t>(index(n));
            if (d + 1 < dist[ni]) {
                dist[ni] = d + 1;
                pq.push({d + 1, static_cast<int>(ni)});
            }
        }
    }
    return std::nullopt;
}

// Random w x h grid: counter border, interior floor with obstacles, and a
// few station cells. Returns the grid and a floor start cell.
struct RandomGrid {
    std::shared_ptr<const Grid> grid;
    Cell start;
    Cell target;
};

inline RandomGrid random_grid(std::mt19937& rng, int w = 12, int h = 8, double wall_rate = 0.3) {
    std::vector<CellKind> cells(static_cast<std::size_t>(w * h), CellKind::Floor);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Cell> floors;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const bool border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
            auto& k = cells[static_cast<std::size_t>(y * w + x)];
            if (border || u(rng) < wall_rate) k = CellKind::Counter;
        }
    }
    // A pot somewhere (border or interior), never on the start.
    std::uniform_int_distribution<int> xs(0, w - 1), ys(0, h - 1);
    Cell target{xs(rng), ys(rng)};
    cells[static_cast<std::size_t>(target.y * w + target.x)] = CellKind::Pot;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            if (cells[static_cast<std::size_t>(y * w + x)] == CellKind::Floor) floors.push_back({x, y});
        }
    }
    if (floors.empty()) {
        cells[static_cast<std::size_t>(1 * w + 1)] = CellKind::Floor;
        if (target == Cell{1, 1}) {
            target = {0, 0};
            cells[0] = CellKind::Pot;
        }
        floors.push_back({1, 1});
    }
    std::uniform_int_distribution<std::size_t> pick(0, floors.size() - 1);
    const Cell start = floors[pick(rng)];
    return {std::make_shared<const Grid>(w, h, cells), start, target};
}

// Random DAG-shaped knowledge base over the two primitives. Each new schema
// calls only earlier ones; arguments mix parameters and constants.
inline KnowledgeBase random_kb(std::mt19937& rng, int learned_count) {
    static const std::vector<std::string> objects = {"onion", "tomato", "plate", "pot", "delivery"};
    KnowledgeBase kb = primitive_kb();
    std::uniform_int_distribution<int> arity_d(0, 3);
    std::uniform_int_distribution<int> len_d(1, 4);
    std::uniform_int_distribution<std::size_t> obj_d(0, objects.size() - 1);
    for (int n = 0; n < learned_count; ++n) {
        ActionSchema s;
        s.name = "task" + std::to_string(n);
        s.kind = SchemaKind::Learned;
        s.source_text = "do task number " + std::to_string(n);
        const int arity = arity_d(rng);
        for (int p = 0; p < arity; ++p) s.params.push_back("p" + std::to_string(p));
        const auto names = kb.names();
        std::uniform_int_distribution<std::size_t> callee_d(0, names.size() - 1);
        const int len = len_d(rng);
        for (int k = 0; k < len; ++k) {
            const ActionSchema& callee = *kb.find(names[callee_d(rng)]);
            Step st{callee.name, {}};
            for (std::size_t a = 0; a < callee.arity(); ++a) {
                if (arity > 0 && rng() % 2 == 0) {
                    st.args.push_back(Var{s.params[rng() % static_cast<unsigned>(arity)]});
                } else {
                    st.args.push_back(Const{objects[obj_d(rng)]});
                }
            }
            s.body.push_back(st);
        }
        kb = add_schema(kb, s);
    }
    return kb;
}

}  // namespace oracle
