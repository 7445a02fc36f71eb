#include "copt/rooms.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace copt {

namespace {

// Action order also breaks shortest-path ties in hallway policies.
enum NavAction { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
constexpr int kRoomNop = 4;
constexpr int kGetKey = 5;
constexpr int kKeyNop = 6;
constexpr int kPutbackKey = 7;

constexpr int kDirDelta[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};

}  // namespace

RoomsLayout default_rooms_layout() {
    RoomsLayout layout;
    layout.grid = {
        "#############",
        "#S....#.....#",
        "#.....#.....#",
        "#.....1.....#",
        "#.....#.....#",
        "#.....#.....#",
        "###0#####2###",
        "#.....#.....#",
        "#.....#.....#",
        "#.....3.....#",
        "#.....#.....#",
        "#.....#.....#",
        "#############",
    };
    layout.start_row = 1;
    layout.start_col = 1;
    layout.goal_hallway = 3;
    return layout;
}

RoomsLayout parse_layout(const std::string& text, int goal_hallway) {
    RoomsLayout layout;
    layout.goal_hallway = goal_hallway;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) layout.grid.push_back(line);
    }
    for (size_t r = 0; r < layout.grid.size(); ++r) {
        for (size_t c = 0; c < layout.grid[r].size(); ++c) {
            if (layout.grid[r][c] == 'S') {
                layout.start_row = static_cast<int>(r);
                layout.start_col = static_cast<int>(c);
            }
        }
    }
    return layout;
}

RoomsLayout load_layout(const std::string& path, int goal_hallway) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open layout file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_layout(buf.str(), goal_hallway);
}

int RoomsGeometry::hallway_of(int pos) const {
    for (size_t h = 0; h < hallway_pos.size(); ++h)
        if (hallway_pos[h] == pos) return static_cast<int>(h);
    return -1;
}

namespace {

std::shared_ptr<RoomsGeometry> build_geometry(const RoomsLayout& layout) {
    auto geo = std::make_shared<RoomsGeometry>();
    if (layout.grid.empty()) throw std::invalid_argument("rooms layout: empty grid");
    geo->n_rows = static_cast<int>(layout.grid.size());
    geo->n_cols = static_cast<int>(layout.grid[0].size());
    for (const auto& row : layout.grid)
        if (static_cast<int>(row.size()) != geo->n_cols)
            throw std::invalid_argument("rooms layout: ragged grid");

    geo->cell_at.assign(geo->n_rows, std::vector<int>(geo->n_cols, -1));
    std::vector<int> hallway_count(4, 0);
    geo->hallway_pos.assign(4, -1);
    for (int r = 0; r < geo->n_rows; ++r) {
        for (int c = 0; c < geo->n_cols; ++c) {
            const char ch = layout.grid[r][c];
            if (ch == '#') continue;
            const int pos = static_cast<int>(geo->cells.size());
            geo->cell_at[r][c] = pos;
            geo->cells.emplace_back(r, c);
            if (ch >= '0' && ch <= '3') {
                geo->hallway_pos[ch - '0'] = pos;
                ++hallway_count[ch - '0'];
            } else if (ch != '.' && ch != 'S') {
                throw std::invalid_argument(std::string("rooms layout: bad cell '") + ch + "'");
            }
        }
    }
    for (int h = 0; h < 4; ++h)
        if (hallway_count[h] != 1)
            throw std::invalid_argument("rooms layout: hallway " + std::to_string(h) +
                                        " must appear exactly once");
    if (layout.start_row < 0 || geo->cell_at[layout.start_row][layout.start_col] < 0)
        throw std::invalid_argument("rooms layout: missing or invalid start cell");
    geo->start_pos = geo->cell_at[layout.start_row][layout.start_col];
    if (geo->hallway_of(geo->start_pos) >= 0)
        throw std::invalid_argument("rooms layout: start must be a floor cell");

    // Rooms = connected components of floor cells (hallways excluded).
    geo->room_of.assign(geo->cells.size(), -1);
    for (size_t p = 0; p < geo->cells.size(); ++p) {
        if (geo->hallway_of(static_cast<int>(p)) >= 0 || geo->room_of[p] >= 0) continue;
        const int room = geo->num_rooms++;
        std::deque<int> queue{static_cast<int>(p)};
        geo->room_of[p] = room;
        while (!queue.empty()) {
            const int cur = queue.front();
            queue.pop_front();
            const auto [r, c] = geo->cells[cur];
            for (const auto& d : kDirDelta) {
                const int r2 = r + d[0], c2 = c + d[1];
                if (r2 < 0 || r2 >= geo->n_rows || c2 < 0 || c2 >= geo->n_cols) continue;
                const int n = geo->cell_at[r2][c2];
                if (n < 0 || geo->hallway_of(n) >= 0 || geo->room_of[n] >= 0) continue;
                geo->room_of[n] = room;
                queue.push_back(n);
            }
        }
    }
    geo->room_cells.assign(geo->num_rooms, {});
    for (size_t p = 0; p < geo->cells.size(); ++p)
        if (geo->room_of[p] >= 0) geo->room_cells[geo->room_of[p]].push_back(static_cast<int>(p));

    geo->room_hallways.assign(geo->num_rooms, {});
    for (int h = 0; h < 4; ++h) {
        const auto [r, c] = geo->cells[geo->hallway_pos[h]];
        std::vector<int> rooms;
        for (const auto& d : kDirDelta) {
            const int r2 = r + d[0], c2 = c + d[1];
            if (r2 < 0 || r2 >= geo->n_rows || c2 < 0 || c2 >= geo->n_cols) continue;
            const int n = geo->cell_at[r2][c2];
            if (n >= 0 && geo->room_of[n] >= 0) rooms.push_back(geo->room_of[n]);
        }
        std::sort(rooms.begin(), rooms.end());
        rooms.erase(std::unique(rooms.begin(), rooms.end()), rooms.end());
        if (rooms.size() != 2)
            throw std::invalid_argument("rooms layout: hallway " + std::to_string(h) +
                                        " must join exactly two rooms");
        for (int room : rooms) geo->room_hallways[room].push_back(h);
    }
    for (int room = 0; room < geo->num_rooms; ++room)
        if (geo->room_hallways[room].size() != 2)
            throw std::invalid_argument("rooms layout: room " + std::to_string(room) +
                                        " must have exactly two hallways");
    return geo;
}

struct StateCodec {
    int doors_domain;
    int pos(StateId s) const { return s / (doors_domain * kKeyStates); }
    int doors(StateId s) const { return (s / kKeyStates) % doors_domain; }
    int key(StateId s) const { return s % kKeyStates; }
};

// Hallway option data: shortest-path policy toward the target hallway and
// the termination/initiation rules around the gate cell.
struct HallwayOptionDef {
    std::shared_ptr<const RoomsGeometry> geo;
    StateCodec codec;
    int room;
    int target_hallway;
    int gate_pos;                // room cell adjacent to the target hallway
    std::vector<char> in_scope;  // per position
    std::vector<int> policy_action;

    bool initiable(StateId s) const {
        const int p = codec.pos(s);
        if (!in_scope[p] || p == geo->hallway_pos[target_hallway]) return false;
        if (p == gate_pos) {
            const bool door_open = (codec.doors(s) >> target_hallway) & 1;
            return door_open || codec.key(s) == kKeyHolding;
        }
        return true;
    }

    double beta(StateId s) const {
        const int p = codec.pos(s);
        if (p == geo->hallway_pos[target_hallway]) return 1.0;
        if (!in_scope[p]) return 1.0;
        if (p == gate_pos) {
            const bool door_open = (codec.doors(s) >> target_hallway) & 1;
            return (door_open || codec.key(s) == kKeyHolding) ? 0.0 : 1.0;
        }
        return 0.0;
    }

    ActionDist policy(StateId s) const {
        const int p = codec.pos(s);
        const int a = (in_scope[p] && policy_action[p] >= 0) ? policy_action[p] : kRoomNop;
        return {{a, 1.0}};
    }
};

HallwayOptionDef make_hallway_def(std::shared_ptr<const RoomsGeometry> geo, StateCodec codec,
                                  int room, int target) {
    HallwayOptionDef def;
    def.geo = geo;
    def.codec = codec;
    def.room = room;
    def.target_hallway = target;
    def.in_scope.assign(geo->cells.size(), 0);
    def.policy_action.assign(geo->cells.size(), -1);
    for (int p : geo->room_cells[room]) def.in_scope[p] = 1;
    for (int h : geo->room_hallways[room]) def.in_scope[geo->hallway_pos[h]] = 1;

    // Breadth-first distances to the target hallway within the option scope.
    const int target_pos = geo->hallway_pos[target];
    std::vector<int> dist(geo->cells.size(), -1);
    std::deque<int> queue{target_pos};
    dist[target_pos] = 0;
    while (!queue.empty()) {
        const int cur = queue.front();
        queue.pop_front();
        const auto [r, c] = geo->cells[cur];
        for (const auto& d : kDirDelta) {
            const int r2 = r + d[0], c2 = c + d[1];
            if (r2 < 0 || r2 >= geo->n_rows || c2 < 0 || c2 >= geo->n_cols) continue;
            const int n = geo->cell_at[r2][c2];
            if (n < 0 || !def.in_scope[n] || dist[n] >= 0) continue;
            dist[n] = dist[cur] + 1;
            queue.push_back(n);
        }
    }
    def.gate_pos = -1;
    for (size_t p = 0; p < geo->cells.size(); ++p) {
        if (!def.in_scope[p] || static_cast<int>(p) == target_pos) continue;
        if (dist[p] < 0)
            throw std::invalid_argument("rooms layout: target hallway unreachable within room");
        if (dist[p] == 1 && geo->room_of[p] == room) def.gate_pos = static_cast<int>(p);
        const auto [r, c] = geo->cells[p];
        for (int a = 0; a < 4; ++a) {
            const int r2 = r + kDirDelta[a][0], c2 = c + kDirDelta[a][1];
            if (r2 < 0 || r2 >= geo->n_rows || c2 < 0 || c2 >= geo->n_cols) continue;
            const int n = geo->cell_at[r2][c2];
            if (n >= 0 && def.in_scope[n] && dist[n] == dist[p] - 1) {
                def.policy_action[p] = a;
                break;
            }
        }
    }
    if (def.gate_pos < 0)
        throw std::invalid_argument("rooms layout: no gate cell next to target hallway");
    return def;
}

}  // namespace

bool RoomsDomain::is_goal(StateId s) const {
    const StateCodec codec{1 << 4};
    return codec.pos(s) == geometry->hallway_pos[goal_hallway];
}

StateId RoomsDomain::make_state(int row, int col, int doors_mask, int key) const {
    const int pos = geometry->cell_at.at(row).at(col);
    if (pos < 0) throw std::invalid_argument("make_state: not a traversable cell");
    FactoredState s;
    s.values = {pos, doors_mask, key};
    return mdp.ordinal(s);
}

const MarkovOption& RoomsDomain::option_by_name(const std::string& name) const {
    for (const auto& o : options)
        if (o.name == name) return o;
    throw std::invalid_argument("unknown option: " + name);
}

RoomsDomain build_rooms_domain(const RoomsLayout& layout, double gamma) {
    auto geo = build_geometry(layout);
    const int doors_domain = 1 << 4;
    const StateCodec codec{doors_domain};

    FlatMdp mdp(
        {{"position", static_cast<int>(geo->cells.size())},
         {"doors_state", doors_domain},
         {"key_state", kKeyStates}},
        {"up", "down", "left", "right", "room_nop", "get_key", "key_nop", "putback_key"}, gamma);
    for (int a = 0; a < 5; ++a) mdp.set_action_scope(a, {RoomsDomain::kPosVar, RoomsDomain::kDoorsVar});
    for (int a = 5; a < 8; ++a) mdp.set_action_scope(a, {RoomsDomain::kKeyVar});
    mdp.set_reward([](StateId, int, StateId) { return -1.0; });

    const int num_pos = static_cast<int>(geo->cells.size());
    for (int pos = 0; pos < num_pos; ++pos) {
        const auto [r, c] = geo->cells[pos];
        const int from_hallway = geo->hallway_of(pos);
        for (int doors = 0; doors < doors_domain; ++doors) {
            for (int key = 0; key < kKeyStates; ++key) {
                FactoredState fs{{pos, doors, key}};
                const StateId s = mdp.ordinal(fs);

                // Navigation actions: slip 9/10 intended, 1/30 each other
                // direction; blocked moves (walls, locked doors without the
                // key) stay put; doors open on keyed entry and relock on exit.
                for (int intended = 0; intended < 4; ++intended) {
                    std::map<StateId, double> acc;
                    for (int realized = 0; realized < 4; ++realized) {
                        const double p = realized == intended ? 0.9 : 1.0 / 30.0;
                        const int r2 = r + kDirDelta[realized][0];
                        const int c2 = c + kDirDelta[realized][1];
                        int new_pos = pos;
                        if (r2 >= 0 && r2 < geo->n_rows && c2 >= 0 && c2 < geo->n_cols) {
                            const int target = geo->cell_at[r2][c2];
                            if (target >= 0) {
                                const int h = geo->hallway_of(target);
                                if (h < 0 || ((doors >> h) & 1) || key == kKeyHolding)
                                    new_pos = target;
                            }
                        }
                        int new_doors = doors;
                        const int to_hallway = geo->hallway_of(new_pos);
                        if (to_hallway >= 0 && new_pos != pos) new_doors |= 1 << to_hallway;
                        if (from_hallway >= 0 && new_pos != pos)
                            new_doors &= ~(1 << from_hallway);
                        acc[mdp.ordinal(FactoredState{{new_pos, new_doors, key}})] += p;
                    }
                    mdp.set_transition(s, intended, SparseRow(acc.begin(), acc.end()));
                }
                mdp.set_transition(s, kRoomNop, {{s, 1.0}});

                // Key process actions.
                int got = key;
                if (key < kKeyHolding)
                    got = key + 1;
                else if (key > kKeyHolding)
                    got = (key + 1) % kKeyStates;
                mdp.set_transition(s, kGetKey,
                                   {{mdp.ordinal(FactoredState{{pos, doors, got}}), 1.0}});

                if (key == kKeyHolding) {
                    const StateId hold = s;
                    const StateId dropped =
                        mdp.ordinal(FactoredState{{pos, doors, kKeyDropped}});
                    mdp.set_transition(s, kKeyNop,
                                       {{hold, 1.0 - kKeyDropProb}, {dropped, kKeyDropProb}});
                    mdp.set_transition(s, kPutbackKey,
                                       {{mdp.ordinal(FactoredState{{pos, doors, 0}}), 1.0}});
                } else {
                    mdp.set_transition(s, kKeyNop, {{s, 1.0}});
                    mdp.set_transition(s, kPutbackKey, {{s, 1.0}});
                }
            }
        }
    }

    RoomsDomain domain{layout, geo, std::move(mdp), {}, {}, 0, layout.goal_hallway};
    domain.start_state = domain.make_state(layout.start_row, layout.start_col, 0, 0);

    const std::vector<int> nav_vars{RoomsDomain::kPosVar, RoomsDomain::kDoorsVar};
    const std::vector<int> key_vars{RoomsDomain::kKeyVar};

    domain.options.reserve(12);
    for (int room = 0; room < geo->num_rooms; ++room) {
        for (int target : geo->room_hallways[room]) {
            auto def = std::make_shared<HallwayOptionDef>(
                make_hallway_def(geo, codec, room, target));
            MarkovOption o;
            o.name = "hallway_r" + std::to_string(room) + "_h" + std::to_string(target);
            o.initiation = [def](StateId s) { return def->initiable(s); };
            o.policy = [def](StateId s) { return def->policy(s); };
            o.termination = [def](StateId s) { return def->beta(s); };
            o.controlled_vars = nav_vars;
            o.observed_vars = key_vars;
            domain.options.push_back(std::move(o));
        }
    }
    {
        MarkovOption o;
        o.name = "room_nop";
        o.initiation = [](StateId) { return true; };
        o.policy = [](StateId) { return ActionDist{{kRoomNop, 1.0}}; };
        o.termination = [](StateId) { return 1.0; };
        o.controlled_vars = nav_vars;
        domain.options.push_back(std::move(o));
    }
    {
        MarkovOption o;
        o.name = "pickup_key";
        o.initiation = [codec](StateId s) { return codec.key(s) != kKeyHolding; };
        o.policy = [](StateId) { return ActionDist{{kGetKey, 1.0}}; };
        o.termination = [codec](StateId s) { return codec.key(s) == kKeyHolding ? 1.0 : 0.0; };
        o.controlled_vars = key_vars;
        domain.options.push_back(std::move(o));
    }
    {
        MarkovOption o;
        o.name = "key_nop";
        o.initiation = [](StateId) { return true; };
        o.policy = [](StateId) { return ActionDist{{kKeyNop, 1.0}}; };
        o.termination = [](StateId) { return 1.0; };
        o.controlled_vars = key_vars;
        domain.options.push_back(std::move(o));
    }
    {
        MarkovOption o;
        o.name = "putback_key";
        o.initiation = [codec](StateId s) { return codec.key(s) == kKeyHolding; };
        o.policy = [](StateId) { return ActionDist{{kPutbackKey, 1.0}}; };
        o.termination = [](StateId) { return 1.0; };
        o.controlled_vars = key_vars;
        domain.options.push_back(std::move(o));
    }

    std::vector<const MarkovOption*> option_ptrs;
    for (const auto& o : domain.options) option_ptrs.push_back(&o);
    std::vector<std::vector<int>> declared(2);
    for (int i = 0; i < 9; ++i) declared[0].push_back(i);   // hallways + room_nop
    for (int i = 9; i < 12; ++i) declared[1].push_back(i);  // key options
    domain.partition = build_partition(option_ptrs, declared);
    return domain;
}

std::vector<MultiOption> all_multi_options(const CoherencePartition& partition,
                                           TerminationRule rule) {
    std::vector<MultiOption> out;
    std::vector<size_t> idx(partition.classes.size(), 0);
    if (partition.classes.empty()) return out;
    while (true) {
        MultiOption mo;
        mo.rule = rule;
        std::string name;
        for (size_t c = 0; c < partition.classes.size(); ++c) {
            const MarkovOption* m = partition.classes[c][idx[c]];
            mo.members.push_back(m);
            if (!name.empty()) name += "+";
            name += m->name;
        }
        mo.name = std::move(name);
        out.push_back(std::move(mo));
        size_t c = partition.classes.size();
        bool done = true;
        while (c > 0) {
            --c;
            if (++idx[c] < partition.classes[c].size()) {
                done = false;
                break;
            }
            idx[c] = 0;
        }
        if (done) break;
    }
    return out;
}

}  // namespace copt
