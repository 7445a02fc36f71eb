#pragma once

#include <memory>
#include <string>
#include <vector>

#include "copt/concurrent.hpp"
#include "copt/environment.hpp"
#include "copt/fmdp.hpp"
#include "copt/option.hpp"
#include "copt/planning.hpp"

namespace copt {

// Four-rooms grid with locked hallway doors. ASCII cells: '#' wall,
// '.' floor, '0'-'3' hallway, 'S' start (a floor cell).
struct RoomsLayout {
    std::vector<std::string> grid;
    int start_row = -1;
    int start_col = -1;
    int goal_hallway = 3;
};

RoomsLayout default_rooms_layout();
RoomsLayout parse_layout(const std::string& text, int goal_hallway = 3);
RoomsLayout load_layout(const std::string& path, int goal_hallway = 3);

// Key process constants: eleven states, S6 = holding the key.
inline constexpr int kKeyStates = 11;
inline constexpr int kKeyHolding = 6;
inline constexpr int kKeyDropped = 7;
inline constexpr double kKeyDropProb = 0.3;

// Geometry shared by the MDP builder and the option definitions.
struct RoomsGeometry {
    int n_rows = 0, n_cols = 0;
    std::vector<std::pair<int, int>> cells;  // position index -> (row, col)
    std::vector<std::vector<int>> cell_at;   // [row][col] -> position index or -1
    std::vector<int> hallway_pos;            // hallway id -> position index
    std::vector<int> room_of;                // position index -> room id, -1 for hallways
    int num_rooms = 0;
    std::vector<std::vector<int>> room_cells;     // per room
    std::vector<std::vector<int>> room_hallways;  // per room: adjacent hallway ids
    int start_pos = -1;

    int hallway_of(int pos) const;  // hallway id or -1
};

// The assembled benchmark: flat MDP (variables position, doors_state,
// key_state), twelve options, and the two-class coherence partition
// C1 = {8 hallway options, room_nop}, C2 = {pickup_key, key_nop, putback_key}.
struct RoomsDomain {
    RoomsLayout layout;
    std::shared_ptr<const RoomsGeometry> geometry;
    FlatMdp mdp;
    std::vector<MarkovOption> options;
    CoherencePartition partition;
    StateId start_state = 0;
    int goal_hallway = 3;

    static constexpr int kPosVar = 0;
    static constexpr int kDoorsVar = 1;
    static constexpr int kKeyVar = 2;

    bool is_goal(StateId s) const;
    StateId make_state(int row, int col, int doors_mask, int key) const;
    const MarkovOption& option_by_name(const std::string& name) const;

    // Navigation class followed by key class, in declared option order.
    const std::vector<const MarkovOption*>& navigation_class() const {
        return partition.classes[0];
    }
    const std::vector<const MarkovOption*>& key_class() const { return partition.classes[1]; }
};

RoomsDomain build_rooms_domain(const RoomsLayout& layout, double gamma);

// Full product C1 x C2 of the partition, in class-major order; tuple ids are
// positions in the returned vector and are stable across runs.
std::vector<MultiOption> all_multi_options(const CoherencePartition& partition,
                                           TerminationRule rule);

// Decision-epoch environment over multi-options (one member per class),
// executed under the given termination rule. Goal states are terminal.
class RoomsConcurrentEnv : public SmdpEnvironment {
public:
    RoomsConcurrentEnv(const RoomsDomain& domain, TerminationRule rule);

    int64_t num_states() const override { return domain_.mdp.num_states(); }
    int num_actions() const override { return static_cast<int>(tuples_.size()); }
    StateId initial_state() const override { return domain_.start_state; }
    bool is_terminal(StateId s) const override { return domain_.is_goal(s); }
    const std::vector<int>& available(StateId s) const override { return available_[s]; }
    DecisionOutcome execute(StateId s, int action_id, RngStream& rng) const override;

    const std::vector<MultiOption>& tuples() const { return tuples_; }

private:
    const RoomsDomain& domain_;
    std::vector<MultiOption> tuples_;
    std::vector<std::vector<int>> available_;
};

// Analytic planning problem over the rooms domain. Owns the per-action
// models; `problem` points into them, so keep the struct alive while
// planning. Goal states are terminal (value 0, no actions).
struct RoomsPlanning {
    std::vector<MultiOption> tuples;          // empty in sequential mode
    std::vector<MultiOptionModel> models;     // concurrent mode
    std::vector<OptionModel> option_models;   // sequential mode
    SmdpProblem problem;
};

RoomsPlanning build_concurrent_planning(const RoomsDomain& domain, TerminationRule rule,
                                        int k_max, double tol,
                                        ExecMode mode = ExecMode::Serial);
RoomsPlanning build_sequential_planning(const RoomsDomain& domain, int k_max, double tol,
                                        ExecMode mode = ExecMode::Serial);

// Standard options baseline: one option (C1 union C2) at a time; variables
// outside the running option's controlled set stay frozen.
class RoomsSequentialEnv : public SmdpEnvironment {
public:
    explicit RoomsSequentialEnv(const RoomsDomain& domain);

    int64_t num_states() const override { return domain_.mdp.num_states(); }
    int num_actions() const override { return static_cast<int>(domain_.options.size()); }
    StateId initial_state() const override { return domain_.start_state; }
    bool is_terminal(StateId s) const override { return domain_.is_goal(s); }
    const std::vector<int>& available(StateId s) const override { return available_[s]; }
    DecisionOutcome execute(StateId s, int action_id, RngStream& rng) const override;

private:
    const RoomsDomain& domain_;
    std::vector<std::vector<int>> available_;
};

}  // namespace copt
