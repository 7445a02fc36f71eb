#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "copt/executor.hpp"
#include "copt/rooms.hpp"
#include "doctest.h"

using namespace copt;

namespace {

const RoomsDomain& domain() {
    static const RoomsDomain d = build_rooms_domain(default_rooms_layout(), 0.9);
    return d;
}

int pos_of(StateId s) { return domain().mdp.state(s).values[RoomsDomain::kPosVar]; }
int doors_of(StateId s) { return domain().mdp.state(s).values[RoomsDomain::kDoorsVar]; }
int key_of(StateId s) { return domain().mdp.state(s).values[RoomsDomain::kKeyVar]; }

}  // namespace

TEST_CASE("default layout yields the expected state space") {
    const auto& d = domain();
    CHECK(d.geometry->cells.size() == 104);
    CHECK(d.mdp.num_states() == 104 * 16 * 11);
    CHECK(d.mdp.num_states() == 18304);
    CHECK(d.geometry->num_rooms == 4);
    CHECK(d.start_state == d.make_state(1, 1, 0, 0));
    CHECK(doors_of(d.start_state) == 0);
    CHECK(key_of(d.start_state) == 0);
}

TEST_CASE("transition table is well formed") {
    const auto& d = domain();
    CHECK(d.mdp.validate().ok());
    CHECK(d.mdp.validate_scopes().ok());
}

TEST_CASE("twelve options in two declared coherence classes") {
    const auto& d = domain();
    REQUIRE(d.options.size() == 12);
    const std::vector<std::string> expected = {
        "hallway_r0_h0", "hallway_r0_h1", "hallway_r1_h1", "hallway_r1_h2",
        "hallway_r2_h0", "hallway_r2_h3", "hallway_r3_h2", "hallway_r3_h3",
        "room_nop",      "pickup_key",   "key_nop",       "putback_key"};
    for (size_t i = 0; i < expected.size(); ++i) CHECK(d.options[i].name == expected[i]);
    CHECK(d.navigation_class().size() == 9);
    CHECK(d.key_class().size() == 3);
    CHECK_THROWS_AS(d.option_by_name("missing"), std::invalid_argument);
}

TEST_CASE("full multi-option product and per-state availability bounds") {
    const auto& d = domain();
    const auto tuples = all_multi_options(d.partition, TerminationRule::T2);
    REQUIRE(tuples.size() == 27);
    // Tuple ids are navigation-major: id = nav * 3 + key.
    CHECK(tuples[0].name == "hallway_r0_h0+pickup_key");
    CHECK(tuples[1].name == "hallway_r0_h0+key_nop");
    CHECK(tuples[2].name == "hallway_r0_h0+putback_key");
    CHECK(tuples[26].name == "room_nop+putback_key");

    // Mid-room cell, no key: 3 navigation x {pickup, key_nop}.
    const StateId mid = d.make_state(2, 2, 0, 0);
    CHECK(enumerate_multi_options(d.partition, mid, TerminationRule::T1).size() == 6);
    // Holding the key swaps pickup for putback, so the count stays at 6; the
    // defined product of 9 is never reached at any single state.
    const StateId with_key = d.make_state(2, 2, 0, kKeyHolding);
    CHECK(enumerate_multi_options(d.partition, with_key, TerminationRule::T1).size() == 6);

    for (StateId s = 0; s < d.mdp.num_states(); s += 97) {
        const auto at_s = enumerate_multi_options(d.partition, s, TerminationRule::T2);
        CHECK(at_s.size() <= 9);
    }
}

TEST_CASE("navigation rows slip and never touch the key variable") {
    const auto& d = domain();
    for (StateId s : {d.start_state, d.make_state(8, 2, 5, 3), d.make_state(3, 5, 0, 6)}) {
        for (int a = 0; a < 5; ++a) {
            double total = 0.0;
            for (const auto& [next, p] : d.mdp.transition(s, a)) {
                total += p;
                CHECK(key_of(next) == key_of(s));
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
        for (int a = 5; a < 8; ++a) {
            for (const auto& [next, p] : d.mdp.transition(s, a)) {
                CHECK(pos_of(next) == pos_of(s));
                CHECK(doors_of(next) == doors_of(s));
            }
        }
    }
    // Open-floor move: 9/10 intended, 1/30 each other direction.
    const StateId open = d.make_state(3, 3, 0, 0);
    const auto& row = d.mdp.transition(open, 3);  // right
    for (const auto& [next, p] : row) {
        if (pos_of(next) == d.geometry->cell_at[3][4])
            CHECK(p == doctest::Approx(0.9));
        else
            CHECK(p == doctest::Approx(1.0 / 30.0));
    }
}

TEST_CASE("locked hallways block entry unless the key is held") {
    const auto& d = domain();
    const int h0 = d.geometry->hallway_pos[0];
    // Gate cell of room 0 toward hallway 0 sits at (5, 3).
    const StateId gate_locked = d.make_state(5, 3, 0, 0);
    for (const auto& [next, p] : d.mdp.transition(gate_locked, 1))  // down
        CHECK(pos_of(next) != h0);

    const StateId gate_keyed = d.make_state(5, 3, 0, kKeyHolding);
    double into = 0.0;
    for (const auto& [next, p] : d.mdp.transition(gate_keyed, 1)) {
        if (pos_of(next) == h0) {
            into += p;
            // Entering opens the door behind the agent.
            CHECK((doors_of(next) >> 0 & 1) == 1);
        }
    }
    CHECK(into == doctest::Approx(0.9));

    // An open door admits entry without the key and closes again on exit.
    const StateId gate_open = d.make_state(5, 3, 1, 0);
    into = 0.0;
    for (const auto& [next, p] : d.mdp.transition(gate_open, 1))
        if (pos_of(next) == h0) into += p;
    CHECK(into == doctest::Approx(0.9));

    const StateId in_hall = d.make_state(6, 3, 1, 0);
    for (const auto& [next, p] : d.mdp.transition(in_hall, 0))  // up, leaving
        if (pos_of(next) != pos_of(in_hall)) CHECK((doors_of(next) >> 0 & 1) == 0);
}

TEST_CASE("door invariant holds along random trajectories") {
    const auto& d = domain();
    RngStream rng(31, 0);
    StateId s = d.make_state(5, 3, 0, kKeyHolding);
    for (int step = 0; step < 4000; ++step) {
        const int a = static_cast<int>(rng.uniform() * 8);
        s = rng.sample_row(d.mdp.transition(s, std::min(a, 7)));
        const int h = d.geometry->hallway_of(pos_of(s));
        // Standing in a hallway implies its door is open.
        if (h >= 0) CHECK((doors_of(s) >> h & 1) == 1);
    }
}

TEST_CASE("key process timing: pickup, drop and putback") {
    const auto& d = domain();
    const auto& pickup = d.option_by_name("pickup_key");
    const auto& nop = d.option_by_name("key_nop");
    const auto& putback = d.option_by_name("putback_key");

    // From S0 the key is secured in exactly six steps.
    const StateId fresh = d.make_state(2, 2, 0, 0);
    auto model = option_step_distribution(d.mdp, pickup, 20, {fresh});
    REQUIRE(model.starts.at(fresh).steps.size() == 1);
    CHECK(model.starts.at(fresh).steps[0].k == 6);
    CHECK(key_of(model.starts.at(fresh).steps[0].next) == kKeyHolding);

    // From the dropped state the automaton wraps: ten steps back to S6.
    const StateId dropped = d.make_state(2, 2, 0, kKeyDropped);
    model = option_step_distribution(d.mdp, pickup, 20, {dropped});
    REQUIRE(model.starts.at(dropped).steps.size() == 1);
    CHECK(model.starts.at(dropped).steps[0].k == 10);

    // key_nop while holding drops with probability 3/10 in one step.
    const StateId holding = d.make_state(2, 2, 0, kKeyHolding);
    model = option_step_distribution(d.mdp, nop, 5, {holding});
    const auto& steps = model.starts.at(holding).steps;
    REQUIRE(steps.size() == 2);
    for (const auto& e : steps) {
        CHECK(e.k == 1);
        if (key_of(e.next) == kKeyDropped)
            CHECK(e.p == doctest::Approx(kKeyDropProb));
        else
            CHECK(e.p == doctest::Approx(1.0 - kKeyDropProb));
    }

    // putback returns the key to S0 in one step.
    model = option_step_distribution(d.mdp, putback, 5, {holding});
    REQUIRE(model.starts.at(holding).steps.size() == 1);
    CHECK(model.starts.at(holding).steps[0].k == 1);
    CHECK(key_of(model.starts.at(holding).steps[0].next) == 0);
    CHECK_FALSE(putback.initiation(fresh));
}

TEST_CASE("room_nop idles for one step") {
    const auto& d = domain();
    const auto& nop = d.option_by_name("room_nop");
    const StateId s = d.make_state(4, 4, 2, 5);
    const auto model = option_discounted_model(d.mdp, nop, 5, 1e-12, {s}, true);
    REQUIRE(model.starts.at(s).steps.size() == 1);
    CHECK(model.starts.at(s).steps[0].k == 1);
    CHECK(model.starts.at(s).steps[0].next == s);
    CHECK(model.starts.at(s).reward == doctest::Approx(-1.0));
}

TEST_CASE("gate rules of the hallway options") {
    const auto& d = domain();
    const auto& to_h0 = d.option_by_name("hallway_r0_h0");
    const StateId gate_locked = d.make_state(5, 3, 0, 0);
    const StateId gate_keyed = d.make_state(5, 3, 0, kKeyHolding);
    const StateId gate_open = d.make_state(5, 3, 1, 0);
    const StateId at_target = d.make_state(6, 3, 1, 0);
    const StateId mid_room = d.make_state(2, 2, 0, 0);
    const StateId other_room = d.make_state(8, 8, 0, 0);

    CHECK_FALSE(to_h0.initiation(gate_locked));
    CHECK(to_h0.initiation(gate_keyed));
    CHECK(to_h0.initiation(gate_open));
    CHECK_FALSE(to_h0.initiation(at_target));
    CHECK(to_h0.initiation(mid_room));
    CHECK_FALSE(to_h0.initiation(other_room));

    CHECK(to_h0.termination(gate_locked) == 1.0);
    CHECK(to_h0.termination(gate_keyed) == 0.0);
    CHECK(to_h0.termination(gate_open) == 0.0);
    CHECK(to_h0.termination(at_target) == 1.0);
    CHECK(to_h0.termination(mid_room) == 0.0);
    CHECK(to_h0.termination(other_room) == 1.0);

    // The policy walks the shortest in-room path toward the target.
    const auto dist_move = to_h0.policy(mid_room);
    REQUIRE(dist_move.size() == 1);
    CHECK(dist_move[0].second == 1.0);
}

TEST_CASE("goal detection and terminal handling in the environments") {
    const auto& d = domain();
    const StateId goal = d.make_state(9, 6, 8, 0);
    CHECK(d.is_goal(goal));
    CHECK_FALSE(d.is_goal(d.start_state));

    const RoomsConcurrentEnv env(d, TerminationRule::T2);
    CHECK(env.num_actions() == 27);
    CHECK(env.initial_state() == d.start_state);
    CHECK(env.is_terminal(goal));
    CHECK(env.available(goal).empty());
    CHECK(env.available(d.start_state).size() == 6);

    const RoomsSequentialEnv seq(d);
    CHECK(seq.num_actions() == 12);
    CHECK(seq.available(goal).empty());
    // Sequential start: 2 hallway options, room_nop, pickup_key, key_nop.
    CHECK(seq.available(d.start_state).size() == 5);
}

TEST_CASE("goal is reachable from the start under primitive dynamics") {
    const auto& d = domain();
    std::set<StateId> seen{d.start_state};
    std::deque<StateId> queue{d.start_state};
    bool found = false;
    while (!queue.empty() && !found) {
        const StateId s = queue.front();
        queue.pop_front();
        for (int a = 0; a < d.mdp.num_actions() && !found; ++a) {
            for (const auto& [next, p] : d.mdp.transition(s, a)) {
                if (p == 0.0 || seen.count(next)) continue;
                seen.insert(next);
                if (d.is_goal(next)) {
                    found = true;
                    break;
                }
                queue.push_back(next);
            }
        }
    }
    CHECK(found);
}

TEST_CASE("concurrent execution crosses a locked door when pickup overlaps") {
    const auto& d = domain();
    MultiOption mo{"hallway_r0_h0+pickup_key",
                   {&d.option_by_name("hallway_r0_h0"), &d.option_by_name("pickup_key")},
                   TerminationRule::T2};
    REQUIRE(is_available(mo, d.start_state));
    int reached = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        RngStream rng(77, static_cast<uint64_t>(i));
        const auto out = run_multi_option(d.mdp, mo, d.start_state, rng);
        if (pos_of(out.end_state) == d.geometry->hallway_pos[0]) {
            ++reached;
            CHECK(key_of(out.end_state) == kKeyHolding);
            CHECK(out.duration >= 7);
        }
    }
    // The pickup finishes around the time the gate is reached, so most runs
    // pass straight through the locked door.
    CHECK(reached > n / 2);
}

TEST_CASE("make_state rejects walls") {
    CHECK_THROWS_AS(domain().make_state(0, 0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(domain().make_state(6, 1, 0, 0), std::invalid_argument);
}

TEST_CASE("layouts parse from text and reject malformed grids") {
    const std::string text =
        "#######\n"
        "#S..#.#\n"
        "#...1.#\n"
        "###0###\n"
        "#..#..#\n"
        "#..3..#\n"
        "##2####\n"
        "#######\n";
    const auto layout = parse_layout(text);
    CHECK(layout.start_row == 1);
    CHECK(layout.start_col == 1);
    // Structural validation happens when the domain is assembled.
    CHECK_THROWS_AS(build_rooms_domain(parse_layout("###\n#S\n###\n"), 0.9),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_rooms_domain(parse_layout("#####\n#S.1#\n#####\n"), 0.9),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_layout("/nonexistent/layout.txt"), std::runtime_error);
}
