#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "copt/option.hpp"
#include "doctest.h"

using namespace copt;

namespace {

// Corridor 0-1-2: "right" advances with probability 0.9, stays with 0.1.
FlatMdp make_corridor() {
    FlatMdp mdp({{"pos", 3}}, {"right"}, 0.9);
    mdp.set_action_scope(0, {0});
    mdp.set_transition(0, 0, {{0, 0.1}, {1, 0.9}});
    mdp.set_transition(1, 0, {{1, 0.1}, {2, 0.9}});
    mdp.set_transition(2, 0, {{2, 1.0}});
    mdp.set_reward([](StateId, int, StateId) { return -1.0; });
    return mdp;
}

MarkovOption make_corridor_option() {
    MarkovOption o;
    o.name = "to_end";
    o.initiation = [](StateId s) { return s != 2; };
    o.policy = [](StateId) { return ActionDist{{0, 1.0}}; };
    o.termination = [](StateId s) { return s == 2 ? 1.0 : 0.0; };
    o.controlled_vars = {0};
    return o;
}

// Exhaustive trajectory enumeration: walks every path of length <= depth and
// accumulates termination mass per (end state, step). Independent of the
// forward recurrence used in production.
void enumerate_paths(const FlatMdp& mdp, const MarkovOption& o, StateId s, int k, double weight,
                     int depth, std::map<std::pair<StateId, int>, double>& mass) {
    if (k >= depth) return;
    for (const auto& [a, pa] : o.policy(s)) {
        for (const auto& [next, q] : mdp.transition(s, a)) {
            const double w = weight * pa * q;
            if (w == 0.0) continue;
            const double beta = o.termination(next);
            if (beta > 0.0) mass[{next, k + 1}] += w * beta;
            if (beta < 1.0) enumerate_paths(mdp, o, next, k + 1, w * (1.0 - beta), depth, mass);
        }
    }
}

// Random fully-supported single-variable MDP with random rewards in [-1, 0].
FlatMdp make_random_mdp(int n, int actions, std::mt19937& rng) {
    std::vector<std::string> names;
    for (int a = 0; a < actions; ++a) names.push_back("a" + std::to_string(a));
    FlatMdp mdp({{"x", n}}, names, 0.9);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    for (int a = 0; a < actions; ++a) {
        mdp.set_action_scope(a, {0});
        for (StateId s = 0; s < n; ++s) {
            SparseRow row;
            double total = 0.0;
            for (StateId t = 0; t < n; ++t) {
                row.emplace_back(t, unit(rng));
                total += row.back().second;
            }
            for (auto& [t, p] : row) p /= total;
            mdp.set_transition(s, a, std::move(row));
        }
    }
    auto rewards = std::make_shared<std::vector<double>>();
    for (int i = 0; i < n * actions * n; ++i)
        rewards->push_back(-std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    mdp.set_reward([rewards, n, actions](StateId s, int a, StateId next) {
        return (*rewards)[(static_cast<size_t>(s) * actions + a) * n + next];
    });
    return mdp;
}

MarkovOption make_random_option(int n, int actions, std::mt19937& rng) {
    auto beta = std::make_shared<std::vector<double>>();
    auto pol = std::make_shared<std::vector<ActionDist>>();
    std::uniform_real_distribution<double> unit(0.1, 0.9);
    for (int s = 0; s < n; ++s) {
        beta->push_back(unit(rng));
        ActionDist dist;
        double total = 0.0;
        for (int a = 0; a < actions; ++a) {
            dist.emplace_back(a, unit(rng));
            total += dist.back().second;
        }
        for (auto& [a, p] : dist) p /= total;
        pol->push_back(std::move(dist));
    }
    MarkovOption o;
    o.name = "random";
    o.initiation = [](StateId) { return true; };
    o.policy = [pol](StateId s) { return (*pol)[s]; };
    o.termination = [beta](StateId s) { return (*beta)[s]; };
    o.controlled_vars = {0};
    return o;
}

// Dense-matrix evaluation of the same model, written against the textbook
// formulas rather than the sparse recurrence.
struct DenseModel {
    std::map<std::pair<StateId, int>, double> mass;
    std::map<StateId, double> kernel;
    double reward = 0.0;
    double residual = 0.0;
};

DenseModel dense_option_model(const FlatMdp& mdp, const MarkovOption& o, StateId start,
                              int k_max) {
    const int n = static_cast<int>(mdp.num_states());
    std::vector<std::vector<double>> M(n, std::vector<double>(n, 0.0));
    std::vector<double> r(n, 0.0);
    for (StateId s = 0; s < n; ++s)
        for (const auto& [a, pa] : o.policy(s))
            for (const auto& [next, q] : mdp.transition(s, a)) {
                M[s][next] += pa * q;
                r[s] += pa * q * mdp.reward(s, a, next);
            }

    DenseModel out;
    std::vector<double> alive(n, 0.0);
    alive[start] = 1.0;
    const double gamma = mdp.discount();
    for (int k = 1; k <= k_max; ++k) {
        for (StateId s = 0; s < n; ++s)
            out.reward += std::pow(gamma, k - 1) * alive[s] * r[s];
        std::vector<double> dist(n, 0.0);
        for (StateId s = 0; s < n; ++s)
            for (StateId t = 0; t < n; ++t) dist[t] += alive[s] * M[s][t];
        for (StateId t = 0; t < n; ++t) {
            const double beta = o.termination(t);
            if (dist[t] * beta > 0.0) {
                out.mass[{t, k}] += dist[t] * beta;
                out.kernel[t] += std::pow(gamma, k) * dist[t] * beta;
            }
            alive[t] = dist[t] * (1.0 - beta);
        }
    }
    for (StateId s = 0; s < n; ++s) out.residual += alive[s];
    return out;
}

std::map<std::pair<StateId, int>, double> step_map(const StartModel& m) {
    std::map<std::pair<StateId, int>, double> out;
    for (const auto& e : m.steps) out[{e.next, e.k}] += e.p;
    return out;
}

}  // namespace

TEST_CASE("beta == 1 everywhere reduces to the one-step kernel") {
    const FlatMdp mdp = make_corridor();
    MarkovOption o = make_corridor_option();
    o.termination = [](StateId) { return 1.0; };
    const auto model = option_discounted_model(mdp, o, 50, 1e-12, {0}, /*with_steps=*/true);
    const auto& m = model.starts.at(0);
    REQUIRE(m.steps.size() == 2);
    for (const auto& e : m.steps) CHECK(e.k == 1);
    const auto mass = step_map(m);
    CHECK(mass.at({0, 1}) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(mass.at({1, 1}) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(m.reward == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(m.residual == 0.0);
    // Discounted kernel is gamma times the one-step row.
    REQUIRE(m.discounted_kernel.size() == 2);
    CHECK(m.discounted_kernel[0].second == doctest::Approx(0.9 * 0.1).epsilon(1e-12));
    CHECK(m.discounted_kernel[1].second == doctest::Approx(0.9 * 0.9).epsilon(1e-12));
}

TEST_CASE("corridor termination masses match exhaustive path enumeration") {
    const FlatMdp mdp = make_corridor();
    const MarkovOption o = make_corridor_option();
    const int depth = 14;
    std::map<std::pair<StateId, int>, double> oracle;
    enumerate_paths(mdp, o, 0, 0, 1.0, depth, oracle);

    const auto model = option_step_distribution(mdp, o, depth, {0});
    const auto mass = step_map(model.starts.at(0));
    CHECK(mass.at({2, 2}) == doctest::Approx(0.81).epsilon(1e-12));
    REQUIRE(mass.size() == oracle.size());
    for (const auto& [cell, p] : oracle)
        CHECK(mass.at(cell) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("residual decays geometrically with the horizon") {
    FlatMdp mdp({{"x", 1}}, {"stay"}, 0.9);
    mdp.set_action_scope(0, {0});
    mdp.set_transition(0, 0, {{0, 1.0}});
    mdp.set_reward([](StateId, int, StateId) { return -1.0; });
    MarkovOption o;
    o.initiation = [](StateId) { return true; };
    o.policy = [](StateId) { return ActionDist{{0, 1.0}}; };
    o.termination = [](StateId) { return 0.5; };
    o.controlled_vars = {0};
    for (int k_max : {1, 4, 10, 30}) {
        const auto model = option_discounted_model(mdp, o, k_max, 0.0, {0});
        CHECK(model.starts.at(0).residual ==
              doctest::Approx(std::pow(0.5, k_max)).epsilon(1e-12));
    }
    CHECK(option_discounted_model(mdp, o, 60, 1e-9, {0}).tol_attained());
    CHECK_FALSE(option_discounted_model(mdp, o, 5, 1e-9, {0}).tol_attained());
}

TEST_CASE("random option model matches a dense-matrix evaluation") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        const FlatMdp mdp = make_random_mdp(6, 2, rng);
        REQUIRE(mdp.validate().ok());
        const MarkovOption o = make_random_option(6, 2, rng);
        const int k_max = 60;
        const auto model = option_discounted_model(mdp, o, k_max, 0.0, {0, 3},
                                                   /*with_steps=*/true);
        for (StateId start : {0, 3}) {
            const auto dense = dense_option_model(mdp, o, start, k_max);
            const auto& m = model.starts.at(start);
            CHECK(m.reward == doctest::Approx(dense.reward).epsilon(1e-12));
            CHECK(m.residual == doctest::Approx(dense.residual).epsilon(1e-12));
            const auto mass = step_map(m);
            REQUIRE(mass.size() == dense.mass.size());
            for (const auto& [cell, p] : dense.mass)
                CHECK(mass.at(cell) == doctest::Approx(p).epsilon(1e-12));
            REQUIRE(m.discounted_kernel.size() == dense.kernel.size());
            for (const auto& [next, kp] : m.discounted_kernel)
                CHECK(kp == doctest::Approx(dense.kernel.at(next)).epsilon(1e-12));
        }
    }
}

TEST_CASE("discounted kernel is the gamma-weighted sum of the step masses") {
    std::mt19937 rng(7);
    const FlatMdp mdp = make_random_mdp(5, 2, rng);
    const MarkovOption o = make_random_option(5, 2, rng);
    const auto model =
        option_discounted_model(mdp, o, 80, 1e-12, {0, 2, 4}, /*with_steps=*/true);
    const double gamma = mdp.discount();
    for (const auto& [start, m] : model.starts) {
        std::map<StateId, double> acc;
        for (const auto& e : m.steps) acc[e.next] += std::pow(gamma, e.k) * e.p;
        REQUIRE(m.discounted_kernel.size() == acc.size());
        for (const auto& [next, kp] : m.discounted_kernel)
            CHECK(kp == doctest::Approx(acc.at(next)).epsilon(1e-12));
        // Total termination mass plus residual conserves probability.
        double total = m.residual;
        for (const auto& e : m.steps) total += e.p;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("initiable_states filters on the initiation predicate") {
    const FlatMdp mdp = make_corridor();
    const MarkovOption o = make_corridor_option();
    CHECK(initiable_states(mdp, o) == std::vector<StateId>{0, 1});
    CHECK(is_available(o, 0));
    CHECK_FALSE(is_available(o, 2));
}

TEST_CASE("k_max below one is rejected") {
    const FlatMdp mdp = make_corridor();
    const MarkovOption o = make_corridor_option();
    CHECK_THROWS_AS(option_discounted_model(mdp, o, 0, 1e-9, {0}), std::invalid_argument);
}
