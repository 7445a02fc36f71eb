#pragma once

#include <unordered_map>
#include <vector>

#include "copt/option.hpp"
#include "copt/parallel.hpp"

namespace copt {

struct ValueFunction {
    std::vector<double> values;
};

// Action values on (state, action id) pairs where the action is available.
struct ActionValueTable {
    std::vector<std::vector<std::pair<int, double>>> values;  // per state
};

// Stochastic policy over available action ids per state.
struct StochasticPolicy {
    std::vector<std::vector<std::pair<int, double>>> choice;
};

// Tabular SMDP planning problem: per-action-id analytic models (reward and
// discounted kernel per start state) plus per-state availability. Terminal
// states have value 0 and need no actions; a non-terminal state with an
// empty available set is a configuration error.
struct SmdpProblem {
    int64_t num_states = 0;
    std::vector<const std::unordered_map<StateId, StartModel>*> models;  // per action id
    std::vector<std::vector<int>> available;                             // per state
    std::vector<char> terminal;

    void validate() const;
};

struct SviResult {
    ValueFunction v;
    ActionValueTable q;
    int iterations = 0;
    double residual = 0.0;  // final sup-norm change
    bool converged = false;
};

// Synchronous value iteration on the discounted-kernel Bellman equations;
// stops when the sup-norm sweep change drops to tol.
SviResult svi(const SmdpProblem& problem, double tol = 1e-8, int max_iterations = 100'000,
              ExecMode mode = ExecMode::Serial);

// Fixed point of the policy-evaluation equations by successive approximation.
SviResult evaluate_policy(const SmdpProblem& problem, const StochasticPolicy& policy,
                          double tol = 1e-8, int max_iterations = 100'000,
                          ExecMode mode = ExecMode::Serial);

// Argmax per state, ties broken by lowest action id. Terminal states get -1.
std::vector<int> greedy_policy(const SmdpProblem& problem, const ActionValueTable& q);

}  // namespace copt
