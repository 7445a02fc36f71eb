#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace copt {

using StateId = int32_t;

// One discrete state variable with a finite value domain.
struct StateVariable {
    std::string name;
    int domain_size = 0;
};

// Assignment of a value index to every declared variable, in declared order.
struct FactoredState {
    std::vector<int> values;

    bool operator==(const FactoredState& other) const { return values == other.values; }
};

// Sparse probability row: (next state ordinal, probability), sorted by state.
using SparseRow = std::vector<std::pair<StateId, double>>;

struct MdpDiagnostics {
    struct Violation {
        StateId state;
        int action;
        std::string message;
    };
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

// Flat MDP over the cross-product of finite state variables. Transition rows
// are stored per (action, state). Each action declares a scope: the set of
// variable indices it may change. Rows must keep every out-of-scope variable
// fixed; validate_scopes() checks this, and the joint-step semantics of
// concurrent execution depend on it.
class FlatMdp {
public:
    FlatMdp(std::vector<StateVariable> variables,
            std::vector<std::string> actions,
            double discount);

    // -- state codec -----------------------------------------------------

    int64_t num_states() const { return num_states_; }
    int num_actions() const { return static_cast<int>(actions_.size()); }
    int num_variables() const { return static_cast<int>(variables_.size()); }

    const std::vector<StateVariable>& variables() const { return variables_; }
    const std::vector<std::string>& actions() const { return actions_; }
    double discount() const { return discount_; }

    StateId ordinal(const FactoredState& s) const;
    FactoredState state(StateId ordinal) const;
    int variable_index(const std::string& name) const;
    int action_index(const std::string& name) const;

    // -- construction ----------------------------------------------------

    void set_action_scope(int action, std::vector<int> variable_indices);
    void set_transition(StateId s, int action, SparseRow row);
    void set_reward(std::function<double(StateId, int, StateId)> reward);
    void set_discount(double gamma);

    // -- queries ---------------------------------------------------------

    const SparseRow& transition(StateId s, int action) const;
    const std::vector<int>& action_scope(int action) const;
    double reward(StateId s, int action, StateId next) const;

    // Lists every (s, a) whose distribution violates the sum/range
    // invariants. Empty report iff the MDP is well formed.
    MdpDiagnostics validate() const;

    // Checks that every row changes only variables in its action's scope.
    MdpDiagnostics validate_scopes() const;

private:
    std::vector<StateVariable> variables_;
    std::vector<std::string> actions_;
    std::vector<std::vector<int>> action_scopes_;
    std::vector<std::vector<SparseRow>> transition_;  // [action][state]
    std::function<double(StateId, int, StateId)> reward_;
    double discount_;
    std::vector<int64_t> strides_;
    int64_t num_states_ = 0;
};

// Ordered enumeration of all states, lexicographic in declared variable
// order. Throws if the state count exceeds `cap` (tabular-size guard).
std::vector<FactoredState> enumerate_states(const FlatMdp& mdp, int64_t cap = 10'000'000);

// Restriction of `s` to the variables in `var_indices`, in declared order.
std::vector<int> project(const FactoredState& s, const std::vector<int>& var_indices);

// Assembles a full state from disjoint (variable subset, sub-vector) parts.
// The subsets must be pairwise disjoint and jointly cover all variables.
FactoredState compose(int num_variables,
                      const std::vector<std::pair<std::vector<int>, std::vector<int>>>& parts);

}  // namespace copt
