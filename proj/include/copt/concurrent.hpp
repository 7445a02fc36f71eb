#pragma once

#include <string>
#include <vector>

#include "copt/fmdp.hpp"
#include "copt/option.hpp"
#include "copt/parallel.hpp"

namespace copt {

// Multi-option termination events: T1 ends at the first member termination
// (the rest are interrupted); T2 ends when the last member terminates
// (finished members' controlled variables are frozen meanwhile).
enum class TerminationRule { T1, T2 };

std::string to_string(TerminationRule rule);

// Disjoint classes of options; options in different classes are coherent
// (disjoint controlled variables) and may run in parallel.
struct CoherencePartition {
    std::vector<std::vector<const MarkovOption*>> classes;
};

// One option drawn from each class of a coherence partition, executed
// concurrently under a termination rule. Degenerate single-member tuples are
// allowed; they must behave exactly like the plain option.
struct MultiOption {
    std::string name;
    std::vector<const MarkovOption*> members;
    TerminationRule rule = TerminationRule::T1;
};

struct MultiOptionModel {
    TerminationRule rule = TerminationRule::T1;
    int k_max = 0;
    double tol = 0.0;
    bool has_steps = false;
    std::unordered_map<StateId, StartModel> starts;

    double max_residual() const;
    bool tol_attained() const { return max_residual() <= tol; }
};

// True iff both options are partially factored and their controlled-variable
// sets are disjoint, i.e. they can safely run in parallel.
bool check_coherent(const MarkovOption& a, const MarkovOption& b);

// Validates or derives a coherence partition. With `declared_classes`
// (indices into `options` per class) the grouping is taken as given and only
// cross-class coherence is enforced; same-class pairs may have disjoint
// controlled variables when the domain forbids their parallel execution by
// initiation-set semantics. Without a declared grouping, options sharing
// controlled variables are merged transitively.
CoherencePartition build_partition(const std::vector<const MarkovOption*>& options,
                                   const std::vector<std::vector<int>>& declared_classes = {});

// All multi-options initiable at s: one available member per class. Any
// class with no available member at s makes the set empty.
std::vector<MultiOption> enumerate_multi_options(const CoherencePartition& partition, StateId s,
                                                 TerminationRule rule);

bool is_available(const MultiOption& mo, StateId s);

// Single-step transition probability of the multi-option: product of the
// members' policy-induced one-step kernels over their disjoint controlled
// blocks, zero whenever a variable outside the union of the blocks changes.
double single_step_xi(const FlatMdp& mdp, const MultiOption& mo, StateId s, StateId next);

// k-step survival probability: reach `next` after k steps with no member
// terminating at any intermediate state.
double k_step_xi(const FlatMdp& mdp, const MultiOption& mo, StateId s, StateId next, int k);

// Termination-time distributions P(s, s', k) for a single start state.
double p_multi_t1(const FlatMdp& mdp, const MultiOption& mo, StateId s, StateId next, int k);
double p_multi_t2(const FlatMdp& mdp, const MultiOption& mo, StateId s, StateId next, int k);

// Full analytic model of a multi-option under its termination rule, over the
// given start states (defaults to every jointly initiable state).
MultiOptionModel multi_option_model(const FlatMdp& mdp, const MultiOption& mo, int k_max,
                                    double tol, const std::vector<StateId>& starts,
                                    bool with_steps = false, ExecMode mode = ExecMode::Serial);
MultiOptionModel multi_option_model(const FlatMdp& mdp, const MultiOption& mo,
                                    int k_max = kDefaultKMax, double tol = kDefaultTol,
                                    ExecMode mode = ExecMode::Serial);

std::vector<StateId> initiable_states(const FlatMdp& mdp, const MultiOption& mo);

// Text dump: header line naming the multi-option and rule, then one line
// `s s' k probability` per cell, sorted lexicographically.
std::string dump_model(const MultiOption& mo, const MultiOptionModel& model);

}  // namespace copt
