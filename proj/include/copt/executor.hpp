#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "copt/concurrent.hpp"
#include "copt/fmdp.hpp"
#include "copt/option.hpp"

namespace copt {

// Deterministic random stream: identical (seed, stream) reproduces identical
// trajectories bit-for-bit.
class RngStream {
public:
    RngStream(uint64_t seed, uint64_t stream);

    double uniform();  // in [0, 1)

    // Samples an index from a sparse probability row.
    StateId sample_row(const SparseRow& row);
    int sample_action(const ActionDist& dist);

private:
    std::mt19937_64 engine_;
};

struct RunOutcome {
    StateId end_state = 0;
    int duration = 0;                       // primitive steps executed
    double discounted_reward = 0.0;         // sum gamma^(j-1) r_j
    std::vector<int> per_member_end_times;  // one entry per member
};

// One joint primitive step: every active member samples an action from its
// policy; effects apply to disjoint controlled blocks, frozen members'
// variables stay fixed. Returns the next state and the single per-step
// scalar reward.
std::pair<StateId, double> step_joint(const FlatMdp& mdp,
                                      const std::vector<const MarkovOption*>& members,
                                      const std::vector<bool>& active, StateId s, RngStream& rng);

// Executes a multi-option from s until its termination event. T1 stops at
// the first member termination (others interrupted, end time recorded at the
// interruption step); T2 freezes finished members and stops when all have
// terminated. Termination is sampled per member at the state reached after
// each step.
RunOutcome run_multi_option(const FlatMdp& mdp, const MultiOption& mo, StateId s, RngStream& rng,
                            int64_t step_cap = 1'000'000);

// Standard single-option execution (sequential baseline): variables outside
// the option's controlled set stay frozen for the whole run.
RunOutcome run_sequential_option(const FlatMdp& mdp, const MarkovOption& o, StateId s,
                                 RngStream& rng, int64_t step_cap = 1'000'000);

// Empirical multi-option model from N rollouts.
struct EmpiricalModel {
    int64_t rollouts = 0;
    std::map<std::pair<StateId, int>, int64_t> counts;  // (end state, duration) -> hits
    double mean_reward = 0.0;
    double stderr_reward = 0.0;

    double frequency(StateId next, int k) const;
    // Binomial standard error of the (next, k) cell frequency.
    double stderr_cell(StateId next, int k) const;
};

EmpiricalModel monte_carlo_model(const FlatMdp& mdp, const MultiOption& mo, StateId s, int64_t n,
                                 RngStream& rng);

// One row of an analytic-vs-empirical comparison.
struct VerifyCell {
    StateId next;
    int k;
    double analytic;
    double empirical;
    double stderr_;
    double z;
};

struct VerifyReport {
    std::vector<VerifyCell> cells;  // cells with >= min_expected_hits analytic hits
    double reward_analytic = 0.0;
    double reward_empirical = 0.0;
    double reward_z = 0.0;
    bool pass = false;
};

// Compares the analytic start model against Monte-Carlo frequencies; a cell
// qualifies when its expected hit count is at least `min_expected_hits`.
// PASS iff every qualifying cell and the mean reward are within `z_limit`
// standard errors.
VerifyReport verify_against_monte_carlo(const StartModel& analytic, const EmpiricalModel& emp,
                                        double min_expected_hits = 20.0, double z_limit = 3.0);

}  // namespace copt
