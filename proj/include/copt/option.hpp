#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "copt/fmdp.hpp"
#include "copt/parallel.hpp"

namespace copt {

// Distribution over primitive actions: (action index, probability).
using ActionDist = std::vector<std::pair<int, double>>;

// Markov option <I, pi, beta> with its controlled/observed variable split.
// controlled_vars (Omega) are the variables evolved solely by this option;
// observed_vars (phi) are read but evolved by other processes.
struct MarkovOption {
    std::string name;
    std::function<bool(StateId)> initiation;
    std::function<ActionDist(StateId)> policy;
    std::function<double(StateId)> termination;
    std::vector<int> controlled_vars;
    std::vector<int> observed_vars;
};

inline bool is_available(const MarkovOption& o, StateId s) { return o.initiation(s); }

// One (k, next state, probability) cell of a k-step termination distribution.
struct StepEntry {
    int k;
    StateId next;
    double p;
};

// Analytic model of one (multi-)option from a single initiation state:
// expected discounted reward, discounted transition kernel, optional k-step
// termination distribution, and the probability mass not yet terminated at
// the truncation horizon.
struct StartModel {
    double reward = 0.0;
    SparseRow discounted_kernel;
    std::vector<StepEntry> steps;
    double residual = 0.0;
};

struct OptionModel {
    int k_max = 0;
    double tol = 0.0;
    bool has_steps = false;
    std::unordered_map<StateId, StartModel> starts;

    // Largest residual over starts; tol is attainable iff this is <= tol.
    double max_residual() const;
    bool tol_attained() const { return max_residual() <= tol; }
};

// One-step kernel induced by the option's policy, with per-state expected
// one-step reward. Rows are built on demand; not safe for concurrent use,
// give each thread its own instance.
class InducedKernel {
public:
    InducedKernel(const FlatMdp& mdp, const MarkovOption& option);

    const SparseRow& row(StateId s);
    double expected_reward(StateId s);

private:
    void ensure(StateId s);

    const FlatMdp& mdp_;
    const MarkovOption& option_;
    std::unordered_map<StateId, std::pair<SparseRow, double>> cache_;
};

inline constexpr int kDefaultKMax = 200;
inline constexpr double kDefaultTol = 1e-9;

// k-step termination distributions p^o(s, s', k) plus residual mass, for the
// given start states (defaults to every initiable state). Forward recurrence:
// the survival mass is propagated through the policy-induced one-step kernel,
// termination weight beta(s') applied at each step; the initiation state
// never terminates at k = 0.
OptionModel option_step_distribution(const FlatMdp& mdp, const MarkovOption& o, int k_max,
                                     const std::vector<StateId>& starts,
                                     ExecMode mode = ExecMode::Serial);
OptionModel option_step_distribution(const FlatMdp& mdp, const MarkovOption& o, int k_max,
                                     ExecMode mode = ExecMode::Serial);

// Full discounted model: reward r^o_s, discounted kernel p^o_ss', and (when
// with_steps) the step distributions. Truncation residual is recorded, never
// silently renormalized.
OptionModel option_discounted_model(const FlatMdp& mdp, const MarkovOption& o, int k_max,
                                    double tol, const std::vector<StateId>& starts,
                                    bool with_steps = false, ExecMode mode = ExecMode::Serial);
OptionModel option_discounted_model(const FlatMdp& mdp, const MarkovOption& o,
                                    int k_max = kDefaultKMax, double tol = kDefaultTol,
                                    ExecMode mode = ExecMode::Serial);

// All states where the option can be initiated.
std::vector<StateId> initiable_states(const FlatMdp& mdp, const MarkovOption& o);

// Single-start recurrence used by the builders above and by remainder
// processes of concurrent models. Kernel rows must come from `kernel`.
StartModel option_start_model(const FlatMdp& mdp, const MarkovOption& o, InducedKernel& kernel,
                              StateId start, int k_max, double gamma, bool with_steps);

}  // namespace copt
