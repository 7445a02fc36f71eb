#pragma once

#include <vector>

#include "copt/executor.hpp"
#include "copt/fmdp.hpp"

namespace copt {

// Result of one decision epoch: termination state, primitive-step duration,
// and cumulative discounted reward over the epoch.
struct DecisionOutcome {
    StateId next = 0;
    int duration = 0;
    double discounted_reward = 0.0;
};

// Decision-epoch view of an SMDP: a fixed action catalogue, per-state
// availability, and sampled execution. Implementations are immutable after
// construction; all mutable state lives in the caller's RngStream.
class SmdpEnvironment {
public:
    virtual ~SmdpEnvironment() = default;

    virtual int64_t num_states() const = 0;
    virtual int num_actions() const = 0;
    virtual StateId initial_state() const = 0;
    virtual bool is_terminal(StateId s) const = 0;
    virtual const std::vector<int>& available(StateId s) const = 0;
    virtual DecisionOutcome execute(StateId s, int action_id, RngStream& rng) const = 0;
};

}  // namespace copt
