#include "copt/rooms.hpp"

namespace copt {

RoomsConcurrentEnv::RoomsConcurrentEnv(const RoomsDomain& domain, TerminationRule rule)
    : domain_(domain), tuples_(all_multi_options(domain.partition, rule)) {
    available_.resize(domain_.mdp.num_states());
    for (StateId s = 0; s < domain_.mdp.num_states(); ++s) {
        if (domain_.is_goal(s)) continue;
        for (size_t id = 0; id < tuples_.size(); ++id)
            if (is_available(tuples_[id], s)) available_[s].push_back(static_cast<int>(id));
    }
}

DecisionOutcome RoomsConcurrentEnv::execute(StateId s, int action_id, RngStream& rng) const {
    const RunOutcome out = run_multi_option(domain_.mdp, tuples_.at(action_id), s, rng);
    return {out.end_state, out.duration, out.discounted_reward};
}

RoomsSequentialEnv::RoomsSequentialEnv(const RoomsDomain& domain) : domain_(domain) {
    available_.resize(domain_.mdp.num_states());
    for (StateId s = 0; s < domain_.mdp.num_states(); ++s) {
        if (domain_.is_goal(s)) continue;
        for (size_t id = 0; id < domain_.options.size(); ++id)
            if (domain_.options[id].initiation(s)) available_[s].push_back(static_cast<int>(id));
    }
}

DecisionOutcome RoomsSequentialEnv::execute(StateId s, int action_id, RngStream& rng) const {
    const RunOutcome out = run_sequential_option(domain_.mdp, domain_.options.at(action_id), s, rng);
    return {out.end_state, out.duration, out.discounted_reward};
}

}  // namespace copt
