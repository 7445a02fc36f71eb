#include "copt/rooms.hpp"

namespace copt {

namespace {

std::vector<StateId> non_goal_initiable(const RoomsDomain& domain, const MultiOption& mo) {
    std::vector<StateId> out;
    for (StateId s = 0; s < domain.mdp.num_states(); ++s)
        if (!domain.is_goal(s) && is_available(mo, s)) out.push_back(s);
    return out;
}

void fill_availability(const RoomsDomain& domain, SmdpProblem& problem,
                       const std::function<bool(int, StateId)>& avail, int n_actions) {
    const int64_t n = domain.mdp.num_states();
    problem.num_states = n;
    problem.available.resize(n);
    problem.terminal.resize(n);
    for (StateId s = 0; s < n; ++s) {
        problem.terminal[s] = domain.is_goal(s) ? 1 : 0;
        if (problem.terminal[s]) continue;
        for (int id = 0; id < n_actions; ++id)
            if (avail(id, s)) problem.available[s].push_back(id);
    }
}

}  // namespace

RoomsPlanning build_concurrent_planning(const RoomsDomain& domain, TerminationRule rule,
                                        int k_max, double tol, ExecMode mode) {
    RoomsPlanning plan;
    plan.tuples = all_multi_options(domain.partition, rule);
    plan.models.reserve(plan.tuples.size());
    for (const auto& mo : plan.tuples) {
        plan.models.push_back(multi_option_model(domain.mdp, mo, k_max, tol,
                                                 non_goal_initiable(domain, mo),
                                                 /*with_steps=*/false, mode));
    }
    for (const auto& m : plan.models) plan.problem.models.push_back(&m.starts);
    fill_availability(
        domain, plan.problem,
        [&](int id, StateId s) { return is_available(plan.tuples[id], s); },
        static_cast<int>(plan.tuples.size()));
    plan.problem.validate();
    return plan;
}

RoomsPlanning build_sequential_planning(const RoomsDomain& domain, int k_max, double tol,
                                        ExecMode mode) {
    RoomsPlanning plan;
    plan.option_models.reserve(domain.options.size());
    for (const auto& o : domain.options) {
        std::vector<StateId> starts;
        for (StateId s = 0; s < domain.mdp.num_states(); ++s)
            if (!domain.is_goal(s) && o.initiation(s)) starts.push_back(s);
        plan.option_models.push_back(
            option_discounted_model(domain.mdp, o, k_max, tol, starts, /*with_steps=*/false, mode));
    }
    for (const auto& m : plan.option_models) plan.problem.models.push_back(&m.starts);
    fill_availability(
        domain, plan.problem,
        [&](int id, StateId s) { return domain.options[id].initiation(s); },
        static_cast<int>(domain.options.size()));
    plan.problem.validate();
    return plan;
}

}  // namespace copt
