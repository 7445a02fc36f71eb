#include "copt/planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace copt {

void SmdpProblem::validate() const {
    if (static_cast<int64_t>(available.size()) != num_states ||
        static_cast<int64_t>(terminal.size()) != num_states)
        throw std::invalid_argument("SmdpProblem: per-state table size mismatch");
    for (StateId s = 0; s < num_states; ++s) {
        if (!terminal[s] && available[s].empty())
            throw std::invalid_argument("SmdpProblem: non-terminal state " + std::to_string(s) +
                                        " has no available actions");
        for (int id : available[s]) {
            if (id < 0 || id >= static_cast<int>(models.size()))
                throw std::invalid_argument("SmdpProblem: bad action id");
            if (!models[id]->count(s))
                throw std::invalid_argument("SmdpProblem: action " + std::to_string(id) +
                                            " has no model at state " + std::to_string(s));
        }
    }
}

namespace {

double action_value(const SmdpProblem& problem, int id, StateId s,
                    const std::vector<double>& v) {
    const StartModel& m = problem.models[id]->at(s);
    double q = m.reward;
    for (const auto& [next, kp] : m.discounted_kernel) q += kp * v[next];
    return q;
}

ActionValueTable q_from_v(const SmdpProblem& problem, const std::vector<double>& v,
                          ExecMode mode) {
    ActionValueTable q;
    q.values.resize(problem.num_states);
    parallel_for(problem.num_states, mode, [&](int64_t s) {
        auto& row = q.values[s];
        row.reserve(problem.available[s].size());
        for (int id : problem.available[s])
            row.emplace_back(id, action_value(problem, id, static_cast<StateId>(s), v));
    });
    return q;
}

}  // namespace

SviResult svi(const SmdpProblem& problem, double tol, int max_iterations, ExecMode mode) {
    problem.validate();
    SviResult result;
    std::vector<double> v(problem.num_states, 0.0);
    std::vector<double> v_next(problem.num_states, 0.0);
    double change = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        parallel_for(problem.num_states, mode, [&](int64_t s) {
            if (problem.terminal[s]) {
                v_next[s] = 0.0;
                return;
            }
            double best = -std::numeric_limits<double>::infinity();
            for (int id : problem.available[s])
                best = std::max(best, action_value(problem, id, static_cast<StateId>(s), v));
            v_next[s] = best;
        });
        change = 0.0;
        for (StateId s = 0; s < problem.num_states; ++s)
            change = std::max(change, std::abs(v_next[s] - v[s]));
        v.swap(v_next);
        result.iterations = it + 1;
        if (change <= tol) {
            result.converged = true;
            break;
        }
    }
    result.residual = change;
    result.q = q_from_v(problem, v, mode);
    result.v.values = std::move(v);
    return result;
}

SviResult evaluate_policy(const SmdpProblem& problem, const StochasticPolicy& policy, double tol,
                          int max_iterations, ExecMode mode) {
    problem.validate();
    if (static_cast<int64_t>(policy.choice.size()) != problem.num_states)
        throw std::invalid_argument("evaluate_policy: policy size mismatch");
    for (StateId s = 0; s < problem.num_states; ++s) {
        if (problem.terminal[s]) continue;
        double sum = 0.0;
        for (const auto& [id, p] : policy.choice[s]) {
            if (std::find(problem.available[s].begin(), problem.available[s].end(), id) ==
                problem.available[s].end())
                throw std::invalid_argument("evaluate_policy: policy supports unavailable action");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("evaluate_policy: policy row does not sum to 1");
    }

    SviResult result;
    std::vector<double> v(problem.num_states, 0.0);
    std::vector<double> v_next(problem.num_states, 0.0);
    double change = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        parallel_for(problem.num_states, mode, [&](int64_t s) {
            if (problem.terminal[s]) {
                v_next[s] = 0.0;
                return;
            }
            double val = 0.0;
            for (const auto& [id, p] : policy.choice[s])
                val += p * action_value(problem, id, static_cast<StateId>(s), v);
            v_next[s] = val;
        });
        change = 0.0;
        for (StateId s = 0; s < problem.num_states; ++s)
            change = std::max(change, std::abs(v_next[s] - v[s]));
        v.swap(v_next);
        result.iterations = it + 1;
        if (change <= tol) {
            result.converged = true;
            break;
        }
    }
    result.residual = change;
    result.q = q_from_v(problem, v, mode);
    result.v.values = std::move(v);
    return result;
}

std::vector<int> greedy_policy(const SmdpProblem& problem, const ActionValueTable& q) {
    std::vector<int> out(problem.num_states, -1);
    for (StateId s = 0; s < problem.num_states; ++s) {
        if (problem.terminal[s]) continue;
        const auto& row = q.values[s];
        if (row.empty()) throw std::invalid_argument("greedy_policy: state with no entries");
        int best_id = row.front().first;
        double best_q = row.front().second;
        for (const auto& [id, qv] : row) {
            if (qv > best_q || (qv == best_q && id < best_id)) {
                best_q = qv;
                best_id = id;
            }
        }
        out[s] = best_id;
    }
    return out;
}

}  // namespace copt
