#include "copt/executor.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace copt {

namespace {
uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

RngStream::RngStream(uint64_t seed, uint64_t stream)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5851f42d4c957f2dULL))) {}

double RngStream::uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

StateId RngStream::sample_row(const SparseRow& row) {
    const double u = uniform();
    double acc = 0.0;
    for (const auto& [next, p] : row) {
        acc += p;
        if (u < acc) return next;
    }
    return row.back().first;  // numeric slack
}

int RngStream::sample_action(const ActionDist& dist) {
    const double u = uniform();
    double acc = 0.0;
    for (const auto& [a, p] : dist) {
        acc += p;
        if (u < acc) return a;
    }
    return dist.back().first;
}

std::pair<StateId, double> step_joint(const FlatMdp& mdp,
                                      const std::vector<const MarkovOption*>& members,
                                      const std::vector<bool>& active, StateId s, RngStream& rng) {
    FactoredState next = mdp.state(s);
    int first_action = -1;
    for (size_t i = 0; i < members.size(); ++i) {
        if (!active[i]) continue;
        const int a = rng.sample_action(members[i]->policy(s));
        const StateId block_next = rng.sample_row(mdp.transition(s, a));
        const FactoredState bn = mdp.state(block_next);
        for (int v : mdp.action_scope(a)) next.values[v] = bn.values[v];
        if (first_action < 0) first_action = a;
    }
    if (first_action < 0) throw std::logic_error("step_joint: no active member");
    const StateId n = mdp.ordinal(next);
    return {n, mdp.reward(s, first_action, n)};
}

RunOutcome run_multi_option(const FlatMdp& mdp, const MultiOption& mo, StateId s, RngStream& rng,
                            int64_t step_cap) {
    const size_t m = mo.members.size();
    RunOutcome out;
    out.per_member_end_times.assign(m, 0);
    std::vector<bool> active(m, true);
    size_t n_active = m;
    const double gamma = mdp.discount();
    double g = 1.0;
    int k = 0;

    while (true) {
        if (k >= step_cap)
            throw std::runtime_error("run_multi_option: step cap exceeded (improper option?)");
        auto [s2, r] = step_joint(mdp, mo.members, active, s, rng);
        ++k;
        out.discounted_reward += g * r;
        g *= gamma;

        // Sample termination for every still-active member at the new state.
        std::vector<bool> terminated(m, false);
        bool any = false;
        for (size_t i = 0; i < m; ++i) {
            if (!active[i]) continue;
            const double beta = mo.members[i]->termination(s2);
            if (beta > 0.0 && rng.uniform() < beta) {
                terminated[i] = true;
                any = true;
            }
        }
        s = s2;
        if (mo.rule == TerminationRule::T1) {
            if (any) {
                for (size_t i = 0; i < m; ++i)
                    if (active[i]) out.per_member_end_times[i] = k;
                break;
            }
        } else {
            for (size_t i = 0; i < m; ++i) {
                if (terminated[i]) {
                    active[i] = false;
                    out.per_member_end_times[i] = k;
                    --n_active;
                }
            }
            if (n_active == 0) break;
        }
    }
    out.end_state = s;
    out.duration = k;
    return out;
}

RunOutcome run_sequential_option(const FlatMdp& mdp, const MarkovOption& o, StateId s,
                                 RngStream& rng, int64_t step_cap) {
    MultiOption single;
    single.name = o.name;
    single.members = {&o};
    single.rule = TerminationRule::T1;
    return run_multi_option(mdp, single, s, rng, step_cap);
}

double EmpiricalModel::frequency(StateId next, int k) const {
    auto it = counts.find({next, k});
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / rollouts;
}

double EmpiricalModel::stderr_cell(StateId next, int k) const {
    const double p = frequency(next, k);
    return std::sqrt(p * (1.0 - p) / rollouts);
}

EmpiricalModel monte_carlo_model(const FlatMdp& mdp, const MultiOption& mo, StateId s, int64_t n,
                                 RngStream& rng) {
    if (n < 1) throw std::invalid_argument("monte_carlo_model: n < 1");
    EmpiricalModel emp;
    emp.rollouts = n;
    double sum = 0.0, sumsq = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const RunOutcome out = run_multi_option(mdp, mo, s, rng);
        ++emp.counts[{out.end_state, out.duration}];
        sum += out.discounted_reward;
        sumsq += out.discounted_reward * out.discounted_reward;
    }
    emp.mean_reward = sum / n;
    const double var = std::max(0.0, sumsq / n - emp.mean_reward * emp.mean_reward);
    emp.stderr_reward = std::sqrt(var / n);
    return emp;
}

VerifyReport verify_against_monte_carlo(const StartModel& analytic, const EmpiricalModel& emp,
                                        double min_expected_hits, double z_limit) {
    VerifyReport report;
    const double n = static_cast<double>(emp.rollouts);

    std::map<std::pair<StateId, int>, double> analytic_cells;
    for (const auto& e : analytic.steps) analytic_cells[{e.next, e.k}] += e.p;

    std::set<std::pair<StateId, int>> keys;
    for (const auto& [cell, p] : analytic_cells)
        if (p * n >= min_expected_hits) keys.insert(cell);
    for (const auto& [cell, count] : emp.counts)
        if (static_cast<double>(count) >= min_expected_hits) keys.insert(cell);

    report.pass = true;
    for (const auto& [next, k] : keys) {
        auto it = analytic_cells.find({next, k});
        const double pa = it == analytic_cells.end() ? 0.0 : it->second;
        const double pe = emp.frequency(next, k);
        // Standard error from the analytic cell probability, floored so that
        // a zero-probability cell with empirical hits still scores finite z.
        const double se = std::max(std::sqrt(pa * (1.0 - pa) / n), 1.0 / n);
        const double z = (pe - pa) / se;
        report.cells.push_back({next, k, pa, pe, se, z});
        if (std::abs(z) > z_limit) report.pass = false;
    }
    report.reward_analytic = analytic.reward;
    report.reward_empirical = emp.mean_reward;
    const double se_r = std::max(emp.stderr_reward, 1e-300);
    report.reward_z = (emp.mean_reward - analytic.reward) / se_r;
    if (emp.stderr_reward == 0.0) {
        if (std::abs(emp.mean_reward - analytic.reward) > 1e-9) report.pass = false;
    } else if (std::abs(report.reward_z) > z_limit) {
        report.pass = false;
    }
    return report;
}

}  // namespace copt
