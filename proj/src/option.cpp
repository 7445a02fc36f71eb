#include "copt/option.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace copt {

double OptionModel::max_residual() const {
    double r = 0.0;
    for (const auto& [s, m] : starts) r = std::max(r, m.residual);
    return r;
}

InducedKernel::InducedKernel(const FlatMdp& mdp, const MarkovOption& option)
    : mdp_(mdp), option_(option) {}

void InducedKernel::ensure(StateId s) {
    if (cache_.count(s)) return;
    std::map<StateId, double> acc;
    double exp_reward = 0.0;
    for (const auto& [a, pa] : option_.policy(s)) {
        if (pa == 0.0) continue;
        for (const auto& [next, q] : mdp_.transition(s, a)) {
            if (q == 0.0) continue;
            acc[next] += pa * q;
            exp_reward += pa * q * mdp_.reward(s, a, next);
        }
    }
    SparseRow row(acc.begin(), acc.end());
    cache_.emplace(s, std::make_pair(std::move(row), exp_reward));
}

const SparseRow& InducedKernel::row(StateId s) {
    ensure(s);
    return cache_.at(s).first;
}

double InducedKernel::expected_reward(StateId s) {
    ensure(s);
    return cache_.at(s).second;
}

std::vector<StateId> initiable_states(const FlatMdp& mdp, const MarkovOption& o) {
    std::vector<StateId> out;
    for (StateId s = 0; s < mdp.num_states(); ++s)
        if (o.initiation(s)) out.push_back(s);
    return out;
}

StartModel option_start_model(const FlatMdp& mdp, const MarkovOption& o, InducedKernel& kernel,
                              StateId start, int k_max, double gamma, bool with_steps) {
    StartModel model;
    std::map<StateId, double> kernel_acc;
    std::map<StateId, double> alive;  // mass alive entering the next step
    alive[start] = 1.0;

    double gamma_k = 1.0;  // gamma^(k-1) at the top of the loop
    for (int k = 1; k <= k_max && !alive.empty(); ++k) {
        std::map<StateId, double> dist;
        double step_reward = 0.0;
        for (const auto& [sj, w] : alive) {
            step_reward += w * kernel.expected_reward(sj);
            for (const auto& [s2, q] : kernel.row(sj)) dist[s2] += w * q;
        }
        model.reward += gamma_k * step_reward;
        gamma_k *= gamma;  // now gamma^k

        std::map<StateId, double> next_alive;
        for (const auto& [s2, w2] : dist) {
            const double beta = o.termination(s2);
            if (beta > 0.0) {
                const double p = w2 * beta;
                kernel_acc[s2] += gamma_k * p;
                if (with_steps) model.steps.push_back({k, s2, p});
            }
            if (beta < 1.0) {
                const double surv = w2 * (1.0 - beta);
                if (surv > 0.0) next_alive[s2] = surv;
            }
        }
        alive = std::move(next_alive);
    }
    for (const auto& [sj, w] : alive) model.residual += w;
    model.discounted_kernel.assign(kernel_acc.begin(), kernel_acc.end());
    return model;
}

static OptionModel build_option_model(const FlatMdp& mdp, const MarkovOption& o, int k_max,
                                      double tol, const std::vector<StateId>& starts,
                                      bool with_steps, ExecMode mode) {
    if (k_max < 1) throw std::invalid_argument("option model: k_max < 1");
    OptionModel model;
    model.k_max = k_max;
    model.tol = tol;
    model.has_steps = with_steps;
    std::vector<StartModel> per_start(starts.size());
    parallel_for(static_cast<int64_t>(starts.size()), mode, [&](int64_t i) {
        InducedKernel kernel(mdp, o);
        per_start[i] =
            option_start_model(mdp, o, kernel, starts[i], k_max, mdp.discount(), with_steps);
    });
    model.starts.reserve(starts.size());
    for (size_t i = 0; i < starts.size(); ++i)
        model.starts.emplace(starts[i], std::move(per_start[i]));
    return model;
}

OptionModel option_step_distribution(const FlatMdp& mdp, const MarkovOption& o, int k_max,
                                     const std::vector<StateId>& starts, ExecMode mode) {
    return build_option_model(mdp, o, k_max, 0.0, starts, /*with_steps=*/true, mode);
}

OptionModel option_step_distribution(const FlatMdp& mdp, const MarkovOption& o, int k_max,
                                     ExecMode mode) {
    return option_step_distribution(mdp, o, k_max, initiable_states(mdp, o), mode);
}

OptionModel option_discounted_model(const FlatMdp& mdp, const MarkovOption& o, int k_max,
                                    double tol, const std::vector<StateId>& starts,
                                    bool with_steps, ExecMode mode) {
    return build_option_model(mdp, o, k_max, tol, starts, with_steps, mode);
}

OptionModel option_discounted_model(const FlatMdp& mdp, const MarkovOption& o, int k_max,
                                    double tol, ExecMode mode) {
    return build_option_model(mdp, o, k_max, tol, initiable_states(mdp, o), false, mode);
}

}  // namespace copt
