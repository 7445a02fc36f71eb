#include "copt/concurrent.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <sstream>
#include <stdexcept>

namespace copt {

std::string to_string(TerminationRule rule) {
    return rule == TerminationRule::T1 ? "T1" : "T2";
}

double MultiOptionModel::max_residual() const {
    double r = 0.0;
    for (const auto& [s, m] : starts) r = std::max(r, m.residual);
    return r;
}

bool check_coherent(const MarkovOption& a, const MarkovOption& b) {
    for (int va : a.controlled_vars)
        for (int vb : b.controlled_vars)
            if (va == vb) return false;
    return true;
}

CoherencePartition build_partition(const std::vector<const MarkovOption*>& options,
                                   const std::vector<std::vector<int>>& declared_classes) {
    CoherencePartition partition;
    if (!declared_classes.empty()) {
        std::vector<bool> seen(options.size(), false);
        for (const auto& cls : declared_classes) {
            std::vector<const MarkovOption*> members;
            for (int idx : cls) {
                if (idx < 0 || idx >= static_cast<int>(options.size()))
                    throw std::invalid_argument("build_partition: class index out of range");
                if (seen[idx])
                    throw std::invalid_argument("build_partition: option in two classes: " +
                                                options[idx]->name);
                seen[idx] = true;
                members.push_back(options[idx]);
            }
            partition.classes.push_back(std::move(members));
        }
        for (size_t i = 0; i < options.size(); ++i)
            if (!seen[i])
                throw std::invalid_argument("build_partition: option not covered: " +
                                            options[i]->name);
    } else {
        // Merge options transitively on shared controlled variables.
        std::vector<int> cls(options.size());
        for (size_t i = 0; i < options.size(); ++i) cls[i] = static_cast<int>(i);
        bool changed = true;
        while (changed) {
            changed = false;
            for (size_t i = 0; i < options.size(); ++i) {
                for (size_t j = i + 1; j < options.size(); ++j) {
                    if (!check_coherent(*options[i], *options[j]) && cls[i] != cls[j]) {
                        int from = std::max(cls[i], cls[j]), to = std::min(cls[i], cls[j]);
                        for (auto& c : cls)
                            if (c == from) c = to;
                        changed = true;
                    }
                }
            }
        }
        std::vector<int> order;
        for (size_t i = 0; i < options.size(); ++i)
            if (std::find(order.begin(), order.end(), cls[i]) == order.end())
                order.push_back(cls[i]);
        for (int c : order) {
            std::vector<const MarkovOption*> members;
            for (size_t i = 0; i < options.size(); ++i)
                if (cls[i] == c) members.push_back(options[i]);
            partition.classes.push_back(std::move(members));
        }
    }
    // Cross-class pairs must be coherent.
    for (size_t ci = 0; ci < partition.classes.size(); ++ci) {
        for (size_t cj = ci + 1; cj < partition.classes.size(); ++cj) {
            for (const auto* a : partition.classes[ci]) {
                for (const auto* b : partition.classes[cj]) {
                    if (!check_coherent(*a, *b))
                        throw std::invalid_argument(
                            "build_partition: cross-class pair not coherent: " + a->name + " / " +
                            b->name);
                }
            }
        }
    }
    return partition;
}

static std::string tuple_name(const std::vector<const MarkovOption*>& members) {
    std::string name;
    for (const auto* m : members) {
        if (!name.empty()) name += "+";
        name += m->name;
    }
    return name;
}

std::vector<MultiOption> enumerate_multi_options(const CoherencePartition& partition, StateId s,
                                                 TerminationRule rule) {
    std::vector<std::vector<const MarkovOption*>> avail;
    for (const auto& cls : partition.classes) {
        std::vector<const MarkovOption*> a;
        for (const auto* o : cls)
            if (o->initiation(s)) a.push_back(o);
        if (a.empty()) return {};
        avail.push_back(std::move(a));
    }
    std::vector<MultiOption> out;
    std::vector<size_t> idx(avail.size(), 0);
    while (true) {
        MultiOption mo;
        mo.rule = rule;
        for (size_t c = 0; c < avail.size(); ++c) mo.members.push_back(avail[c][idx[c]]);
        mo.name = tuple_name(mo.members);
        out.push_back(std::move(mo));
        size_t c = avail.size();
        while (c > 0) {
            --c;
            if (++idx[c] < avail[c].size()) break;
            idx[c] = 0;
            if (c == 0) return out;
        }
    }
}

bool is_available(const MultiOption& mo, StateId s) {
    for (const auto* m : mo.members)
        if (!m->initiation(s)) return false;
    return true;
}

std::vector<StateId> initiable_states(const FlatMdp& mdp, const MultiOption& mo) {
    std::vector<StateId> out;
    for (StateId s = 0; s < mdp.num_states(); ++s)
        if (is_available(mo, s)) out.push_back(s);
    return out;
}

namespace {

// Joint one-step kernel of a member subset: each member samples a primitive
// from its policy; effects apply to disjoint controlled blocks; everything
// outside the union of the blocks stays fixed. Per-step reward is the flat
// MDP reward of the first member's action against the composed next state.
class JointKernel {
public:
    JointKernel(const FlatMdp& mdp, const std::vector<const MarkovOption*>& members)
        : mdp_(mdp), members_(members) {
        for (size_t i = 0; i < members_.size(); ++i) {
            for (size_t j = i + 1; j < members_.size(); ++j) {
                if (!check_coherent(*members_[i], *members_[j]))
                    throw std::invalid_argument("multi-option members with overlapping scopes: " +
                                                members_[i]->name + " / " + members_[j]->name);
            }
        }
    }

    const SparseRow& row(uint32_t mask, StateId s) { return entry(mask, s).first; }
    double expected_reward(uint32_t mask, StateId s) { return entry(mask, s).second; }

private:
    struct Partial {
        std::vector<int> values;
        double p;
        int first_action;
    };

    const std::pair<SparseRow, double>& entry(uint32_t mask, StateId s) {
        const int64_t key = static_cast<int64_t>(mask) * mdp_.num_states() + s;
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        std::vector<Partial> partials{{mdp_.state(s).values, 1.0, -1}};
        for (size_t i = 0; i < members_.size(); ++i) {
            if (!(mask & (1u << i))) continue;
            std::vector<Partial> next;
            for (const auto& part : partials) {
                for (const auto& [a, pa] : members_[i]->policy(s)) {
                    if (pa == 0.0) continue;
                    const auto& scope = mdp_.action_scope(a);
                    for (const auto& [n, q] : mdp_.transition(s, a)) {
                        if (q == 0.0) continue;
                        Partial np = part;
                        const FactoredState fn = mdp_.state(n);
                        for (int v : scope) np.values[v] = fn.values[v];
                        np.p *= pa * q;
                        if (np.first_action < 0) np.first_action = a;
                        next.push_back(std::move(np));
                    }
                }
            }
            partials = std::move(next);
        }
        std::map<StateId, double> acc;
        double reward = 0.0;
        for (const auto& part : partials) {
            const StateId n = mdp_.ordinal(FactoredState{part.values});
            acc[n] += part.p;
            reward += part.p * mdp_.reward(s, part.first_action, n);
        }
        SparseRow row(acc.begin(), acc.end());
        auto [pos, inserted] = cache_.emplace(key, std::make_pair(std::move(row), reward));
        return pos->second;
    }

    const FlatMdp& mdp_;
    const std::vector<const MarkovOption*>& members_;
    std::unordered_map<int64_t, std::pair<SparseRow, double>> cache_;
};

// Builds multi-option start models. T2 recurses over first-termination
// events: at each step, every nonempty terminating member subset hands off to
// the remainder process (memoized per subset and intermediate state), whose
// members keep running with the finished members' variables frozen.
class MultiModelBuilder {
public:
    MultiModelBuilder(const FlatMdp& mdp, const MultiOption& mo, int k_max, bool with_steps)
        : mdp_(mdp),
          mo_(mo),
          k_max_(k_max),
          with_steps_(with_steps),
          gamma_(mdp.discount()),
          joint_(mdp, mo.members),
          memo_(1u << mo.members.size()) {
        if (k_max < 1) throw std::invalid_argument("multi_option_model: k_max < 1");
        for (size_t i = 0; i < mo_.members.size(); ++i)
            singles_.emplace_back(mdp_, *mo_.members[i]);
    }

    StartModel build(StateId start) {
        const uint32_t full = (1u << mo_.members.size()) - 1;
        return sweep(full, start, mo_.rule);
    }

private:
    const StartModel& remainder(uint32_t mask, StateId start) {
        auto& memo = memo_[mask];
        auto it = memo.find(start);
        if (it != memo.end()) return it->second;
        StartModel m;
        if (std::popcount(mask) == 1) {
            const int i = std::countr_zero(mask);
            m = option_start_model(mdp_, *mo_.members[i], singles_[i], start, k_max_, gamma_,
                                   with_steps_);
        } else {
            // Remainder processes always run under T2: members terminate
            // individually and freeze.
            m = sweep(mask, start, TerminationRule::T2);
        }
        return memo.emplace(start, std::move(m)).first->second;
    }

    StartModel sweep(uint32_t mask, StateId start, TerminationRule rule) {
        StartModel model;
        std::map<StateId, double> kernel_acc;
        std::map<std::pair<int, StateId>, double> step_acc;
        std::map<StateId, double> alive{{start, 1.0}};
        std::vector<int> active;
        for (size_t i = 0; i < mo_.members.size(); ++i)
            if (mask & (1u << i)) active.push_back(static_cast<int>(i));

        double gamma_km1 = 1.0;
        for (int k = 1; k <= k_max_ && !alive.empty(); ++k) {
            std::map<StateId, double> dist;
            double step_reward = 0.0;
            for (const auto& [sj, w] : alive) {
                step_reward += w * joint_.expected_reward(mask, sj);
                for (const auto& [s2, q] : joint_.row(mask, sj)) dist[s2] += w * q;
            }
            model.reward += gamma_km1 * step_reward;
            const double gamma_k = gamma_km1 * gamma_;

            std::map<StateId, double> next_alive;
            std::vector<double> beta(active.size());
            for (const auto& [s2, w2] : dist) {
                double survive = 1.0;
                for (size_t i = 0; i < active.size(); ++i) {
                    beta[i] = mo_.members[active[i]]->termination(s2);
                    survive *= 1.0 - beta[i];
                }
                if (rule == TerminationRule::T1) {
                    const double p = w2 * (1.0 - survive);
                    if (p > 0.0) {
                        kernel_acc[s2] += gamma_k * p;
                        if (with_steps_) step_acc[{k, s2}] += p;
                    }
                } else {
                    // Every nonempty terminating subset B of the active set.
                    const uint32_t n_sub = 1u << active.size();
                    for (uint32_t b = 1; b < n_sub; ++b) {
                        double wb = 1.0;
                        uint32_t rem_mask = 0;
                        for (size_t i = 0; i < active.size(); ++i) {
                            if (b & (1u << i)) {
                                wb *= beta[i];
                            } else {
                                wb *= 1.0 - beta[i];
                                rem_mask |= 1u << active[i];
                            }
                        }
                        if (wb == 0.0) continue;
                        const double w_event = w2 * wb;
                        if (rem_mask == 0) {
                            kernel_acc[s2] += gamma_k * w_event;
                            if (with_steps_) step_acc[{k, s2}] += w_event;
                        } else {
                            const StartModel& rem = remainder(rem_mask, s2);
                            model.reward += w_event * gamma_k * rem.reward;
                            for (const auto& [s3, kv] : rem.discounted_kernel)
                                kernel_acc[s3] += w_event * gamma_k * kv;
                            model.residual += w_event * rem.residual;
                            if (with_steps_) {
                                for (const auto& e : rem.steps) {
                                    if (k + e.k <= k_max_)
                                        step_acc[{k + e.k, e.next}] += w_event * e.p;
                                    else
                                        model.residual += w_event * e.p;
                                }
                            }
                        }
                    }
                }
                if (survive > 0.0) next_alive[s2] = w2 * survive;
            }
            alive = std::move(next_alive);
            gamma_km1 = gamma_k;
        }
        for (const auto& [sj, w] : alive) model.residual += w;
        model.discounted_kernel.assign(kernel_acc.begin(), kernel_acc.end());
        if (with_steps_) {
            model.steps.reserve(step_acc.size());
            for (const auto& [ks, p] : step_acc) model.steps.push_back({ks.first, ks.second, p});
        }
        return model;
    }

    const FlatMdp& mdp_;
    const MultiOption& mo_;
    int k_max_;
    bool with_steps_;
    double gamma_;
    JointKernel joint_;
    std::vector<InducedKernel> singles_;
    std::vector<std::unordered_map<StateId, StartModel>> memo_;
};

}  // namespace

double single_step_xi(const FlatMdp& mdp, const MultiOption& mo, StateId s, StateId next) {
    JointKernel joint(mdp, mo.members);
    const uint32_t full = (1u << mo.members.size()) - 1;
    for (const auto& [n, p] : joint.row(full, s))
        if (n == next) return p;
    return 0.0;
}

double k_step_xi(const FlatMdp& mdp, const MultiOption& mo, StateId s, StateId next, int k) {
    if (k < 1) throw std::invalid_argument("k_step_xi: k < 1");
    JointKernel joint(mdp, mo.members);
    const uint32_t full = (1u << mo.members.size()) - 1;
    std::map<StateId, double> alive{{s, 1.0}};
    std::map<StateId, double> dist;
    for (int step = 1; step <= k; ++step) {
        dist.clear();
        for (const auto& [sj, w] : alive) {
            for (const auto& [s2, q] : joint.row(full, sj)) dist[s2] += w * q;
        }
        if (step == k) break;
        alive.clear();
        for (const auto& [s2, w2] : dist) {
            double survive = 1.0;
            for (const auto* m : mo.members) survive *= 1.0 - m->termination(s2);
            if (w2 * survive > 0.0) alive[s2] = w2 * survive;
        }
    }
    auto it = dist.find(next);
    return it == dist.end() ? 0.0 : it->second;
}

static double p_multi(const FlatMdp& mdp, const MultiOption& mo, StateId s, StateId next, int k,
                      TerminationRule rule) {
    MultiOption query = mo;
    query.rule = rule;
    MultiModelBuilder builder(mdp, query, std::max(k, 1), /*with_steps=*/true);
    const StartModel model = builder.build(s);
    double p = 0.0;
    for (const auto& e : model.steps)
        if (e.k == k && e.next == next) p += e.p;
    return p;
}

double p_multi_t1(const FlatMdp& mdp, const MultiOption& mo, StateId s, StateId next, int k) {
    if (k < 1) throw std::invalid_argument("p_multi_t1: k < 1");
    return p_multi(mdp, mo, s, next, k, TerminationRule::T1);
}

double p_multi_t2(const FlatMdp& mdp, const MultiOption& mo, StateId s, StateId next, int k) {
    if (k < 1) throw std::invalid_argument("p_multi_t2: k < 1");
    return p_multi(mdp, mo, s, next, k, TerminationRule::T2);
}

MultiOptionModel multi_option_model(const FlatMdp& mdp, const MultiOption& mo, int k_max,
                                    double tol, const std::vector<StateId>& starts,
                                    bool with_steps, ExecMode mode) {
    MultiOptionModel model;
    model.rule = mo.rule;
    model.k_max = k_max;
    model.tol = tol;
    model.has_steps = with_steps;
    std::vector<StartModel> per_start(starts.size());
#ifdef _OPENMP
    if (mode == ExecMode::Parallel) {
#pragma omp parallel
        {
            MultiModelBuilder builder(mdp, mo, k_max, with_steps);
#pragma omp for schedule(dynamic, 8)
            for (int64_t i = 0; i < static_cast<int64_t>(starts.size()); ++i)
                per_start[i] = builder.build(starts[i]);
        }
    } else
#else
    (void)mode;
#endif
    {
        MultiModelBuilder builder(mdp, mo, k_max, with_steps);
        for (size_t i = 0; i < starts.size(); ++i) per_start[i] = builder.build(starts[i]);
    }
    model.starts.reserve(starts.size());
    for (size_t i = 0; i < starts.size(); ++i)
        model.starts.emplace(starts[i], std::move(per_start[i]));
    return model;
}

MultiOptionModel multi_option_model(const FlatMdp& mdp, const MultiOption& mo, int k_max,
                                    double tol, ExecMode mode) {
    return multi_option_model(mdp, mo, k_max, tol, initiable_states(mdp, mo), false, mode);
}

std::string dump_model(const MultiOption& mo, const MultiOptionModel& model) {
    std::ostringstream out;
    out << "# multi-option " << mo.name << " rule " << to_string(model.rule) << "\n";
    std::vector<StateId> starts;
    starts.reserve(model.starts.size());
    for (const auto& [s, m] : model.starts) starts.push_back(s);
    std::sort(starts.begin(), starts.end());
    for (StateId s : starts) {
        const StartModel& m = model.starts.at(s);
        std::vector<StepEntry> steps = m.steps;
        std::sort(steps.begin(), steps.end(), [](const StepEntry& a, const StepEntry& b) {
            return std::tie(a.next, a.k) < std::tie(b.next, b.k);
        });
        for (const auto& e : steps) {
            out << s << " " << e.next << " " << e.k << " ";
            char buf[32];
            snprintf(buf, sizeof(buf), "%.17g", e.p);
            out << buf << "\n";
        }
    }
    return out.str();
}

}  // namespace copt
