#include "copt/learning.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace copt {

void LearnerConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("LearnerConfig: alpha must be in (0,1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("LearnerConfig: epsilon must be in [0,1]");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("LearnerConfig: gamma must be in (0,1]");
    if (episodes < 1) throw std::invalid_argument("LearnerConfig: episodes < 1");
    if (trials < 1) throw std::invalid_argument("LearnerConfig: trials < 1");
    if (episode_step_cap < 1) throw std::invalid_argument("LearnerConfig: step cap < 1");
}

void smdp_q_update(QTable& q, StateId s, int action, double reward, StateId next, int k,
                   const std::vector<int>& available_next, bool next_terminal, double alpha,
                   double gamma) {
    if (k < 1) throw std::invalid_argument("smdp_q_update: duration < 1");
    double best_next = 0.0;
    if (!next_terminal) {
        if (available_next.empty())
            throw std::invalid_argument("smdp_q_update: no available action at non-terminal state");
        best_next = q.at(next, available_next.front());
        for (int a : available_next) best_next = std::max(best_next, q.at(next, a));
    }
    const double target = reward + std::pow(gamma, k) * best_next;
    q.at(s, action) += alpha * (target - q.at(s, action));
}

int select_epsilon_greedy(const QTable& q, StateId s, const std::vector<int>& available,
                          double epsilon, RngStream& rng) {
    if (available.empty())
        throw std::invalid_argument("select_epsilon_greedy: empty available set");
    if (epsilon > 0.0 && rng.uniform() < epsilon) {
        const auto idx = static_cast<size_t>(rng.uniform() * available.size());
        return available[std::min(idx, available.size() - 1)];
    }
    int best = available.front();
    double best_q = q.at(s, best);
    for (int a : available) {
        const double qa = q.at(s, a);
        if (qa > best_q) {
            best_q = qa;
            best = a;
        }
    }
    return best;
}

std::vector<double> running_median(const std::vector<int64_t>& lengths) {
    if (lengths.empty()) throw std::invalid_argument("running_median: empty input");
    // Two-heap streaming median: lower half (max-heap) and upper half (min-heap).
    std::priority_queue<int64_t> lower;
    std::priority_queue<int64_t, std::vector<int64_t>, std::greater<>> upper;
    std::vector<double> out;
    out.reserve(lengths.size());
    for (int64_t x : lengths) {
        if (lower.empty() || x <= lower.top())
            lower.push(x);
        else
            upper.push(x);
        if (lower.size() > upper.size() + 1) {
            upper.push(lower.top());
            lower.pop();
        } else if (upper.size() > lower.size()) {
            lower.push(upper.top());
            upper.pop();
        }
        if (lower.size() == upper.size())
            out.push_back(0.5 * (static_cast<double>(lower.top()) +
                                 static_cast<double>(upper.top())));
        else
            out.push_back(static_cast<double>(lower.top()));
    }
    return out;
}

std::string learning_csv(const LearningCurve& curve) {
    std::string out = "trial,episode,steps,running_median\n";
    char buf[96];
    for (size_t trial = 0; trial < curve.steps.size(); ++trial) {
        const auto& lengths = curve.steps[trial];
        const auto& medians = curve.running_median_[trial];
        for (size_t ep = 0; ep < lengths.size(); ++ep) {
            snprintf(buf, sizeof(buf), "%zu,%zu,%lld,%.1f\n", trial, ep + 1,
                     static_cast<long long>(lengths[ep]), medians[ep]);
            out += buf;
        }
    }
    return out;
}

TrainingResult run_training(const SmdpEnvironment& env, const LearnerConfig& config,
                            ExecMode mode) {
    config.validate();
    TrainingResult result;
    result.curve.steps.assign(config.trials, {});
    result.curve.running_median_.assign(config.trials, {});
    result.q_tables.assign(config.trials, QTable());
    std::vector<int64_t> capped(config.trials, 0);

    parallel_for(config.trials, mode, [&](int64_t trial) {
        RngStream rng(config.seed, static_cast<uint64_t>(trial));
        QTable q(env.num_states(), env.num_actions());
        auto& lengths = result.curve.steps[trial];
        lengths.reserve(config.episodes);

        for (int64_t episode = 0; episode < config.episodes; ++episode) {
            StateId s = env.initial_state();
            int64_t steps = 0;
            while (!env.is_terminal(s) && steps < config.episode_step_cap) {
                const auto& avail = env.available(s);
                const int a = select_epsilon_greedy(q, s, avail, config.epsilon, rng);
                const DecisionOutcome out = env.execute(s, a, rng);
                const bool terminal = env.is_terminal(out.next);
                smdp_q_update(q, s, a, out.discounted_reward, out.next, out.duration,
                              terminal ? std::vector<int>{} : env.available(out.next), terminal,
                              config.alpha, config.gamma);
                steps += out.duration;
                s = out.next;
            }
            if (!env.is_terminal(s)) {
                steps = config.episode_step_cap;
                ++capped[trial];
            }
            lengths.push_back(steps);
        }
        result.curve.running_median_[trial] = running_median(lengths);
        result.q_tables[trial] = std::move(q);
    });

    for (int64_t c : capped) result.curve.capped_episodes += c;
    return result;
}

}  // namespace copt
