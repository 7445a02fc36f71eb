#pragma once

#include <cstdint>
#include <vector>

#include "copt/environment.hpp"
#include "copt/parallel.hpp"

namespace copt {

enum class Framework { Sequential, ConcurrentT1, ConcurrentT2 };

struct LearnerConfig {
    double alpha = 0.25;
    double epsilon = 0.1;
    double gamma = 0.9;
    int64_t episodes = 20'000;
    int trials = 20;
    uint64_t seed = 1;
    int64_t episode_step_cap = 100'000;

    void validate() const;
};

// Per-trial episode lengths (primitive steps until success) and the running
// median: entry n is the median of episodes 1..n within the trial. Episodes
// that hit the step cap are recorded at the cap and counted.
struct LearningCurve {
    std::vector<std::vector<int64_t>> steps;           // [trial][episode]
    std::vector<std::vector<double>> running_median_;  // [trial][episode]
    int64_t capped_episodes = 0;
};

// Dense tabular action-value function over (state, action id).
struct QTable {
    int64_t num_states = 0;
    int num_actions = 0;
    std::vector<double> q;

    QTable() = default;
    QTable(int64_t states, int actions)
        : num_states(states), num_actions(actions), q(states * actions, 0.0) {}

    double& at(StateId s, int a) { return q[static_cast<int64_t>(s) * num_actions + a]; }
    double at(StateId s, int a) const { return q[static_cast<int64_t>(s) * num_actions + a]; }
};

// SMDP Q-learning backup after a k-step decision epoch:
//   Q(s,o) += alpha * (r + gamma^k * max_{o' available at s'} Q(s',o') - Q(s,o))
// Terminal next states bootstrap with 0.
void smdp_q_update(QTable& q, StateId s, int action, double reward, StateId next, int k,
                   const std::vector<int>& available_next, bool next_terminal, double alpha,
                   double gamma);

// Epsilon-greedy over the available actions; greedy ties break to the lowest
// action id.
int select_epsilon_greedy(const QTable& q, StateId s, const std::vector<int>& available,
                          double epsilon, RngStream& rng);

struct TrainingResult {
    LearningCurve curve;
    std::vector<QTable> q_tables;  // one per trial
};

// Runs `trials` independent Q-learning runs on the environment, each with
// its own random stream (seed, trial index). Trials are independent and may
// run in parallel.
TrainingResult run_training(const SmdpEnvironment& env, const LearnerConfig& config,
                            ExecMode mode = ExecMode::Serial);

// Running median: element n is the median of elements 0..n; even prefixes
// use the mean of the two middle order statistics.
std::vector<double> running_median(const std::vector<int64_t>& lengths);

// CSV emission: header `trial,episode,steps,running_median`, one row per
// (trial, episode), LF line endings, no quoting. Byte-identical for a fixed
// seed and config.
std::string learning_csv(const LearningCurve& curve);

}  // namespace copt
