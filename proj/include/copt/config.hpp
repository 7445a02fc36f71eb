#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "copt/concurrent.hpp"
#include "copt/learning.hpp"

namespace copt {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value experiment configuration ('#' starts a comment). Unknown
// keys and out-of-range values are rejected with ConfigError.
struct ExperimentConfig {
    std::string framework = "concurrent";  // sequential | concurrent
    std::string rule = "t2";               // t1 | t2
    double gamma = 0.9;
    double alpha = 0.25;
    double epsilon = 0.1;
    int64_t episodes = 20'000;
    int trials = 20;
    uint64_t seed = 1;
    int k_max = 200;
    double tol = 1e-9;
    std::string layout_path;
    std::string out_path = "learning.csv";

    void set(const std::string& key, const std::string& value);
    void validate() const;

    TerminationRule termination_rule() const;
    Framework learning_framework() const;
    LearnerConfig learner_config() const;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_text(const std::string& text);
};

}  // namespace copt
