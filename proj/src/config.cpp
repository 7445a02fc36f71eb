#include "copt/config.hpp"

#include <fstream>
#include <sstream>

namespace copt {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double x = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-numeric value '" + value + "'");
    }
}

int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const int64_t x = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-integer value '" + value + "'");
    }
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "framework")
        framework = value;
    else if (key == "rule")
        rule = value;
    else if (key == "gamma")
        gamma = parse_real(key, value);
    else if (key == "alpha")
        alpha = parse_real(key, value);
    else if (key == "epsilon")
        epsilon = parse_real(key, value);
    else if (key == "episodes")
        episodes = parse_int(key, value);
    else if (key == "trials")
        trials = static_cast<int>(parse_int(key, value));
    else if (key == "seed")
        seed = static_cast<uint64_t>(parse_int(key, value));
    else if (key == "k_max")
        k_max = static_cast<int>(parse_int(key, value));
    else if (key == "tol")
        tol = parse_real(key, value);
    else if (key == "layout_path")
        layout_path = value;
    else if (key == "out_path")
        out_path = value;
    else
        throw ConfigError("config: unknown key '" + key + "'");
}

void ExperimentConfig::validate() const {
    if (framework != "sequential" && framework != "concurrent")
        throw ConfigError("config: key 'framework' must be sequential or concurrent");
    if (rule != "t1" && rule != "t2")
        throw ConfigError("config: key 'rule' must be t1 or t2");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ConfigError("config: key 'gamma' out of range (0,1]");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError("config: key 'alpha' out of range (0,1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw ConfigError("config: key 'epsilon' out of range [0,1]");
    if (episodes < 1) throw ConfigError("config: key 'episodes' must be positive");
    if (trials < 1) throw ConfigError("config: key 'trials' must be positive");
    if (k_max < 1) throw ConfigError("config: key 'k_max' must be positive");
    if (!(tol > 0.0)) throw ConfigError("config: key 'tol' must be positive");
}

TerminationRule ExperimentConfig::termination_rule() const {
    return rule == "t1" ? TerminationRule::T1 : TerminationRule::T2;
}

Framework ExperimentConfig::learning_framework() const {
    if (framework == "sequential") return Framework::Sequential;
    return rule == "t1" ? Framework::ConcurrentT1 : Framework::ConcurrentT2;
}

LearnerConfig ExperimentConfig::learner_config() const {
    LearnerConfig cfg;
    cfg.alpha = alpha;
    cfg.epsilon = epsilon;
    cfg.gamma = gamma;
    cfg.episodes = episodes;
    cfg.trials = trials;
    cfg.seed = seed;
    return cfg;
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key=value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

}  // namespace copt
