#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "copt/config.hpp"
#include "copt/executor.hpp"
#include "copt/learning.hpp"
#include "copt/planning.hpp"
#include "copt/rooms.hpp"

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_readable(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path + " for reading");
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

copt::RoomsDomain load_domain(const copt::ExperimentConfig& cfg) {
    copt::RoomsLayout layout;
    if (cfg.layout_path.empty()) {
        layout = copt::default_rooms_layout();
    } else {
        require_readable(cfg.layout_path);
        layout = copt::load_layout(cfg.layout_path);
    }
    return copt::build_rooms_domain(layout, cfg.gamma);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string part;
    while (std::getline(in, part, sep)) out.push_back(part);
    return out;
}

copt::StateId parse_state(const copt::RoomsDomain& domain, const std::string& spec) {
    const auto parts = split(spec, ',');
    if (parts.size() != 4)
        throw copt::ConfigError("state must be row,col,doors,key: " + spec);
    int v[4];
    for (int i = 0; i < 4; ++i) {
        try {
            size_t used = 0;
            v[i] = std::stoi(parts[i], &used);
            if (used != parts[i].size()) throw std::invalid_argument(parts[i]);
        } catch (const std::exception&) {
            throw copt::ConfigError("state component is not an integer: " + parts[i]);
        }
    }
    if (v[2] < 0 || v[2] > 15) throw copt::ConfigError("doors mask out of range [0,15]");
    if (v[3] < 0 || v[3] >= copt::kKeyStates)
        throw copt::ConfigError("key state out of range [0,10]");
    try {
        return domain.make_state(v[0], v[1], v[2], v[3]);
    } catch (const std::exception& e) {
        throw copt::ConfigError(std::string("bad state ") + spec + ": " + e.what());
    }
}

copt::MultiOption parse_multi_option(const copt::RoomsDomain& domain, const std::string& spec,
                                     copt::TerminationRule rule) {
    copt::MultiOption mo;
    mo.rule = rule;
    for (const auto& name : split(spec, ',')) {
        try {
            mo.members.push_back(&domain.option_by_name(name));
        } catch (const std::invalid_argument& e) {
            throw copt::ConfigError(e.what());
        }
        if (!mo.name.empty()) mo.name += '+';
        mo.name += name;
    }
    if (mo.members.empty()) throw copt::ConfigError("empty member list");
    for (size_t i = 0; i < mo.members.size(); ++i)
        for (size_t j = i + 1; j < mo.members.size(); ++j)
            if (!copt::check_coherent(*mo.members[i], *mo.members[j]))
                throw copt::ConfigError("members are not coherent: " + mo.members[i]->name +
                                        ", " + mo.members[j]->name);
    return mo;
}

int cmd_plan(const copt::ExperimentConfig& cfg, const std::string& dump_path) {
    const auto domain = load_domain(cfg);
    const auto plan = cfg.framework == "sequential"
                          ? copt::build_sequential_planning(domain, cfg.k_max, cfg.tol,
                                                            copt::ExecMode::Parallel)
                          : copt::build_concurrent_planning(domain, cfg.termination_rule(),
                                                            cfg.k_max, cfg.tol,
                                                            copt::ExecMode::Parallel);
    double truncation = 0.0;
    for (const auto& m : plan.models) truncation = std::max(truncation, m.max_residual());
    for (const auto& m : plan.option_models) truncation = std::max(truncation, m.max_residual());

    const auto result = copt::svi(plan.problem, 1e-8, 100'000, copt::ExecMode::Parallel);
    std::printf("framework=%s rule=%s gamma=%g\n", cfg.framework.c_str(), cfg.rule.c_str(),
                cfg.gamma);
    std::printf("iterations=%d\n", result.iterations);
    std::printf("bellman_residual=%.3e\n", result.residual);
    std::printf("max_truncation_residual=%.3e\n", truncation);
    std::printf("v_start=%.10f\n", result.v.values[domain.start_state]);
    if (!result.converged) {
        std::fprintf(stderr, "value iteration did not converge\n");
        return 3;
    }
    if (!dump_path.empty()) {
        std::string out;
        char buf[64];
        for (size_t s = 0; s < result.v.values.size(); ++s) {
            std::snprintf(buf, sizeof(buf), "%zu %.17g\n", s, result.v.values[s]);
            out += buf;
        }
        write_file(dump_path, out);
        std::printf("values written to %s\n", dump_path.c_str());
    }
    return 0;
}

int cmd_learn(const copt::ExperimentConfig& cfg) {
    const auto domain = load_domain(cfg);
    std::unique_ptr<copt::SmdpEnvironment> env;
    if (cfg.framework == "sequential")
        env = std::make_unique<copt::RoomsSequentialEnv>(domain);
    else
        env = std::make_unique<copt::RoomsConcurrentEnv>(domain, cfg.termination_rule());

    const auto result =
        copt::run_training(*env, cfg.learner_config(), copt::ExecMode::Parallel);
    write_file(cfg.out_path, copt::learning_csv(result.curve));

    double final_sum = 0.0;
    for (const auto& medians : result.curve.running_median_) final_sum += medians.back();
    std::printf("trials=%d episodes=%lld\n", cfg.trials,
                static_cast<long long>(cfg.episodes));
    std::printf("final_running_median_mean=%.2f\n",
                final_sum / static_cast<double>(cfg.trials));
    std::printf("capped_episodes=%lld\n",
                static_cast<long long>(result.curve.capped_episodes));
    std::printf("curve written to %s\n", cfg.out_path.c_str());
    return 0;
}

int cmd_verify(const copt::ExperimentConfig& cfg, const std::string& state_spec,
               const std::string& members_spec, int64_t rollouts) {
    const auto domain = load_domain(cfg);
    const auto s = parse_state(domain, state_spec);
    const auto mo = parse_multi_option(domain, members_spec, cfg.termination_rule());
    if (!copt::is_available(mo, s))
        throw copt::ConfigError("multi-option " + mo.name + " is not initiable at that state");

    const auto model = copt::multi_option_model(domain.mdp, mo, cfg.k_max, cfg.tol, {s},
                                                /*with_steps=*/true, copt::ExecMode::Parallel);
    copt::RngStream rng(cfg.seed, 0);
    const auto emp = copt::monte_carlo_model(domain.mdp, mo, s, rollouts, rng);
    const auto report = copt::verify_against_monte_carlo(model.starts.at(s), emp);

    std::printf("multi-option %s rule %s, %lld rollouts, %zu cells checked\n", mo.name.c_str(),
                copt::to_string(mo.rule).c_str(), static_cast<long long>(rollouts),
                report.cells.size());
    std::printf("%10s %5s %12s %12s %10s %8s\n", "next", "k", "analytic", "empirical", "stderr",
                "z");
    for (const auto& c : report.cells)
        std::printf("%10lld %5d %12.6f %12.6f %10.6f %8.2f\n", static_cast<long long>(c.next),
                    c.k, c.analytic, c.empirical, c.stderr_, c.z);
    std::printf("reward analytic=%.6f empirical=%.6f z=%.2f\n", report.reward_analytic,
                report.reward_empirical, report.reward_z);
    std::printf("truncation_residual=%.3e\n", model.starts.at(s).residual);
    std::printf("%s\n", report.pass ? "PASS" : "FAIL");
    return report.pass ? 0 : 5;
}

int cmd_model(const copt::ExperimentConfig& cfg, const std::string& state_spec,
              const std::string& members_spec, const std::string& out_path) {
    const auto domain = load_domain(cfg);
    const auto mo = parse_multi_option(domain, members_spec, cfg.termination_rule());
    copt::MultiOptionModel model;
    if (state_spec.empty()) {
        model = copt::multi_option_model(domain.mdp, mo, cfg.k_max, cfg.tol,
                                         copt::initiable_states(domain.mdp, mo),
                                         /*with_steps=*/true, copt::ExecMode::Parallel);
    } else {
        const auto s = parse_state(domain, state_spec);
        if (!copt::is_available(mo, s))
            throw copt::ConfigError("multi-option " + mo.name +
                                    " is not initiable at that state");
        model = copt::multi_option_model(domain.mdp, mo, cfg.k_max, cfg.tol, {s},
                                         /*with_steps=*/true, copt::ExecMode::Parallel);
    }
    const auto text = copt::dump_model(mo, model);
    if (out_path.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_file(out_path, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"planning, learning and model inspection for concurrent options"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "key=value configuration file");

    // One flag per configuration key; flags override the file.
    const std::vector<std::string> keys = {"framework", "rule",  "gamma", "alpha",
                                           "epsilon",   "episodes", "trials", "seed",
                                           "k_max",     "tol",   "layout_path", "out_path"};
    std::vector<std::string> values(keys.size());
    std::vector<CLI::Option*> opts(keys.size());
    for (size_t i = 0; i < keys.size(); ++i)
        opts[i] = app.add_option("--" + keys[i], values[i], "config key " + keys[i]);

    auto* plan = app.add_subcommand("plan", "value iteration on the analytic models");
    std::string dump_path;
    plan->add_option("--dump", dump_path, "write the value table (ordinal value per line)");

    auto* learn = app.add_subcommand("learn", "tabular SMDP Q-learning, CSV learning curve");

    auto* verify = app.add_subcommand("verify", "analytic model vs Monte-Carlo rollouts");
    std::string state_spec, members_spec;
    int64_t rollouts = 100'000;
    verify->add_option("--state", state_spec, "start state as row,col,doors,key")->required();
    verify->add_option("--members", members_spec, "comma-separated option names")->required();
    verify->add_option("--rollouts", rollouts, "Monte-Carlo sample count");

    auto* model = app.add_subcommand("model", "dump a multi-option termination model");
    std::string model_state, model_members, model_out;
    model->add_option("--state", model_state, "restrict to one start state (row,col,doors,key)");
    model->add_option("--members", model_members, "comma-separated option names")->required();
    model->add_option("--out", model_out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        copt::ExperimentConfig cfg;
        if (!config_path.empty()) {
            require_readable(config_path);
            cfg = copt::ExperimentConfig::from_file(config_path);
        }
        for (size_t i = 0; i < keys.size(); ++i)
            if (opts[i]->count() > 0) cfg.set(keys[i], values[i]);
        cfg.validate();
        if (rollouts < 1) throw copt::ConfigError("rollouts must be positive");

        if (plan->parsed()) return cmd_plan(cfg, dump_path);
        if (learn->parsed()) return cmd_learn(cfg);
        if (verify->parsed()) return cmd_verify(cfg, state_spec, members_spec, rollouts);
        if (model->parsed()) return cmd_model(cfg, model_state, model_members, model_out);
        return 2;
    } catch (const copt::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
