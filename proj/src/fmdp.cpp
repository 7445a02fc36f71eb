#include "copt/fmdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace copt {

FlatMdp::FlatMdp(std::vector<StateVariable> variables,
                 std::vector<std::string> actions,
                 double discount)
    : variables_(std::move(variables)),
      actions_(std::move(actions)),
      discount_(discount) {
    if (variables_.empty()) throw std::invalid_argument("FlatMdp: no state variables");
    for (const auto& v : variables_) {
        if (v.domain_size < 1) throw std::invalid_argument("FlatMdp: domain_size < 1 for " + v.name);
    }
    for (size_t i = 0; i < variables_.size(); ++i) {
        for (size_t j = i + 1; j < variables_.size(); ++j) {
            if (variables_[i].name == variables_[j].name)
                throw std::invalid_argument("FlatMdp: duplicate variable name " + variables_[i].name);
        }
    }
    if (!(discount_ > 0.0 && discount_ <= 1.0))
        throw std::invalid_argument("FlatMdp: discount must be in (0,1]");

    // Lexicographic strides: last variable varies fastest.
    strides_.assign(variables_.size(), 1);
    num_states_ = 1;
    for (int i = static_cast<int>(variables_.size()) - 1; i >= 0; --i) {
        strides_[i] = num_states_;
        num_states_ *= variables_[i].domain_size;
    }
    action_scopes_.resize(actions_.size());
    transition_.assign(actions_.size(), std::vector<SparseRow>(num_states_));
}

StateId FlatMdp::ordinal(const FactoredState& s) const {
    if (s.values.size() != variables_.size())
        throw std::invalid_argument("ordinal: value count mismatch");
    int64_t idx = 0;
    for (size_t i = 0; i < s.values.size(); ++i) {
        if (s.values[i] < 0 || s.values[i] >= variables_[i].domain_size)
            throw std::out_of_range("ordinal: value out of domain for " + variables_[i].name);
        idx += s.values[i] * strides_[i];
    }
    return static_cast<StateId>(idx);
}

FactoredState FlatMdp::state(StateId ordinal) const {
    if (ordinal < 0 || ordinal >= num_states_) throw std::out_of_range("state: bad ordinal");
    FactoredState s;
    s.values.resize(variables_.size());
    int64_t rem = ordinal;
    for (size_t i = 0; i < variables_.size(); ++i) {
        s.values[i] = static_cast<int>(rem / strides_[i]);
        rem %= strides_[i];
    }
    return s;
}

int FlatMdp::variable_index(const std::string& name) const {
    for (size_t i = 0; i < variables_.size(); ++i)
        if (variables_[i].name == name) return static_cast<int>(i);
    throw std::invalid_argument("unknown state variable: " + name);
}

int FlatMdp::action_index(const std::string& name) const {
    for (size_t i = 0; i < actions_.size(); ++i)
        if (actions_[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("unknown action: " + name);
}

void FlatMdp::set_action_scope(int action, std::vector<int> variable_indices) {
    action_scopes_.at(action) = std::move(variable_indices);
}

void FlatMdp::set_transition(StateId s, int action, SparseRow row) {
    std::sort(row.begin(), row.end());
    transition_.at(action).at(s) = std::move(row);
}

void FlatMdp::set_reward(std::function<double(StateId, int, StateId)> reward) {
    reward_ = std::move(reward);
}

void FlatMdp::set_discount(double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("discount must be in (0,1]");
    discount_ = gamma;
}

const SparseRow& FlatMdp::transition(StateId s, int action) const {
    return transition_.at(action).at(s);
}

const std::vector<int>& FlatMdp::action_scope(int action) const {
    return action_scopes_.at(action);
}

double FlatMdp::reward(StateId s, int action, StateId next) const {
    return reward_(s, action, next);
}

MdpDiagnostics FlatMdp::validate() const {
    MdpDiagnostics diag;
    for (int a = 0; a < num_actions(); ++a) {
        for (StateId s = 0; s < num_states_; ++s) {
            const SparseRow& row = transition_[a][s];
            if (row.empty()) {
                diag.violations.push_back({s, a, "empty transition row"});
                continue;
            }
            double sum = 0.0;
            for (const auto& [next, p] : row) {
                if (p < 0.0 || p > 1.0) {
                    diag.violations.push_back({s, a, "probability out of [0,1]"});
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                diag.violations.push_back({s, a, "row sums to " + std::to_string(sum)});
            }
        }
    }
    return diag;
}

MdpDiagnostics FlatMdp::validate_scopes() const {
    MdpDiagnostics diag;
    std::vector<bool> in_scope(variables_.size());
    for (int a = 0; a < num_actions(); ++a) {
        std::fill(in_scope.begin(), in_scope.end(), false);
        for (int v : action_scopes_[a]) in_scope.at(v) = true;
        for (StateId s = 0; s < num_states_; ++s) {
            const FactoredState fs = state(s);
            for (const auto& [next, p] : transition_[a][s]) {
                if (p == 0.0) continue;
                const FactoredState fn = state(next);
                for (size_t v = 0; v < variables_.size(); ++v) {
                    if (!in_scope[v] && fn.values[v] != fs.values[v]) {
                        diag.violations.push_back(
                            {s, a, "row changes out-of-scope variable " + variables_[v].name});
                    }
                }
            }
        }
    }
    return diag;
}

std::vector<FactoredState> enumerate_states(const FlatMdp& mdp, int64_t cap) {
    if (mdp.num_states() > cap)
        throw std::overflow_error("enumerate_states: state count exceeds tabular cap");
    std::vector<FactoredState> out;
    out.reserve(mdp.num_states());
    for (StateId s = 0; s < mdp.num_states(); ++s) out.push_back(mdp.state(s));
    return out;
}

std::vector<int> project(const FactoredState& s, const std::vector<int>& var_indices) {
    std::vector<int> out;
    out.reserve(var_indices.size());
    for (int v : var_indices) {
        if (v < 0 || v >= static_cast<int>(s.values.size()))
            throw std::invalid_argument("project: unknown variable index");
        out.push_back(s.values[v]);
    }
    return out;
}

FactoredState compose(int num_variables,
                      const std::vector<std::pair<std::vector<int>, std::vector<int>>>& parts) {
    FactoredState s;
    s.values.assign(num_variables, -1);
    for (const auto& [vars, vals] : parts) {
        if (vars.size() != vals.size())
            throw std::invalid_argument("compose: part length mismatch");
        for (size_t i = 0; i < vars.size(); ++i) {
            int v = vars[i];
            if (v < 0 || v >= num_variables)
                throw std::invalid_argument("compose: unknown variable index");
            if (s.values[v] != -1)
                throw std::invalid_argument("compose: overlapping variable subsets");
            s.values[v] = vals[i];
        }
    }
    for (int v = 0; v < num_variables; ++v) {
        if (s.values[v] == -1)
            throw std::invalid_argument("compose: parts do not cover all variables");
    }
    return s;
}

}  // namespace copt
