#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace asrse3 {

/// One weighted result of taking an action: successor state, reward,
/// termination flag and the discount applied on this transition.
/// Per-transition discounts let the augmented construction mix
/// undiscounted intermediate hops (discount 1) with discounted final hops.
struct Outcome {
    int next = 0;
    double prob = 1.0;
    double reward = 0.0;
    bool done = false;
    double discount = 1.0;
};

/**
 * Finite MDP whose action set is a Cartesian product A1 x ... x Ak.
 *
 * The transition function is total: every (state, action tuple) pair has
 * an outcome distribution, including infeasible pairs, which are flagged
 * through an explicit feasibility mask rather than removed. Action tuples
 * are indexed in lexicographic (row-major) order, first factor most
 * significant, so the flat index order matches lowest-index tie-breaking
 * per level.
 */
class FactoredMdp {
public:
    FactoredMdp() = default;

    FactoredMdp(int num_states, std::vector<int> action_dims, double gamma, int initial_state = 0)
        : num_states_(num_states), action_dims_(std::move(action_dims)), gamma_(gamma),
          initial_state_(initial_state) {
        if (num_states_ <= 0) throw std::invalid_argument("FactoredMdp: need at least one state");
        if (action_dims_.empty()) throw std::invalid_argument("FactoredMdp: need at least one action factor");
        for (int d : action_dims_)
            if (d <= 0) throw std::invalid_argument("FactoredMdp: every action factor must be non-empty");
        if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw std::invalid_argument("FactoredMdp: gamma must be in (0,1]");
        if (initial_state_ < 0 || initial_state_ >= num_states_)
            throw std::invalid_argument("FactoredMdp: initial state out of range");
        num_tuples_ = 1;
        for (int d : action_dims_) {
            num_tuples_ *= d;
            if (num_tuples_ > (1LL << 40)) throw std::invalid_argument("FactoredMdp: action space too large");
        }
        table_.resize(static_cast<std::size_t>(num_states_) * num_tuples_);
        feasible_.assign(static_cast<std::size_t>(num_states_) * num_tuples_, 1);
    }

    int num_states() const { return num_states_; }
    const std::vector<int>& action_dims() const { return action_dims_; }
    int num_levels() const { return static_cast<int>(action_dims_.size()); }
    long long num_tuples() const { return num_tuples_; }
    double gamma() const { return gamma_; }
    int initial_state() const { return initial_state_; }

    /// Flat index of an action tuple (lexicographic, first factor major).
    int tuple_index(std::span<const int> tuple) const {
        if (static_cast<int>(tuple.size()) != num_levels())
            throw std::invalid_argument("tuple_index: wrong arity");
        long long idx = 0;
        for (std::size_t i = 0; i < tuple.size(); ++i) {
            if (tuple[i] < 0 || tuple[i] >= action_dims_[i])
                throw std::invalid_argument("tuple_index: component out of range");
            idx = idx * action_dims_[i] + tuple[i];
        }
        return static_cast<int>(idx);
    }

    std::vector<int> tuple_of(int flat) const {
        std::vector<int> t(action_dims_.size());
        for (int i = num_levels() - 1; i >= 0; --i) {
            t[i] = flat % action_dims_[i];
            flat /= action_dims_[i];
        }
        return t;
    }

    void add_outcome(int s, int flat_action, Outcome o) {
        check_sa(s, flat_action);
        if (o.next < 0 || o.next >= num_states_) throw std::invalid_argument("add_outcome: next state out of range");
        if (!(o.prob > 0.0)) throw std::invalid_argument("add_outcome: probability must be positive");
        table_[cell(s, flat_action)].push_back(o);
    }

    /// Installs a single deterministic outcome discounted by gamma.
    void set_deterministic(int s, int flat_action, int next, double reward, bool done = false) {
        check_sa(s, flat_action);
        table_[cell(s, flat_action)] = {Outcome{next, 1.0, reward, done, gamma_}};
    }

    void set_deterministic(int s, std::span<const int> tuple, int next, double reward, bool done = false) {
        set_deterministic(s, tuple_index(tuple), next, reward, done);
    }

    void clear_outcomes(int s, int flat_action) {
        check_sa(s, flat_action);
        table_[cell(s, flat_action)].clear();
    }

    const std::vector<Outcome>& outcomes(int s, int flat_action) const {
        check_sa(s, flat_action);
        return table_[cell(s, flat_action)];
    }

    void set_feasible(int s, int flat_action, bool f) {
        check_sa(s, flat_action);
        feasible_[cell(s, flat_action)] = f ? 1 : 0;
    }

    bool feasible(int s, int flat_action) const {
        check_sa(s, flat_action);
        return feasible_[cell(s, flat_action)] != 0;
    }

    /// Checks totality, probability normalization and that every state
    /// keeps at least one feasible action. Throws on the first violation.
    void validate() const {
        for (int s = 0; s < num_states_; ++s) {
            bool any_feasible = false;
            for (long long a = 0; a < num_tuples_; ++a) {
                const auto& outs = table_[cell(s, static_cast<int>(a))];
                if (outs.empty())
                    throw std::invalid_argument("FactoredMdp: transition not total at state " + std::to_string(s) +
                                                " action " + std::to_string(a));
                double p = 0.0;
                for (const Outcome& o : outs) p += o.prob;
                if (std::abs(p - 1.0) > 1e-9)
                    throw std::invalid_argument("FactoredMdp: outcome probabilities do not sum to 1 at state " +
                                                std::to_string(s) + " action " + std::to_string(a));
                any_feasible = any_feasible || feasible_[cell(s, static_cast<int>(a))] != 0;
            }
            if (!any_feasible)
                throw std::invalid_argument("FactoredMdp: state " + std::to_string(s) + " has no feasible action");
        }
    }

private:
    void check_sa(int s, int flat_action) const {
        if (s < 0 || s >= num_states_) throw std::invalid_argument("state index out of range");
        if (flat_action < 0 || flat_action >= num_tuples_) throw std::invalid_argument("action index out of range");
    }
    std::size_t cell(int s, int flat_action) const {
        return static_cast<std::size_t>(s) * num_tuples_ + flat_action;
    }

    int num_states_ = 0;
    std::vector<int> action_dims_;
    double gamma_ = 1.0;
    int initial_state_ = 0;
    long long num_tuples_ = 0;
    std::vector<std::vector<Outcome>> table_;
    std::vector<char> feasible_;
};

} // namespace asrse3
