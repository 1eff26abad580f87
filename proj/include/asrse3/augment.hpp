#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "asrse3/mdp.hpp"

namespace asrse3 {

/**
 * Enumeration of augmented states (base state, prefix of partial
 * actions), level by level: level p holds all (base, a1..ap)
 * combinations, base-major then prefix-lexicographic, so level-0
 * indices coincide with base state indices.
 */
class AugmentedIndex {
public:
    AugmentedIndex() = default;

    AugmentedIndex(int num_base_states, std::vector<int> dims)
        : num_base_(num_base_states), dims_(std::move(dims)) {
        if (num_base_ <= 0 || dims_.empty()) throw std::invalid_argument("AugmentedIndex: degenerate shape");
        const int k = static_cast<int>(dims_.size());
        level_offset_.resize(k + 1);
        long long count = num_base_;
        level_offset_[0] = 0;
        for (int p = 0; p < k; ++p) {
            level_offset_[p + 1] = level_offset_[p] + count;
            count *= dims_[p];
        }
        max_actions_ = *std::max_element(dims_.begin(), dims_.end());
    }

    int num_levels() const { return static_cast<int>(dims_.size()); }
    int num_base_states() const { return num_base_; }
    int num_aug_states() const { return static_cast<int>(level_offset_.back()); }
    int level_actions(int level) const { return dims_[level]; }
    int max_actions() const { return max_actions_; }
    const std::vector<int>& dims() const { return dims_; }

    /// Index of the augmented state (base, prefix). Prefix length must be
    /// strictly below the number of levels.
    int state_index(int base, std::span<const int> prefix) const {
        const int p = static_cast<int>(prefix.size());
        if (p >= num_levels()) throw std::invalid_argument("state_index: prefix too long");
        if (base < 0 || base >= num_base_) throw std::invalid_argument("state_index: base state out of range");
        long long idx = base;
        for (int i = 0; i < p; ++i) {
            if (prefix[i] < 0 || prefix[i] >= dims_[i])
                throw std::invalid_argument("state_index: prefix component out of range");
            idx = idx * dims_[i] + prefix[i];
        }
        return static_cast<int>(level_offset_[p] + idx);
    }

    /// Prefix length of an augmented state.
    int level_of(int aug_state) const {
        for (int p = num_levels() - 1; p >= 0; --p)
            if (aug_state >= level_offset_[p]) return p;
        throw std::invalid_argument("level_of: index out of range");
    }

    /// Splits an augmented state back into (base, prefix).
    std::pair<int, std::vector<int>> decompose(int aug_state) const {
        const int p = level_of(aug_state);
        long long idx = aug_state - level_offset_[p];
        std::vector<int> prefix(p);
        for (int i = p - 1; i >= 0; --i) {
            prefix[i] = static_cast<int>(idx % dims_[i]);
            idx /= dims_[i];
        }
        return {static_cast<int>(idx), std::move(prefix)};
    }

private:
    int num_base_ = 0;
    std::vector<int> dims_;
    std::vector<long long> level_offset_;
    int max_actions_ = 0;
};

/**
 * The augmented-state transform: trades the product action space of a
 * FactoredMdp for a union of per-factor action sets over an enlarged
 * state space. A state is a base state plus the prefix of already
 * chosen partial actions.
 *
 * The result is itself a FactoredMdp with a single action factor of
 * width max_i |Ai|; at a level-p state, actions >= |A_{p+1}| and
 * partial actions with no feasible completion are masked infeasible.
 * Hops between levels carry reward 0, discount 1 and never terminate;
 * the final partial action replays the source outcome distribution.
 */
class AugmentedMdp {
public:
    explicit AugmentedMdp(const FactoredMdp& source)
        : source_(source), index_(source.num_states(), source.action_dims()) {
        mdp_ = FactoredMdp(index_.num_aug_states(), {index_.max_actions()}, source.gamma(),
                           source.initial_state());
        build();
    }

    /// The augmented MDP itself, solvable by the same machinery as any
    /// other FactoredMdp.
    const FactoredMdp& mdp() const { return mdp_; }
    const FactoredMdp& source() const { return source_; }
    const AugmentedIndex& index() const { return index_; }

    int num_levels() const { return index_.num_levels(); }
    int num_aug_states() const { return index_.num_aug_states(); }
    int level_actions(int level) const { return index_.level_actions(level); }

    int state_index(int base, std::span<const int> prefix) const { return index_.state_index(base, prefix); }
    int level_of(int aug_state) const { return index_.level_of(aug_state); }
    std::pair<int, std::vector<int>> decompose(int aug_state) const { return index_.decompose(aug_state); }

private:
    void build() {
        const int k = num_levels();
        const auto& dims = source_.action_dims();
        const int max_actions = index_.max_actions();
        for (int sa = 0; sa < num_aug_states(); ++sa) {
            auto [base, prefix] = decompose(sa);
            const int p = static_cast<int>(prefix.size());
            bool any_feasible = false;
            for (int a = 0; a < max_actions; ++a) {
                if (a >= dims[p]) {
                    // padding action: masked self-loop keeps the table total
                    mdp_.add_outcome(sa, a, Outcome{sa, 1.0, 0.0, false, 1.0});
                    mdp_.set_feasible(sa, a, false);
                    continue;
                }
                if (p < k - 1) {
                    std::vector<int> next_prefix = prefix;
                    next_prefix.push_back(a);
                    mdp_.add_outcome(sa, a, Outcome{state_index(base, next_prefix), 1.0, 0.0, false, 1.0});
                } else {
                    std::vector<int> tuple = prefix;
                    tuple.push_back(a);
                    const int flat = source_.tuple_index(tuple);
                    for (const Outcome& o : source_.outcomes(base, flat))
                        mdp_.add_outcome(sa, a, o);
                }
                const bool f = prefix_feasible(base, prefix, a);
                any_feasible = any_feasible || f;
                mdp_.set_feasible(sa, a, f);
            }
            // A prefix with no feasible completion is unreachable under any
            // masked policy; keep its in-range actions open so the augmented
            // MDP stays well-formed.
            if (!any_feasible)
                for (int a = 0; a < dims[p]; ++a) mdp_.set_feasible(sa, a, true);
        }
    }

    /// A partial action is feasible iff some completion of it is feasible
    /// in the source MDP.
    bool prefix_feasible(int base, const std::vector<int>& prefix, int a) const {
        std::vector<int> partial = prefix;
        partial.push_back(a);
        return any_completion(base, partial, static_cast<int>(partial.size()));
    }

    bool any_completion(int base, std::vector<int>& partial, int depth) const {
        if (depth == num_levels()) return source_.feasible(base, source_.tuple_index(partial));
        partial.push_back(0);
        for (int a = 0; a < source_.action_dims()[depth]; ++a) {
            partial.back() = a;
            if (any_completion(base, partial, depth + 1)) {
                partial.pop_back();
                return true;
            }
        }
        partial.pop_back();
        return false;
    }

    FactoredMdp source_;
    AugmentedIndex index_;
    FactoredMdp mdp_;
};

/// Applies the augmented-state transform. Rejects degenerate inputs via
/// the FactoredMdp invariants (k = 0 or an empty factor cannot be
/// constructed in the first place); validates the source before building.
inline AugmentedMdp augment(const FactoredMdp& source) {
    source.validate();
    return AugmentedMdp(source);
}

} // namespace asrse3
