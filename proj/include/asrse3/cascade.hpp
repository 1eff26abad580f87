#pragma once

#include <concepts>
#include <span>
#include <stdexcept>
#include <vector>

#include "asrse3/augment.hpp"
#include "asrse3/replay.hpp"
#include "asrse3/solve.hpp"

namespace asrse3 {

/// Anything that exposes per-level Q rows conditioned on the prefix of
/// already chosen partial actions.
template <class C, class S>
concept QCascadeModel = requires(const C& c, const S& s, std::span<const int> prefix, int level) {
    { c.level_count() } -> std::convertible_to<int>;
    { c.level_size(level) } -> std::convertible_to<int>;
    { c.values(s, prefix, level) } -> std::convertible_to<std::vector<double>>;
};

/// Mask providers map (level, prefix) to a feasibility row; an empty row
/// means unmasked.
template <class M>
concept MaskProvider = requires(M m, int level, std::span<const int> prefix) {
    { m(level, prefix) } -> std::convertible_to<std::vector<char>>;
};

inline std::vector<char> no_mask(int, std::span<const int>) { return {}; }

/// Masked argmax with lowest-index tie-breaking. Masked entries never win;
/// an all-masked row is an error.
inline std::pair<int, double> masked_argmax(std::span<const double> row, std::span<const char> mask) {
    if (!mask.empty() && mask.size() != row.size()) throw std::invalid_argument("masked_argmax: width mismatch");
    int best = -1;
    double best_v = kNegInf;
    for (int i = 0; i < static_cast<int>(row.size()); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        if (best < 0 || row[i] > best_v) {
            best = i;
            best_v = row[i];
        }
    }
    if (best < 0) throw std::runtime_error("masked_argmax: no feasible action");
    return {best, best_v};
}

struct GreedyResult {
    std::vector<int> actions;       // one partial action per level
    std::vector<double> level_values; // max masked Q per level (the value trace)
};

/// Sequential greedy selection: level 1's argmax conditions level 2 and so
/// on. The value trace is exposed for logging and for n-step targets.
template <class S, class C, class M>
    requires QCascadeModel<C, S> && MaskProvider<M>
GreedyResult greedy_action(const C& cascade, const S& s, M&& mask_fn) {
    GreedyResult out;
    for (int level = 0; level < cascade.level_count(); ++level) {
        const std::vector<double> row = cascade.values(s, out.actions, level);
        const std::vector<char> mask = mask_fn(level, out.actions);
        const auto [a, v] = masked_argmax(row, mask);
        out.actions.push_back(a);
        out.level_values.push_back(v);
    }
    return out;
}

/**
 * n-step target shared by every level: bootstrap through the next base
 * state by walking the target cascade greedily across all levels of s'
 * and backing up the final level's masked maximum. Terminal records do
 * not bootstrap. The intermediate hops carry reward 0 and discount 1, so
 * only the base-transition discount appears.
 */
template <class S, class C, class M>
    requires QCascadeModel<C, S> && MaskProvider<M>
double n_step_target(const C& target_cascade, const Transition<S>& rec, double gamma, M&& mask_next) {
    if (rec.done) return rec.reward;
    const GreedyResult g = greedy_action(target_cascade, rec.next, mask_next);
    return rec.reward + gamma * g.level_values.back();
}

/**
 * 1-step targets, one per level: for level i < k the target is the masked
 * maximum of level i+1 at the recorded prefix (an undiscounted hop inside
 * the same base transition); the last level bootstraps through the next
 * base state's first level. Terminal handling applies to the last level
 * only, since earlier levels never leave the base transition.
 */
template <class S, class C, class Mc, class Mn>
    requires QCascadeModel<C, S> && MaskProvider<Mc> && MaskProvider<Mn>
std::vector<double> one_step_targets(const C& target_cascade, const Transition<S>& rec, double gamma,
                                     Mc&& mask_cur, Mn&& mask_next) {
    const int k = target_cascade.level_count();
    if (static_cast<int>(rec.actions.size()) != k)
        throw std::invalid_argument("one_step_targets: record arity mismatch");
    std::vector<double> y(k);
    for (int i = 0; i + 1 < k; ++i) {
        const std::span<const int> prefix(rec.actions.data(), i + 1);
        const std::vector<double> row = target_cascade.values(rec.state, prefix, i + 1);
        const std::vector<char> mask = mask_cur(i + 1, prefix);
        y[i] = masked_argmax(row, mask).second;
    }
    if (rec.done) {
        y[k - 1] = rec.reward;
    } else {
        const std::vector<double> row = target_cascade.values(rec.next, {}, 0);
        const std::vector<char> mask = mask_next(0, std::span<const int>{});
        y[k - 1] = rec.reward + gamma * masked_argmax(row, mask).second;
    }
    return y;
}

/**
 * Dense per-level Q rows over augmented (base, prefix) states, the value
 * backend for the synthetic-MDP oracles. `exact` copies the solved
 * augmented MDP's action values; `from_flat` max-marginalizes a flat Q
 * table, Qi(s, prefix, ai) = max over completions of Q(s, tuple).
 */
class TabularCascade {
public:
    TabularCascade(AugmentedIndex index, std::vector<std::vector<double>> rows)
        : index_(std::move(index)), rows_(std::move(rows)) {}

    static TabularCascade exact(const AugmentedMdp& aug, const Solution& sol) {
        const AugmentedIndex& idx = aug.index();
        std::vector<std::vector<double>> rows(idx.num_aug_states());
        const long long stride = aug.mdp().num_tuples();
        for (int i = 0; i < idx.num_aug_states(); ++i) {
            const int width = idx.level_actions(idx.level_of(i));
            rows[i].assign(width, 0.0);
            for (int a = 0; a < width; ++a) rows[i][a] = sol.q_at(i, a, stride);
        }
        return TabularCascade(idx, std::move(rows));
    }

    /// flat_q is row-major [state][flat tuple]; infeasible entries may be
    /// -inf and propagate through the marginal maxima.
    static TabularCascade from_flat(int num_states, const std::vector<int>& dims,
                                    std::span<const double> flat_q) {
        AugmentedIndex idx(num_states, dims);
        long long tuples = 1;
        for (int d : dims) tuples *= d;
        if (static_cast<long long>(flat_q.size()) != tuples * num_states)
            throw std::invalid_argument("TabularCascade: flat table size mismatch");

        std::vector<std::vector<double>> rows(idx.num_aug_states());
        for (int i = 0; i < idx.num_aug_states(); ++i) {
            const auto [base, prefix] = idx.decompose(i);
            const int level = static_cast<int>(prefix.size());
            rows[i].assign(dims[level], kNegInf);
            for (int a = 0; a < dims[level]; ++a) {
                std::vector<int> partial = prefix;
                partial.push_back(a);
                rows[i][a] = max_over_completions(flat_q, tuples, dims, base, partial);
            }
        }
        return TabularCascade(idx, std::move(rows));
    }

    int level_count() const { return index_.num_levels(); }
    int level_size(int level) const { return index_.level_actions(level); }

    std::vector<double> values(int base, std::span<const int> prefix, int level) const {
        if (static_cast<int>(prefix.size()) != level)
            throw std::invalid_argument("TabularCascade: prefix length must equal level");
        return rows_[index_.state_index(base, prefix)];
    }

    const AugmentedIndex& index() const { return index_; }

private:
    static double max_over_completions(std::span<const double> flat_q, long long tuples,
                                       const std::vector<int>& dims, int base, std::vector<int>& partial) {
        if (partial.size() == dims.size()) {
            long long flat = 0;
            for (std::size_t i = 0; i < dims.size(); ++i) flat = flat * dims[i] + partial[i];
            return flat_q[static_cast<std::size_t>(base) * tuples + flat];
        }
        double best = kNegInf;
        partial.push_back(0);
        for (int a = 0; a < dims[partial.size() - 1]; ++a) {
            partial.back() = a;
            best = std::max(best, max_over_completions(flat_q, tuples, dims, base, partial));
        }
        partial.pop_back();
        return best;
    }

    AugmentedIndex index_;
    std::vector<std::vector<double>> rows_;
};

/// Feasibility of the tabular cascade's partial actions, read from an
/// augmented MDP's masks.
class AugmentedMaskProvider {
public:
    AugmentedMaskProvider(const AugmentedMdp& aug, int base) : aug_(&aug), base_(base) {}

    std::vector<char> operator()(int level, std::span<const int> prefix) const {
        const int idx = aug_->state_index(base_, prefix);
        std::vector<char> mask(aug_->level_actions(level));
        for (int a = 0; a < static_cast<int>(mask.size()); ++a) mask[a] = aug_->mdp().feasible(idx, a) ? 1 : 0;
        return mask;
    }

private:
    const AugmentedMdp* aug_;
    int base_;
};

} // namespace asrse3
