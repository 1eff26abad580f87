#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "asrse3/mdp.hpp"

namespace asrse3 {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Exact solution of a finite MDP: optimal values, the full action-value
/// table (flat tuple indexing, infeasible entries at -inf) and the greedy
/// policy with lowest-index tie-breaking.
struct Solution {
    std::vector<double> v;      // per state
    std::vector<double> q;      // per state x flat action, row stride = num_tuples
    std::vector<int> policy;    // greedy flat action per state
    double residual = 0.0;
    long long iterations = 0;

    double q_at(int s, int flat_action, long long stride) const {
        return q[static_cast<std::size_t>(s) * stride + flat_action];
    }
};

namespace detail {

inline double backup(const FactoredMdp& mdp, int s, int a, const std::vector<double>& v) {
    double total = 0.0;
    for (const Outcome& o : mdp.outcomes(s, a))
        total += o.prob * (o.reward + (o.done ? 0.0 : o.discount * v[o.next]));
    return total;
}

} // namespace detail

/**
 * Synchronous value iteration over a FactoredMdp (flat action tuples),
 * honoring per-outcome discounts and termination flags. Iterates until
 * the Bellman residual max-norm falls below `tol`, then runs one ordered
 * sweep in descending state index so that, for augmented MDPs, the
 * intermediate-state identity V(s,prefix) = max_a V(s,prefix+a) holds
 * bitwise in the returned values.
 *
 * Throws std::runtime_error if the residual is still above `tol` after
 * `max_sweeps` iterations (possible when discount 1 cycles carry reward).
 */
inline Solution value_iteration(const FactoredMdp& mdp, double tol = 1e-12, long long max_sweeps = 200000) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    mdp.validate();

    const int n = mdp.num_states();
    const long long na = mdp.num_tuples();

    std::vector<double> v(n, 0.0), v_next(n, 0.0);
    double residual = std::numeric_limits<double>::infinity();
    long long sweeps = 0;

    auto state_value = [&](int s, const std::vector<double>& src) {
        double best = kNegInf;
        for (long long a = 0; a < na; ++a) {
            if (!mdp.feasible(s, static_cast<int>(a))) continue;
            best = std::max(best, detail::backup(mdp, s, static_cast<int>(a), src));
        }
        return best;
    };

    while (residual > tol) {
        if (sweeps >= max_sweeps)
            throw std::runtime_error("value_iteration: no convergence after " + std::to_string(sweeps) +
                                     " sweeps (residual " + std::to_string(residual) + ")");
        residual = 0.0;
        for (int s = 0; s < n; ++s) {
            v_next[s] = state_value(s, v);
            residual = std::max(residual, std::abs(v_next[s] - v[s]));
        }
        v.swap(v_next);
        ++sweeps;
    }

    // ordered finalization pass (descending index = deepest prefix first)
    for (int s = n - 1; s >= 0; --s) v[s] = state_value(s, v);

    Solution sol;
    sol.v = v;
    sol.residual = residual;
    sol.iterations = sweeps;
    sol.q.assign(static_cast<std::size_t>(n) * na, kNegInf);
    sol.policy.assign(n, -1);
    for (int s = 0; s < n; ++s) {
        double best = kNegInf;
        int best_a = -1;
        for (long long a = 0; a < na; ++a) {
            if (!mdp.feasible(s, static_cast<int>(a))) continue;
            const double qa = detail::backup(mdp, s, static_cast<int>(a), v);
            sol.q[static_cast<std::size_t>(s) * na + a] = qa;
            if (qa > best) {
                best = qa;
                best_a = static_cast<int>(a);
            }
        }
        sol.policy[s] = best_a;
    }
    return sol;
}

inline constexpr long long kFlatQstarCap = 1'000'000;

/// Exact Q* over full action tuples. Guarded by an enumeration cap so the
/// oracle stays instantaneous; throws std::invalid_argument above it.
inline Solution flat_qstar(const FactoredMdp& mdp, double tol = 1e-12) {
    const long long entries = static_cast<long long>(mdp.num_states()) * mdp.num_tuples();
    if (entries > kFlatQstarCap)
        throw std::invalid_argument("flat_qstar: " + std::to_string(entries) +
                                    " state-action entries exceed the enumeration cap");
    return value_iteration(mdp, tol);
}

} // namespace asrse3
