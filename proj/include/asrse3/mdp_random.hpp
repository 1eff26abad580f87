#pragma once

#include <vector>

#include "asrse3/mdp.hpp"
#include "asrse3/rng.hpp"

namespace asrse3 {

/// Knobs for the random-instance generator used by the property suites.
struct RandomMdpSpec {
    int max_states = 20;
    int min_states = 2;
    std::vector<int> allowed_k = {2, 3, 5};
    int max_dim = 4;
    double gamma = 0.9;
    bool stochastic = false;   // up to 3 outcomes per action when set
    double done_prob = 0.05;   // chance a transition terminates
    bool random_masks = false; // random infeasible tuples (>=1 feasible kept)
};

/// Draws a valid FactoredMdp with rewards in [0,1]. Deterministic in rng.
inline FactoredMdp random_mdp(Rng& rng, const RandomMdpSpec& spec = {}) {
    const int n = spec.min_states + rng.below(spec.max_states - spec.min_states + 1);
    const int k = spec.allowed_k[rng.below(static_cast<int>(spec.allowed_k.size()))];
    std::vector<int> dims(k);
    for (int& d : dims) d = 1 + rng.below(spec.max_dim);

    FactoredMdp mdp(n, dims, spec.gamma, rng.below(n));
    for (int s = 0; s < n; ++s) {
        for (long long a = 0; a < mdp.num_tuples(); ++a) {
            const int flat = static_cast<int>(a);
            if (spec.stochastic) {
                const int nout = 1 + rng.below(3);
                std::vector<double> w(nout);
                double total = 0.0;
                for (double& x : w) {
                    x = 0.05 + rng.real();
                    total += x;
                }
                for (int i = 0; i < nout; ++i)
                    mdp.add_outcome(s, flat,
                                    Outcome{rng.below(n), w[i] / total, rng.real(), rng.chance(spec.done_prob),
                                            spec.gamma});
            } else {
                mdp.set_deterministic(s, flat, rng.below(n), rng.real(), rng.chance(spec.done_prob));
            }
        }
        if (spec.random_masks) {
            for (long long a = 0; a < mdp.num_tuples(); ++a)
                mdp.set_feasible(s, static_cast<int>(a), !rng.chance(0.3));
            // keep at least one tuple open
            bool any = false;
            for (long long a = 0; a < mdp.num_tuples() && !any; ++a) any = mdp.feasible(s, static_cast<int>(a));
            if (!any) mdp.set_feasible(s, rng.below(static_cast<int>(mdp.num_tuples())), true);
        }
    }
    return mdp;
}

} // namespace asrse3
