#pragma once

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "asrse3/mdp.hpp"

namespace asrse3 {

/// Doubles are serialized as C hexfloats so fixtures round-trip bit-exactly.
inline std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double parse_double(const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str()) throw std::invalid_argument("parse_double: bad token '" + tok + "'");
    return v;
}

/// Plain-text MDP fixture: header (state count, dims, gamma, initial),
/// then one row per (state, flat action) with the feasibility flag and
/// outcome list. Used for regression fixtures and counterexample dumps.
inline void save_mdp(std::ostream& os, const FactoredMdp& mdp) {
    os << "asrse3-mdp 1\n";
    os << "states " << mdp.num_states() << "\n";
    os << "dims";
    for (int d : mdp.action_dims()) os << ' ' << d;
    os << "\n";
    os << "gamma " << format_double(mdp.gamma()) << "\n";
    os << "initial " << mdp.initial_state() << "\n";
    for (int s = 0; s < mdp.num_states(); ++s) {
        for (long long a = 0; a < mdp.num_tuples(); ++a) {
            const auto& outs = mdp.outcomes(s, static_cast<int>(a));
            os << "t " << s << ' ' << a << ' ' << (mdp.feasible(s, static_cast<int>(a)) ? 1 : 0) << ' '
               << outs.size();
            for (const Outcome& o : outs)
                os << ' ' << o.next << ' ' << format_double(o.prob) << ' ' << format_double(o.reward) << ' '
                   << (o.done ? 1 : 0) << ' ' << format_double(o.discount);
            os << "\n";
        }
    }
    os << "end\n";
}

inline FactoredMdp load_mdp(std::istream& is) {
    std::string word;
    is >> word;
    if (word != "asrse3-mdp") throw std::invalid_argument("load_mdp: bad magic '" + word + "'");
    int version;
    is >> version;
    if (version != 1) throw std::invalid_argument("load_mdp: unsupported version");

    int num_states = 0, initial = 0;
    std::vector<int> dims;
    double gamma = 1.0;

    is >> word;
    if (word != "states") throw std::invalid_argument("load_mdp: expected 'states'");
    is >> num_states;

    is >> word;
    if (word != "dims") throw std::invalid_argument("load_mdp: expected 'dims'");
    {
        std::string line;
        std::getline(is, line);
        std::istringstream ls(line);
        int d;
        while (ls >> d) dims.push_back(d);
    }

    is >> word;
    if (word != "gamma") throw std::invalid_argument("load_mdp: expected 'gamma'");
    is >> word;
    gamma = parse_double(word);

    is >> word;
    if (word != "initial") throw std::invalid_argument("load_mdp: expected 'initial'");
    is >> initial;

    FactoredMdp mdp(num_states, dims, gamma, initial);
    while (is >> word) {
        if (word == "end") break;
        if (word != "t") throw std::invalid_argument("load_mdp: expected transition row, got '" + word + "'");
        int s, feas;
        long long a;
        std::size_t nout;
        if (!(is >> s >> a >> feas >> nout)) throw std::invalid_argument("load_mdp: truncated row header");
        for (std::size_t i = 0; i < nout; ++i) {
            Outcome o;
            int done;
            std::string prob, reward, discount;
            if (!(is >> o.next >> prob >> reward >> done >> discount))
                throw std::invalid_argument("load_mdp: truncated outcome");
            o.prob = parse_double(prob);
            o.reward = parse_double(reward);
            o.done = done != 0;
            o.discount = parse_double(discount);
            mdp.add_outcome(s, static_cast<int>(a), o);
        }
        mdp.set_feasible(s, static_cast<int>(a), feas != 0);
    }
    mdp.validate();
    return mdp;
}

} // namespace asrse3
