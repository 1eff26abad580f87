#pragma once

#include <istream>
#include <ostream>
#include <vector>

#include "asrse3/blockworld.hpp"
#include "asrse3/mdp_io.hpp"
#include "asrse3/rng.hpp"

namespace asrse3 {

/// One original-MDP step: full partial-action tuple plus the successor
/// observation. The expert flag gates the margin/cross-entropy terms.
template <class State>
struct Transition {
    State state;
    std::vector<int> actions;
    State next;
    double reward = 0.0;
    bool done = false;
    bool expert = false;
};

using BwTransition = Transition<Observation>;

/// FIFO ring buffer of transitions with uniform without-replacement batch
/// sampling (Floyd's algorithm over live indices).
template <class State>
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 100000) : capacity_(capacity) {
        if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return data_.empty(); }

    void push(Transition<State> t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[head_] = std::move(t); // overwrite oldest
            head_ = (head_ + 1) % capacity_;
        }
    }

    const Transition<State>& at(std::size_t i) const { return data_[i]; }

    /// k distinct uniform indices; requires k <= size.
    std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const {
        if (k > data_.size()) throw std::invalid_argument("ReplayBuffer: batch larger than contents");
        // Floyd's sampling: distinct, O(k) expected
        std::vector<std::size_t> out;
        out.reserve(k);
        const std::size_t n = data_.size();
        for (std::size_t j = n - k; j < n; ++j) {
            const std::size_t t = static_cast<std::size_t>(rng.below(static_cast<int>(j + 1)));
            if (std::find(out.begin(), out.end(), t) == out.end())
                out.push_back(t);
            else
                out.push_back(j);
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0; // next eviction slot once full
    std::vector<Transition<State>> data_;
};

// --- plain-text serialization (hexfloat payloads, bit-exact) ---

inline void write_grid(std::ostream& os, const HeightMap& g) {
    os << g.width() << ' ' << g.height();
    for (double v : g.data()) os << ' ' << format_double(v);
}

inline HeightMap read_grid(std::istream& is) {
    int w, h;
    if (!(is >> w >> h)) throw std::invalid_argument("read_grid: truncated header");
    HeightMap g(w, h, 0.0);
    for (double& v : g.data()) {
        std::string tok;
        if (!(is >> tok)) throw std::invalid_argument("read_grid: truncated payload");
        v = parse_double(tok);
    }
    return g;
}

inline void write_observation(std::ostream& os, const Observation& obs) {
    os << (obs.holding ? 1 : 0) << ' ' << obs.held_w << ' ' << obs.held_d << ' ' << obs.in_hand.size() << ' ';
    write_grid(os, obs.scene);
    for (const auto& g : obs.in_hand) {
        os << ' ';
        write_grid(os, g);
    }
}

inline Observation read_observation(std::istream& is) {
    Observation obs;
    int holding;
    std::size_t n;
    if (!(is >> holding >> obs.held_w >> obs.held_d >> n))
        throw std::invalid_argument("read_observation: truncated");
    obs.holding = holding != 0;
    obs.scene = read_grid(is);
    obs.in_hand.reserve(n);
    for (std::size_t i = 0; i < n; ++i) obs.in_hand.push_back(read_grid(is));
    return obs;
}

inline void write_transition(std::ostream& os, const BwTransition& t) {
    os << "r " << t.actions.size();
    for (int a : t.actions) os << ' ' << a;
    os << ' ' << format_double(t.reward) << ' ' << (t.done ? 1 : 0) << ' ' << (t.expert ? 1 : 0) << ' ';
    write_observation(os, t.state);
    os << ' ';
    write_observation(os, t.next);
    os << '\n';
}

inline BwTransition read_transition(std::istream& is) {
    BwTransition t;
    std::size_t na;
    std::string reward;
    int done, expert;
    if (!(is >> na)) throw std::invalid_argument("read_transition: truncated");
    t.actions.resize(na);
    for (int& a : t.actions) is >> a;
    is >> reward >> done >> expert;
    t.reward = parse_double(reward);
    t.done = done != 0;
    t.expert = expert != 0;
    t.state = read_observation(is);
    t.next = read_observation(is);
    if (!is) throw std::invalid_argument("read_transition: truncated");
    return t;
}

/// Expert buffer file: header (task id, config hash, transition count),
/// then one serialized record per line. Shared between the expert
/// generator and the trainer.
struct BufferFileHeader {
    std::string task_id;
    std::uint64_t config_hash = 0;
    std::size_t count = 0;
};

inline void save_buffer(std::ostream& os, const BufferFileHeader& hdr,
                        const std::vector<BwTransition>& records) {
    os << "asrse3-expert-buffer 1\n";
    os << "task " << hdr.task_id << "\n";
    os << "config_hash " << hdr.config_hash << "\n";
    os << "count " << records.size() << "\n";
    for (const BwTransition& t : records) write_transition(os, t);
}

inline std::pair<BufferFileHeader, std::vector<BwTransition>> load_buffer(std::istream& is) {
    std::string word;
    int version;
    is >> word >> version;
    if (word != "asrse3-expert-buffer" || version != 1)
        throw std::invalid_argument("load_buffer: not an expert buffer file");
    BufferFileHeader hdr;
    is >> word >> hdr.task_id;
    if (word != "task") throw std::invalid_argument("load_buffer: expected 'task'");
    is >> word >> hdr.config_hash;
    if (word != "config_hash") throw std::invalid_argument("load_buffer: expected 'config_hash'");
    is >> word >> hdr.count;
    if (word != "count") throw std::invalid_argument("load_buffer: expected 'count'");
    std::vector<BwTransition> records;
    records.reserve(hdr.count);
    for (std::size_t i = 0; i < hdr.count; ++i) {
        is >> word;
        if (word != "r") throw std::invalid_argument("load_buffer: expected record");
        records.push_back(read_transition(is));
    }
    return {hdr, std::move(records)};
}

} // namespace asrse3
