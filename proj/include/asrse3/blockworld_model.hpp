#pragma once

#include <unordered_map>

#include "asrse3/blockworld.hpp"
#include "asrse3/cascade.hpp"
#include "asrse3/encoding.hpp"
#include "asrse3/net.hpp"

namespace asrse3 {

/// Per-level feasibility derived purely from an observation, used when a
/// stored transition must be re-masked without its originating state.
/// Picks threshold the scene at half the smallest inventory height (the
/// config's noise bound makes this exact); places use the held extent
/// carried in the observation. Coincides with the environment's own
/// state-based masks.
class ObservationMasks {
public:
    ObservationMasks(const BlockWorldConfig& cfg, const Observation& obs)
        : cfg_(&cfg), obs_(&obs) {
        double min_h = 1e9;
        for (const BlockSpec& b : cfg.inventory) min_h = std::min(min_h, double(b.min_height()));
        threshold_ = 0.5 * min_h;
    }

    std::vector<char> operator()(int level, std::span<const int> prefix) const {
        const bool picking = !obs_->holding;
        if (level == 0) {
            std::vector<char> m(static_cast<std::size_t>(cfg_->grid_w) * cfg_->grid_h, 0);
            for (int y = 0; y < cfg_->grid_h; ++y)
                for (int x = 0; x < cfg_->grid_w; ++x) {
                    bool ok;
                    if (picking) {
                        ok = obs_->scene.at(x, y) > threshold_;
                    } else {
                        ok = false;
                        for (int t = 0; t < cfg_->theta_count && !ok; ++t) ok = fits(x, y, t);
                    }
                    m[static_cast<std::size_t>(y) * cfg_->grid_w + x] = ok ? 1 : 0;
                }
            return m;
        }
        if (level == 1) {
            std::vector<char> m(cfg_->theta_count, 1);
            if (!picking) {
                const int x = prefix[0] % cfg_->grid_w, y = prefix[0] / cfg_->grid_w;
                for (int t = 0; t < cfg_->theta_count; ++t) m[t] = fits(x, y, t) ? 1 : 0;
            }
            return m;
        }
        return std::vector<char>(cfg_->z_count, 1);
    }

private:
    bool fits(int cx, int cy, int theta) const {
        const int fw = theta % 2 == 0 ? obs_->held_w : obs_->held_d;
        const int fh = theta % 2 == 0 ? obs_->held_d : obs_->held_w;
        const int ax = cx - (fw - 1) / 2, ay = cy - (fh - 1) / 2;
        return ax >= 0 && ay >= 0 && ax + fw <= cfg_->grid_w && ay + fh <= cfg_->grid_h;
    }

    const BlockWorldConfig* cfg_;
    const Observation* obs_;
    double threshold_ = 0.5;
};

/**
 * Parametric Q cascade over blockworld observations: a shared scene
 * encoder e(s) feeding one small head per level. Level 1 scores every
 * grid cell with the same head applied to the local crop around that
 * cell (the desk-scale stand-in for a fully convolutional Q map); higher
 * levels consume the prefix through the f2/f3 crop encodings. Every head
 * has pick and place output channels selected by the gripper bit.
 */
class CascadeModel {
public:
    CascadeModel(const BlockWorldConfig& cfg, int encoder_width, int hidden, std::uint64_t seed)
        : cfg_(cfg), enc_width_(encoder_width) {
        Rng rng(seed);
        const int m2 = cfg.crop.m * cfg.crop.m;
        inhand_size_ = m2 * (cfg.crop.triple ? 3 : 1);
        const std::vector<int> enc_sizes = {kSceneFeatures, encoder_width};
        encoder_ = Mlp(enc_sizes, rng);
        const auto sizes = cfg.level_sizes();
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            const int out = i == 0 ? 2 : 2 * sizes[i];
            const std::vector<int> head_sizes = {encoder_width + inhand_size_ + m2, hidden, out};
            heads_.emplace_back(head_sizes, rng);
        }
        level_sizes_ = sizes;
    }

    int level_count() const { return static_cast<int>(level_sizes_.size()); }
    int level_size(int level) const { return level_sizes_[level]; }

    /// Activation caches for one row evaluation; consumed by backward_row.
    struct RowTrace {
        int level = 0;
        bool place_head = false;
        Mlp::Trace enc_trace;
        std::vector<double> enc_hidden; // tanh(e)
        std::vector<Mlp::Trace> head_traces;
    };

    std::vector<double> values(const Observation& s, std::span<const int> prefix, int level) const {
        return eval_row(s, prefix, level, nullptr);
    }

    std::vector<double> values_traced(const Observation& s, std::span<const int> prefix, int level,
                                      RowTrace& trace) const {
        return eval_row(s, prefix, level, &trace);
    }

    /// Backpropagates dLoss/dRow through the traced forward, accumulating
    /// gradients in the head that served the row and in the shared
    /// encoder. The unused pick/place channel receives no gradient.
    void backward_row(const RowTrace& trace, std::span<const double> d_row) {
        Mlp& head = heads_[trace.level];
        const int width = level_sizes_[trace.level];
        std::vector<double> d_enc(enc_width_, 0.0);

        if (trace.level == 0) {
            for (int cell = 0; cell < width; ++cell) {
                if (d_row[cell] == 0.0) continue;
                std::vector<double> dout(2, 0.0);
                dout[trace.place_head ? 1 : 0] = d_row[cell];
                const std::vector<double> dx = head.backward(trace.head_traces[cell], dout);
                for (int i = 0; i < enc_width_; ++i) d_enc[i] += dx[i];
            }
        } else {
            std::vector<double> dout(2 * width, 0.0);
            const int base = trace.place_head ? width : 0;
            bool any = false;
            for (int a = 0; a < width; ++a) {
                dout[base + a] = d_row[a];
                any = any || d_row[a] != 0.0;
            }
            if (any) {
                const std::vector<double> dx = head.backward(trace.head_traces[0], dout);
                for (int i = 0; i < enc_width_; ++i) d_enc[i] += dx[i];
            }
        }

        // through the encoder tanh
        bool any_enc = false;
        for (int i = 0; i < enc_width_; ++i) {
            d_enc[i] *= 1.0 - trace.enc_hidden[i] * trace.enc_hidden[i];
            any_enc = any_enc || d_enc[i] != 0.0;
        }
        if (any_enc) encoder_.backward(trace.enc_trace, d_enc);
    }

    void zero_grad() {
        encoder_.zero_grad();
        for (Mlp& h : heads_) h.zero_grad();
    }

    void sgd_step(double lr, double weight_decay, double grad_scale) {
        encoder_.sgd_step(lr, weight_decay, grad_scale);
        for (Mlp& h : heads_) h.sgd_step(lr, weight_decay, grad_scale);
    }

    std::vector<ParamBlock> blocks() {
        std::vector<ParamBlock> out = param_blocks(encoder_, "enc");
        for (std::size_t i = 0; i < heads_.size(); ++i) {
            auto hb = param_blocks(heads_[i], "head" + std::to_string(i));
            out.insert(out.end(), hb.begin(), hb.end());
        }
        return out;
    }

    void save(std::ostream& os) { save_params(os, blocks()); }
    void load(std::istream& is) { load_params(is, blocks()); }

private:
    static constexpr int kSceneFeatures = 7;

    std::vector<double> scene_features(const Observation& s) const {
        const auto& d = s.scene.data();
        double sum = 0.0, mx = 0.0, occ = 0.0;
        for (double v : d) {
            sum += v;
            mx = std::max(mx, v);
            occ += v > 0.25 ? 1.0 : 0.0;
        }
        double ih_sum = 0.0, ih_mx = 0.0;
        for (const auto& g : s.in_hand)
            for (double v : g.data()) {
                ih_sum += v;
                ih_mx = std::max(ih_mx, v);
            }
        const double n = static_cast<double>(d.size());
        const double ihn = static_cast<double>(inhand_size_);
        const int c = cfg_.crop.m / 2;
        return {sum / n, mx, occ / n, s.holding ? 1.0 : 0.0, ih_sum / ihn, ih_mx, s.in_hand[0].at(c, c)};
    }

    void append_inhand(const Observation& s, std::vector<double>& x) const {
        for (const auto& g : s.in_hand) x.insert(x.end(), g.data().begin(), g.data().end());
    }

    static void append_grid(const HeightMap& g, std::vector<double>& x) {
        x.insert(x.end(), g.data().begin(), g.data().end());
    }

    std::vector<double> eval_row(const Observation& s, std::span<const int> prefix, int level,
                                 RowTrace* trace) const {
        if (level != static_cast<int>(prefix.size()))
            throw std::invalid_argument("CascadeModel: prefix length must equal level");

        Mlp::Trace enc_trace;
        std::vector<double> e = encoder_.forward(scene_features(s), trace ? &enc_trace : nullptr);
        for (double& v : e) v = std::tanh(v);
        if (trace) {
            trace->level = level;
            trace->place_head = s.holding;
            trace->enc_trace = std::move(enc_trace);
            trace->enc_hidden = e;
        }

        const Mlp& head = heads_[level];
        const int width = level_sizes_[level];
        std::vector<double> row(width);

        if (level == 0) {
            if (trace) trace->head_traces.resize(width);
            std::vector<double> x;
            x.reserve(head.input_size());
            for (int cell = 0; cell < width; ++cell) {
                const int cx = cell % cfg_.grid_w, cy = cell / cfg_.grid_w;
                x.assign(e.begin(), e.end());
                append_inhand(s, x);
                append_grid(f2(s.scene, cx, cy, cfg_.crop.m), x);
                Mlp::Trace* ht = trace ? &trace->head_traces[cell] : nullptr;
                const std::vector<double> out = head.forward(x, ht);
                row[cell] = out[s.holding ? 1 : 0];
            }
        } else {
            std::vector<double> x(e.begin(), e.end());
            append_inhand(s, x);
            const int cx = prefix[0] % cfg_.grid_w, cy = prefix[0] / cfg_.grid_w;
            if (level == 1) {
                append_grid(f2(s.scene, cx, cy, cfg_.crop.m), x);
            } else {
                append_grid(f3(s.scene, cx, cy, prefix[1], cfg_.crop.m), x);
            }
            if (trace) trace->head_traces.resize(1);
            Mlp::Trace* ht = trace ? &trace->head_traces[0] : nullptr;
            const std::vector<double> out = head.forward(x, ht);
            const int base = s.holding ? width : 0;
            for (int a = 0; a < width; ++a) row[a] = out[base + a];
        }
        return row;
    }

    BlockWorldConfig cfg_;
    int enc_width_;
    int inhand_size_ = 0;
    std::vector<int> level_sizes_;
    Mlp encoder_;
    std::vector<Mlp> heads_;
};

/**
 * Flat tabular Q over full action tuples keyed by observation hash, with
 * pick/place channels. The baseline "flat" representation; permitted only
 * while the tuple space stays below the enumeration cap.
 */
class FlatTabularQ {
public:
    explicit FlatTabularQ(const BlockWorldConfig& cfg) : cfg_(cfg) {
        num_tuples_ = 1;
        for (int s : cfg.level_sizes()) num_tuples_ *= s;
        if (static_cast<long long>(num_tuples_) * 2 > kFlatQstarCap)
            throw std::invalid_argument("FlatTabularQ: tuple space above the enumeration cap");
    }

    long long num_tuples() const { return num_tuples_; }

    std::vector<double> row(const Observation& s) const {
        const auto it = table_.find(hash_observation(s));
        if (it == table_.end()) return std::vector<double>(num_tuples_, 0.0);
        const int base = s.holding ? static_cast<int>(num_tuples_) : 0;
        return std::vector<double>(it->second.begin() + base, it->second.begin() + base + num_tuples_);
    }

    /// Tabular gradient step: Q[s, a] -= lr * g[a] on the active channel.
    void apply_row_gradient(const Observation& s, std::span<const double> grad, double lr) {
        auto& cell = table_[hash_observation(s)];
        if (cell.empty()) cell.assign(2 * num_tuples_, 0.0);
        const int base = s.holding ? static_cast<int>(num_tuples_) : 0;
        for (long long a = 0; a < num_tuples_; ++a) cell[base + a] -= lr * grad[a];
    }

    /// Tuple-level feasibility assembled from the per-level masks.
    std::vector<char> tuple_mask(const BlockWorldConfig& cfg, const Observation& s) const {
        const ObservationMasks masks(cfg, s);
        const auto sizes = cfg.level_sizes();
        std::vector<char> out;
        out.reserve(num_tuples_);
        std::vector<int> prefix;
        expand(masks, sizes, prefix, out);
        return out;
    }

    std::size_t distinct_states() const { return table_.size(); }

    void save(std::ostream& os) const {
        std::vector<std::uint64_t> keys;
        keys.reserve(table_.size());
        for (const auto& [k, v] : table_) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        os << "asrse3-flatq 1\n" << num_tuples_ << ' ' << keys.size() << "\n";
        for (std::uint64_t k : keys) {
            os << k;
            for (double v : table_.at(k)) os << ' ' << format_double(v);
            os << "\n";
        }
    }

    void load(std::istream& is) {
        std::string word;
        int version;
        long long tuples;
        std::size_t n;
        is >> word >> version >> tuples >> n;
        if (word != "asrse3-flatq" || version != 1 || tuples != num_tuples_)
            throw std::invalid_argument("FlatTabularQ: bad checkpoint header");
        table_.clear();
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t k;
            is >> k;
            std::vector<double> row(2 * num_tuples_);
            for (double& v : row) {
                is >> word;
                v = parse_double(word);
            }
            table_[k] = std::move(row);
        }
    }

private:
    void expand(const ObservationMasks& masks, const std::vector<int>& sizes, std::vector<int>& prefix,
                std::vector<char>& out) const {
        const int level = static_cast<int>(prefix.size());
        const std::vector<char> m = masks(level, prefix);
        for (int a = 0; a < sizes[level]; ++a) {
            if (level + 1 == static_cast<int>(sizes.size())) {
                out.push_back(m[a]);
            } else if (!m[a]) {
                // prune the whole subtree
                long long sub = 1;
                for (std::size_t i = level + 1; i < sizes.size(); ++i) sub *= sizes[i];
                out.insert(out.end(), sub, 0);
            } else {
                prefix.push_back(a);
                expand(masks, sizes, prefix, out);
                prefix.pop_back();
            }
        }
    }

    BlockWorldConfig cfg_;
    long long num_tuples_ = 0;
    std::unordered_map<std::uint64_t, std::vector<double>> table_;
};

} // namespace asrse3
