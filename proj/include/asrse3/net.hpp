#pragma once

#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asrse3/mdp_io.hpp"
#include "asrse3/rng.hpp"

namespace asrse3 {

/// Fully connected layer with explicit parameter and gradient tables.
/// backward() accumulates into gw/gb so batches sum naturally.
struct Dense {
    int in = 0, out = 0;
    std::vector<double> w, b;   // w is out x in, row-major
    std::vector<double> gw, gb;

    Dense() = default;
    Dense(int in_, int out_, Rng& rng) : in(in_), out(out_) {
        w.resize(static_cast<std::size_t>(in) * out);
        b.assign(out, 0.0);
        gw.assign(w.size(), 0.0);
        gb.assign(out, 0.0);
        const double scale = std::sqrt(6.0 / (in + out));
        for (double& v : w) v = rng.range(-scale, scale);
    }

    std::vector<double> forward(std::span<const double> x) const {
        std::vector<double> y(out);
        for (int o = 0; o < out; ++o) {
            double acc = b[o];
            const double* row = &w[static_cast<std::size_t>(o) * in];
            for (int i = 0; i < in; ++i) acc += row[i] * x[i];
            y[o] = acc;
        }
        return y;
    }

    /// dy is dLoss/doutput; returns dLoss/dinput and accumulates parameter
    /// gradients. `x` must be the input of the matching forward call.
    std::vector<double> backward(std::span<const double> x, std::span<const double> dy) {
        std::vector<double> dx(in, 0.0);
        for (int o = 0; o < out; ++o) {
            const double d = dy[o];
            if (d == 0.0) continue;
            gb[o] += d;
            double* grow = &gw[static_cast<std::size_t>(o) * in];
            const double* row = &w[static_cast<std::size_t>(o) * in];
            for (int i = 0; i < in; ++i) {
                grow[i] += d * x[i];
                dx[i] += d * row[i];
            }
        }
        return dx;
    }

    void zero_grad() {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
    }

    /// Decoupled weight decay: shrink then take the (scaled) gradient step.
    void sgd_step(double lr, double weight_decay, double grad_scale) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = w[i] * (1.0 - lr * weight_decay) - lr * grad_scale * gw[i];
        for (int o = 0; o < out; ++o) b[o] -= lr * grad_scale * gb[o];
    }
};

/// Feed-forward stack: Dense layers with tanh between them and a linear
/// output. tanh keeps every loss smooth, which the finite-difference
/// gradient checks rely on.
struct Mlp {
    std::vector<Dense> layers;

    Mlp() = default;
    Mlp(std::span<const int> sizes, Rng& rng) {
        if (sizes.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
        for (std::size_t i = 0; i + 1 < sizes.size(); ++i) layers.emplace_back(sizes[i], sizes[i + 1], rng);
    }

    int input_size() const { return layers.front().in; }
    int output_size() const { return layers.back().out; }

    /// Per-call activation cache consumed by backward().
    struct Trace {
        std::vector<std::vector<double>> inputs; // input of each layer
    };

    std::vector<double> forward(std::span<const double> x, Trace* trace = nullptr) const {
        std::vector<double> cur(x.begin(), x.end());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            if (trace) trace->inputs.push_back(cur);
            cur = layers[l].forward(cur);
            if (l + 1 < layers.size())
                for (double& v : cur) v = std::tanh(v);
        }
        return cur;
    }

    std::vector<double> backward(const Trace& trace, std::span<const double> dy) {
        std::vector<double> d(dy.begin(), dy.end());
        for (std::size_t l = layers.size(); l-- > 0;) {
            if (l + 1 < layers.size()) {
                // d arrives after tanh; convert to pre-activation gradient
                const std::vector<double> post = hidden_output(trace, l);
                for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - post[i] * post[i];
            }
            d = layers[l].backward(trace.inputs[l], d);
        }
        return d;
    }

    void zero_grad() {
        for (Dense& l : layers) l.zero_grad();
    }
    void sgd_step(double lr, double wd, double scale) {
        for (Dense& l : layers) l.sgd_step(lr, wd, scale);
    }

private:
    /// tanh output of hidden layer l, reconstructed from the next layer's
    /// cached input.
    static std::vector<double> hidden_output(const Trace& trace, std::size_t l) {
        return trace.inputs[l + 1];
    }
};

/// Named views over a model's parameters and their gradient slots; the
/// checkpoint writer and the gradient checker both walk these.
struct ParamBlock {
    std::string name;
    std::span<double> values;
    std::span<double> grads;
};

inline std::vector<ParamBlock> param_blocks(Mlp& m, const std::string& prefix) {
    std::vector<ParamBlock> out;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        Dense& d = m.layers[l];
        out.push_back({prefix + ".l" + std::to_string(l) + ".w", std::span<double>(d.w), std::span<double>(d.gw)});
        out.push_back({prefix + ".l" + std::to_string(l) + ".b", std::span<double>(d.b), std::span<double>(d.gb)});
    }
    return out;
}

/**
 * Central-difference gradient check. `loss` recomputes the scalar loss
 * from the current parameter values; `grads` must already hold the
 * analytic gradient of that loss. Returns the maximum over parameters of
 * |analytic - cd| / (|analytic| + |cd| + eps).
 */
inline double grad_check(std::span<const ParamBlock> blocks, const std::function<double()>& loss,
                         double fd_step = 1e-5) {
    constexpr double eps = 1e-12;
    double worst = 0.0;
    for (const ParamBlock& blk : blocks) {
        for (std::size_t i = 0; i < blk.values.size(); ++i) {
            const double keep = blk.values[i];
            blk.values[i] = keep + fd_step;
            const double up = loss();
            blk.values[i] = keep - fd_step;
            const double dn = loss();
            blk.values[i] = keep;
            if (!std::isfinite(up) || !std::isfinite(dn)) throw std::runtime_error("grad_check: non-finite loss");
            const double cd = (up - dn) / (2.0 * fd_step);
            const double an = blk.grads[i];
            worst = std::max(worst, std::abs(an - cd) / (std::abs(an) + std::abs(cd) + eps));
        }
    }
    return worst;
}

/// Versioned text checkpoint: a shape manifest followed by hexfloat
/// payloads; round-trips bit-exactly.
inline void save_params(std::ostream& os, std::span<const ParamBlock> blocks) {
    os << "asrse3-params 1\n" << blocks.size() << "\n";
    for (const ParamBlock& blk : blocks) {
        os << blk.name << ' ' << blk.values.size();
        for (double v : blk.values) os << ' ' << format_double(v);
        os << "\n";
    }
}

inline void load_params(std::istream& is, std::span<const ParamBlock> blocks) {
    std::string word;
    int version;
    std::size_t count;
    is >> word >> version >> count;
    if (word != "asrse3-params" || version != 1) throw std::invalid_argument("load_params: bad header");
    if (count != blocks.size()) throw std::invalid_argument("load_params: block count mismatch");
    for (const ParamBlock& blk : blocks) {
        std::string name;
        std::size_t n;
        is >> name >> n;
        if (name != blk.name || n != blk.values.size())
            throw std::invalid_argument("load_params: manifest mismatch at '" + name + "'");
        for (double& v : blk.values) {
            is >> word;
            v = parse_double(word);
        }
    }
    if (!is) throw std::invalid_argument("load_params: truncated");
}

} // namespace asrse3
