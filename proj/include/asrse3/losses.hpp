#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace asrse3 {

/// Scalar loss with its gradient with respect to a row of Q values.
struct RowLoss {
    double loss = 0.0;
    std::vector<double> grad; // same width as the q row
};

/// Constant-offset margin: l(ae, a) = 0 when a = ae, else l.
struct MarginFn {
    double l = 0.1;
    double operator()(int expert, int a) const { return a == expert ? 0.0 : l; }
};

namespace detail {

inline void require_valid_row(std::span<const double> q, int expert, std::span<const char> mask) {
    if (!mask.empty() && mask.size() != q.size()) throw std::invalid_argument("loss: mask width mismatch");
    if (expert < 0 || expert >= static_cast<int>(q.size()))
        throw std::invalid_argument("loss: expert index out of range");
    if (!mask.empty() && !mask[expert]) throw std::invalid_argument("loss: expert action is masked");
    bool any = mask.empty();
    for (char m : mask) any = any || m;
    if (!any) throw std::invalid_argument("loss: empty feasible set");
    for (std::size_t i = 0; i < q.size(); ++i)
        if ((mask.empty() || mask[i]) && !std::isfinite(q[i]))
            throw std::invalid_argument("loss: non-finite q value");
}

} // namespace detail

/// Huber TD loss with transition point delta = 1, as a function of the
/// prediction (target treated as a constant). Quadratic inside |d| <= 1,
/// linear outside; the gradient is the clipped error.
inline std::pair<double, double> td_loss(double q_pred, double y) {
    if (!std::isfinite(q_pred) || !std::isfinite(y))
        throw std::invalid_argument("td_loss: non-finite input");
    const double d = q_pred - y;
    if (std::abs(d) <= 1.0) return {0.5 * d * d, d};
    return {std::abs(d) - 0.5, d > 0 ? 1.0 : -1.0};
}

/**
 * Strict large-margin loss: averages the margin violation over the whole
 * violation set {a : Q(a) > Q(ae) - l(ae,a)} (strict inequality, so the
 * expert never qualifies), instead of penalizing only the worst action.
 * Masked actions are excluded from the set and from the normalizer.
 * Returns loss 0 with a zero gradient when the set is empty.
 */
inline RowLoss slm_loss(std::span<const double> q, int expert, MarginFn margin = {},
                        std::span<const char> mask = {}) {
    detail::require_valid_row(q, expert, mask);
    RowLoss out;
    out.grad.assign(q.size(), 0.0);

    std::vector<int> violators;
    for (int a = 0; a < static_cast<int>(q.size()); ++a) {
        if (!mask.empty() && !mask[a]) continue;
        if (q[a] > q[expert] - margin(expert, a)) violators.push_back(a);
    }
    if (violators.empty()) return out;

    const double inv = 1.0 / static_cast<double>(violators.size());
    for (int a : violators) {
        out.loss += (q[a] + margin(expert, a) - q[expert]) * inv;
        out.grad[a] += inv;
    }
    out.grad[expert] -= 1.0;
    return out;
}

/// DQfD large-margin loss: max_a [Q(a) + l(ae,a)] - Q(ae). Non-negative
/// since the expert itself is a candidate with margin 0. Lowest-index
/// tie-break on the argmax.
inline RowLoss lm_loss(std::span<const double> q, int expert, MarginFn margin = {},
                       std::span<const char> mask = {}) {
    detail::require_valid_row(q, expert, mask);
    RowLoss out;
    out.grad.assign(q.size(), 0.0);

    int best = -1;
    double best_v = 0.0;
    for (int a = 0; a < static_cast<int>(q.size()); ++a) {
        if (!mask.empty() && !mask[a]) continue;
        const double v = q[a] + margin(expert, a);
        if (best < 0 || v > best_v) {
            best = a;
            best_v = v;
        }
    }
    out.loss = best_v - q[expert];
    out.grad[best] += 1.0;
    out.grad[expert] -= 1.0;
    return out;
}

/// Cross-entropy of softmax(beta * q) against the expert one-hot,
/// stabilized by max subtraction. Masked entries are excluded from the
/// softmax support.
inline RowLoss ce_loss(std::span<const double> q, int expert, double beta = 1.0,
                       std::span<const char> mask = {}) {
    detail::require_valid_row(q, expert, mask);
    RowLoss out;
    out.grad.assign(q.size(), 0.0);

    double hi = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < static_cast<int>(q.size()); ++a)
        if (mask.empty() || mask[a]) hi = std::max(hi, beta * q[a]);

    double z = 0.0;
    for (int a = 0; a < static_cast<int>(q.size()); ++a)
        if (mask.empty() || mask[a]) z += std::exp(beta * q[a] - hi);

    out.loss = -(beta * q[expert] - hi - std::log(z));
    for (int a = 0; a < static_cast<int>(q.size()); ++a) {
        if (!mask.empty() && !mask[a]) continue;
        const double p = std::exp(beta * q[a] - hi) / z;
        out.grad[a] = beta * (p - (a == expert ? 1.0 : 0.0));
    }
    return out;
}

} // namespace asrse3
