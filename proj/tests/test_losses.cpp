#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "asrse3/losses.hpp"
#include "asrse3/rng.hpp"

using namespace asrse3;

namespace {

// Central-difference oracle over a row-valued loss.
std::vector<double> fd_grad(const std::function<double(std::span<const double>)>& f, std::vector<double> q,
                            double h = 1e-6) {
    std::vector<double> g(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double keep = q[i];
        q[i] = keep + h;
        const double up = f(q);
        q[i] = keep - h;
        const double dn = f(q);
        q[i] = keep;
        g[i] = (up - dn) / (2 * h);
    }
    return g;
}

std::vector<double> random_row(Rng& rng, int n) {
    std::vector<double> q(n);
    for (double& v : q) v = rng.range(-1.0, 1.0);
    return q;
}

} // namespace

TEST(TdLoss, HuberBranches) {
    auto [l0, g0] = td_loss(2.0, 2.0);
    EXPECT_EQ(l0, 0.0);
    EXPECT_EQ(g0, 0.0);

    auto [l1, g1] = td_loss(2.5, 2.0); // quadratic branch
    EXPECT_NEAR(l1, 0.125, 1e-12);
    EXPECT_NEAR(g1, 0.5, 1e-12);

    auto [l2, g2] = td_loss(5.0, 2.0); // linear branch, |d| = 3
    EXPECT_NEAR(l2, 2.5, 1e-12);
    EXPECT_EQ(g2, 1.0);

    auto [l3, g3] = td_loss(-1.0, 2.0);
    EXPECT_NEAR(l3, 2.5, 1e-12);
    EXPECT_EQ(g3, -1.0);

    EXPECT_THROW(td_loss(std::nan(""), 0.0), std::invalid_argument);
}

TEST(SlmLoss, WorkedExamples) {
    // single violator
    std::vector<double> q1 = {1.0, 0.95, 0.5};
    const RowLoss r1 = slm_loss(q1, 0, MarginFn{0.1});
    EXPECT_NEAR(r1.loss, 0.05, 1e-12);
    EXPECT_EQ(r1.grad[0], -1.0);
    EXPECT_EQ(r1.grad[1], 1.0);
    EXPECT_EQ(r1.grad[2], 0.0);

    // margin-dominant expert: empty set
    std::vector<double> q2 = {1.0, 0.8};
    const RowLoss r2 = slm_loss(q2, 0, MarginFn{0.1});
    EXPECT_EQ(r2.loss, 0.0);
    EXPECT_EQ(r2.grad, std::vector<double>({0.0, 0.0}));

    // two violators, normalized by set size
    std::vector<double> q3 = {0.5, 0.9, 0.85};
    const RowLoss r3 = slm_loss(q3, 0, MarginFn{0.1});
    EXPECT_NEAR(r3.loss, 0.475, 1e-12);
    EXPECT_NEAR(r3.grad[1], 0.5, 1e-12);
    EXPECT_NEAR(r3.grad[2], 0.5, 1e-12);
    EXPECT_EQ(r3.grad[0], -1.0);
}

TEST(LmLoss, WorkedExamples) {
    std::vector<double> q1 = {1.0, 0.95, 0.5};
    const RowLoss r1 = lm_loss(q1, 0, MarginFn{0.1});
    EXPECT_NEAR(r1.loss, 0.05, 1e-12); // max(1.0, 1.05, 0.6) - 1.0

    // expert dominant by more than the margin everywhere
    std::vector<double> q2 = {2.0, 0.5, 0.1};
    const RowLoss r2 = lm_loss(q2, 0, MarginFn{0.1});
    EXPECT_EQ(r2.loss, 0.0);
    for (double g : r2.grad) EXPECT_EQ(g, 0.0); // argmax is the expert: +1 and -1 cancel

    // single-violator case: lm == slm exactly
    const RowLoss slm = slm_loss(q1, 0, MarginFn{0.1});
    EXPECT_EQ(r1.loss, slm.loss);
}

TEST(LmLoss, NonNegative) {
    Rng rng(5);
    for (int t = 0; t < 1000; ++t) {
        const auto q = random_row(rng, 2 + rng.below(6));
        const int e = rng.below(static_cast<int>(q.size()));
        EXPECT_GE(lm_loss(q, e, MarginFn{0.1}).loss, 0.0);
    }
}

TEST(CeLoss, ClosedForms) {
    // uniform row of width n -> ln n
    for (int n : {2, 3, 7}) {
        std::vector<double> q(n, 0.37);
        EXPECT_NEAR(ce_loss(q, 0, 10.0).loss, std::log(n), 1e-12);
    }
    // q=[2,0], beta=1, expert=0 -> ln(1+e^-2)
    std::vector<double> q = {2.0, 0.0};
    EXPECT_NEAR(ce_loss(q, 0, 1.0).loss, std::log(1.0 + std::exp(-2.0)), 1e-12);

    // expert logit far above the rest -> loss ~ 0
    std::vector<double> q2 = {50.0, 0.0, 0.0};
    EXPECT_NEAR(ce_loss(q2, 0, 1.0).loss, 0.0, 1e-12);
}

TEST(CeLoss, MonotoneInExpertEntry) {
    Rng rng(19);
    for (int t = 0; t < 200; ++t) {
        auto q = random_row(rng, 4);
        const double before = ce_loss(q, 1, 10.0).loss;
        q[1] += 0.25;
        EXPECT_LT(ce_loss(q, 1, 10.0).loss, before);
    }
}

TEST(MarginLosses, ShiftInvariance) {
    Rng rng(31);
    for (int t = 0; t < 500; ++t) {
        auto q = random_row(rng, 5);
        const int e = rng.below(5);
        const double c = rng.range(-3.0, 3.0);
        auto shifted = q;
        for (double& v : shifted) v += c;
        EXPECT_NEAR(slm_loss(q, e).loss, slm_loss(shifted, e).loss, 1e-12);
        EXPECT_NEAR(lm_loss(q, e).loss, lm_loss(shifted, e).loss, 1e-12);
    }
}

TEST(SlmLoss, ZeroIffEmptyViolationSet) {
    Rng rng(43);
    for (int t = 0; t < 5000; ++t) {
        const auto q = random_row(rng, 2 + rng.below(7));
        const int e = rng.below(static_cast<int>(q.size()));
        const MarginFn m{0.1};
        bool any = false;
        for (int a = 0; a < static_cast<int>(q.size()); ++a)
            if (q[a] > q[e] - m(e, a)) any = true;
        const double loss = slm_loss(q, e, m).loss;
        EXPECT_GE(loss, 0.0);
        EXPECT_EQ(loss == 0.0, !any);
    }
}

TEST(SlmLoss, MaskedActionsExcluded) {
    std::vector<double> q = {1.0, 0.95, 5.0};
    std::vector<char> mask = {1, 1, 0}; // the big entry is infeasible
    const RowLoss r = slm_loss(q, 0, MarginFn{0.1}, mask);
    EXPECT_NEAR(r.loss, 0.05, 1e-12);
    EXPECT_EQ(r.grad[2], 0.0);

    std::vector<char> none = {0, 0, 0};
    EXPECT_THROW(slm_loss(q, 0, MarginFn{0.1}, none), std::invalid_argument);
    std::vector<char> expert_masked = {0, 1, 1};
    EXPECT_THROW(slm_loss(q, 0, MarginFn{0.1}, expert_masked), std::invalid_argument);
}

TEST(Gradients, MatchCentralDifferences) {
    Rng rng(61);
    int checked = 0;
    for (int t = 0; t < 300; ++t) {
        const int n = 3 + rng.below(5);
        const auto q = random_row(rng, n);
        const int e = rng.below(n);
        const MarginFn m{0.1};

        // stay away from the max/set-membership kinks
        auto near_kink = [&] {
            for (int a = 0; a < n; ++a) {
                if (a == e) continue;
                if (std::abs(q[a] - (q[e] - m.l)) < 1e-3) return true;
                for (int b = 0; b < n; ++b)
                    if (a != b && std::abs((q[a] + m(e, a)) - (q[b] + m(e, b))) < 1e-3) return true;
            }
            return false;
        };
        if (near_kink()) continue;
        ++checked;

        const auto slm_fd = fd_grad([&](std::span<const double> row) { return slm_loss(row, e, m).loss; }, q);
        const auto slm_an = slm_loss(q, e, m).grad;
        for (int i = 0; i < n; ++i) EXPECT_NEAR(slm_an[i], slm_fd[i], 1e-6);

        const auto lm_fd = fd_grad([&](std::span<const double> row) { return lm_loss(row, e, m).loss; }, q);
        const auto lm_an = lm_loss(q, e, m).grad;
        for (int i = 0; i < n; ++i) EXPECT_NEAR(lm_an[i], lm_fd[i], 1e-6);

        const auto ce_fd =
            fd_grad([&](std::span<const double> row) { return ce_loss(row, e, 10.0).loss; }, q);
        const auto ce_an = ce_loss(q, e, 10.0).grad;
        for (int i = 0; i < n; ++i) EXPECT_NEAR(ce_an[i], ce_fd[i], 1e-5);
    }
    EXPECT_GT(checked, 100);
}

TEST(Gradients, TdMatchesCentralDifferences) {
    Rng rng(67);
    for (int t = 0; t < 200; ++t) {
        const double y = rng.range(-2.0, 2.0);
        double qp = rng.range(-2.0, 2.0);
        if (std::abs(std::abs(qp - y) - 1.0) < 1e-3) continue; // Huber kink
        const double h = 1e-6;
        const double fd = (td_loss(qp + h, y).first - td_loss(qp - h, y).first) / (2 * h);
        EXPECT_NEAR(td_loss(qp, y).second, fd, 1e-6);
    }
}
