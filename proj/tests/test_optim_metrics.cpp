// Copyright 2026 The qgat Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qgat/metrics.hpp"
#include "qgat/optim.hpp"
#include "qgat/training.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace qgat;

namespace {

// Textbook scalar AdamW with decoupled weight decay.
struct ScalarAdamW {
    double m = 0, v = 0;
    int t = 0;
    double step(double p, double g, double lr, double wd) {
        ++t;
        p = p - lr * wd * p;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1 - std::pow(0.9, t));
        const double vh = v / (1 - std::pow(0.999, t));
        return p - lr * mh / (std::sqrt(vh) + 1e-8);
    }
};

double brute_auc(const std::vector<double> &s, const std::vector<int> &y) {
    double num = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[i] == 1 && y[j] == 0) {
                pairs += 1;
                num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
        }
    }
    return num / pairs;
}

} // namespace

TEST(AdamW, ZeroGradientZeroDecayLeavesParameters) {
    Matrix p{{1.5, -2.0}};
    std::vector<Matrix *> ps{&p};
    AdamWState st;
    adamw_step(ps, {Matrix(1, 2)}, st, 0.1, 0.0);
    EXPECT_EQ(p(0, 0), 1.5);
    EXPECT_EQ(p(0, 1), -2.0);
    EXPECT_EQ(st.step, 1U);
    ASSERT_EQ(st.m.size(), 1U);
}

TEST(AdamW, FirstStepMovesAgainstGradient) {
    Matrix p{{1.0}};
    AdamWState st;
    adamw_step({&p}, {Matrix{{1.0}}}, st, 0.1, 0.0);
    EXPECT_LT(p(0, 0), 1.0);
    EXPECT_NEAR(p(0, 0), 0.9, 1e-8);
}

TEST(AdamW, DecoupledDecayShrinksWithoutGradient) {
    Matrix p{{2.0}};
    AdamWState st;
    adamw_step({&p}, {Matrix{{0.0}}}, st, 0.1, 0.5);
    EXPECT_DOUBLE_EQ(p(0, 0), 2.0 * (1 - 0.05));
}

TEST(AdamW, MatchesReferenceOverManySteps) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 1);
    Matrix p(2, 3);
    for (auto &v : p.data()) v = n(rng);
    std::vector<ScalarAdamW> ref(6);
    std::vector<double> q(p.data());
    AdamWState st;
    for (int s = 0; s < 50; ++s) {
        Matrix g(2, 3);
        for (auto &v : g.data()) v = n(rng);
        const double lr = cosine_lr(static_cast<std::size_t>(s), 50, 0.01, 1e-4);
        adamw_step({&p}, {g}, st, lr, 5e-4);
        for (std::size_t k = 0; k < 6; ++k) q[k] = ref[k].step(q[k], g.data()[k], lr, 5e-4);
    }
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(p.data()[k], q[k], 1e-14);
}

TEST(AdamW, NonFiniteGradientNamesTensorAndKeepsParameters) {
    Matrix a{{1.0}}, b{{2.0}};
    AdamWState st;
    std::vector<std::string> names{"layer0.W", "layer0.P"};
    try {
        adamw_step({&a, &b}, {Matrix{{0.1}}, Matrix{{std::nan("")}}}, st, 0.1, 0.0, {}, &names);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError &e) {
        EXPECT_NE(std::string(e.what()).find("layer0.P"), std::string::npos);
    }
    EXPECT_EQ(a(0, 0), 1.0);
    EXPECT_EQ(b(0, 0), 2.0);
    EXPECT_THROW(adamw_step({&a}, {Matrix{{INFINITY}}}, st, 0.1, 0.0), DivergenceError);
    EXPECT_THROW(adamw_step({&a}, {Matrix(2, 2)}, st, 0.1, 0.0), DimensionError);
}

TEST(CosineLr, Endpoints) {
    EXPECT_DOUBLE_EQ(cosine_lr(0, 100, 0.01, 0.001), 0.01);
    EXPECT_DOUBLE_EQ(cosine_lr(100, 100, 0.01, 0.001), 0.001);
    EXPECT_NEAR(cosine_lr(50, 100, 0.01, 0.001), 0.0055, 1e-15);
    EXPECT_DOUBLE_EQ(cosine_lr(150, 100, 0.01, 0.001), 0.001);
    for (std::size_t s = 1; s <= 100; ++s) EXPECT_LE(cosine_lr(s, 100, 0.01, 0.001), cosine_lr(s - 1, 100, 0.01, 0.001));
}

TEST(Loss, ConfidentCorrectCrossEntropyIsTiny) {
    Matrix z{{10.0, -10.0}};
    std::vector<int> y{0};
    EXPECT_LT(softmax_cross_entropy(z, y).value, 1e-4);
    EXPECT_GT(softmax_cross_entropy(z, std::vector<int>{1}).value, 19.0);
}

TEST(Loss, UniformBinaryPredictionGivesLn2) {
    Matrix z(3, 4, 0.0), y(3, 4);
    y(0, 1) = 1;
    y(2, 3) = 1;
    EXPECT_NEAR(bce_with_logits(z, y).value, std::numbers::ln2, 1e-15);
}

TEST(Loss, GradientsMatchFiniteDifferences) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0, 2);
    Matrix z(5, 3);
    for (auto &v : z.data()) v = n(rng);
    std::vector<int> y{0, 2, 1, 1, 0};
    Matrix t(5, 3);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = (i % 3 == 0) ? 1.0 : 0.0;
    std::vector<std::size_t> rows{0, 2, 3};
    auto ce = softmax_cross_entropy(z, y, rows);
    auto bce = bce_with_logits(z, t, rows);
    const double h = 1e-6;
    for (std::size_t k = 0; k < z.size(); ++k) {
        Matrix zp = z, zm = z;
        zp.data()[k] += h;
        zm.data()[k] -= h;
        const double fd_ce =
            (softmax_cross_entropy(zp, y, rows).value - softmax_cross_entropy(zm, y, rows).value) / (2 * h);
        const double fd_bce = (bce_with_logits(zp, t, rows).value - bce_with_logits(zm, t, rows).value) / (2 * h);
        EXPECT_NEAR(ce.grad.data()[k], fd_ce, 1e-6);
        EXPECT_NEAR(bce.grad.data()[k], fd_bce, 1e-6);
    }
    EXPECT_EQ(ce.grad(1, 0), 0.0);
}

TEST(Loss, LabelOutOfRange) {
    Matrix z(2, 3);
    EXPECT_THROW(softmax_cross_entropy(z, std::vector<int>{0, 3}), InputError);
    EXPECT_THROW(softmax_cross_entropy(z, std::vector<int>{0, -1}), InputError);
    EXPECT_THROW(softmax_cross_entropy(z, std::vector<int>{0}), DimensionError);
}

TEST(Metrics, AccuracyExamples) {
    std::vector<int> y{0, 1, 2, 1};
    EXPECT_EQ(accuracy(y, y), 1.0);
    EXPECT_EQ(accuracy(std::vector<int>{0, 1, 0, 0}, y), 0.5);
    EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), InputError);
    EXPECT_EQ(argmax_rows(Matrix{{0.1, 0.7, 0.2}, {3, -1, 2}}), (std::vector<int>{1, 0}));
}

TEST(Metrics, MicroF1PoolsEntries) {
    Matrix z{{1, -1}, {1, 1}}, y{{1, 0}, {0, 1}};
    EXPECT_DOUBLE_EQ(micro_f1(z, y), 0.8);
    EXPECT_DOUBLE_EQ(micro_f1(Matrix{{2, -1}, {-3, 0.5}}, y), 1.0);
    EXPECT_DOUBLE_EQ(micro_f1(Matrix(2, 2, -1.0), Matrix(2, 2)), 1.0);
    EXPECT_DOUBLE_EQ(micro_f1(Matrix(2, 2, -1.0), y), 0.0);
}

TEST(Metrics, AucExamplesAndBruteForce) {
    std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    std::vector<int> y{0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(*roc_auc(s, y), 0.75);
    EXPECT_DOUBLE_EQ(*roc_auc(std::vector<double>{0.1, 0.2, 0.9}, std::vector<int>{0, 0, 1}), 1.0);
    EXPECT_FALSE(roc_auc(s, std::vector<int>{1, 1, 1, 1}).has_value());
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng() % 40;
        std::vector<double> sc(n);
        std::vector<int> lab(n);
        for (std::size_t i = 0; i < n; ++i) {
            sc[i] = static_cast<double>(rng() % 10) / 10.0; // ties on purpose
            lab[i] = static_cast<int>(rng() % 2);
        }
        lab[0] = 0;
        lab[1] = 1;
        EXPECT_NEAR(*roc_auc(sc, lab), brute_auc(sc, lab), 1e-9);
    }
}

TEST(Metrics, AucOfRandomScoresIsNearHalf) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> s(20000);
    std::vector<int> y(20000);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = u(rng);
        y[i] = static_cast<int>(rng() % 2);
    }
    EXPECT_NEAR(*roc_auc(s, y), 0.5, 0.02);
}

TEST(Metrics, HitsAtKExamplesAndBruteForce) {
    EXPECT_EQ(hits_at_k(std::vector<double>{0.9}, std::vector<double>{0.1, 0.5, 0.3}, 1), 1.0);
    EXPECT_EQ(hits_at_k(std::vector<double>{0.4}, std::vector<double>{0.1, 0.5, 0.3}, 1), 0.0);
    EXPECT_EQ(hits_at_k(std::vector<double>{0.4}, std::vector<double>{0.1, 0.5, 0.3}, 2), 1.0);
    EXPECT_EQ(hits_at_k(std::vector<double>{0.5}, std::vector<double>{0.5}, 1), 0.0);
    EXPECT_EQ(hits_at_k(std::vector<double>{-5.0}, std::vector<double>{0.5}, 50), 1.0);
    EXPECT_THROW(hits_at_k(std::vector<double>{}, std::vector<double>{1.0}, 1), InputError);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pos(1 + rng() % 10), neg(5 + rng() % 30);
        for (auto &v : pos) v = static_cast<double>(rng() % 20);
        for (auto &v : neg) v = static_cast<double>(rng() % 20);
        const std::size_t k = 1 + rng() % 5;
        double hits = 0;
        for (double p : pos) {
            const auto above = std::count_if(neg.begin(), neg.end(), [&](double v) { return v >= p; });
            hits += static_cast<std::size_t>(above) < k ? 1 : 0;
        }
        EXPECT_DOUBLE_EQ(hits_at_k(pos, neg, k), hits / static_cast<double>(pos.size()));
    }
}

TEST(Metrics, MrrExamplesAndBruteForce) {
    EXPECT_DOUBLE_EQ(mrr_shared(std::vector<double>{0.9, 0.2}, std::vector<double>{0.5, 0.1}), (1.0 + 0.5) / 2);
    EXPECT_DOUBLE_EQ(mrr_shared(std::vector<double>{0.5}, std::vector<double>{0.5}), 1.0 / 1.5);
    EXPECT_THROW(mrr(std::vector<double>{0.1}, {}), DimensionError);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pos(1 + rng() % 8);
        std::vector<std::vector<double>> negs;
        double expect = 0;
        for (auto &p : pos) {
            p = u(rng);
            std::vector<double> n(1 + rng() % 10);
            for (auto &v : n) v = u(rng);
            std::vector<double> all(n);
            all.push_back(p);
            std::sort(all.begin(), all.end(), std::greater<>());
            expect += 1.0 / static_cast<double>(std::find(all.begin(), all.end(), p) - all.begin() + 1);
            negs.push_back(n);
        }
        EXPECT_NEAR(mrr(pos, negs), expect / static_cast<double>(pos.size()), 1e-12);
    }
}
