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

#include "oracle.hpp"
#include "qgat/vqc.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qgat;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64 &rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(n);
    for (auto &x : v) x = normal(rng);
    return v;
}

double weighted(const std::vector<double> &z, const std::vector<double> &w) {
    double s = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) s += z[k] * w[k];
    return s;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3}); }

} // namespace

TEST(BuildLayout, FiveQubitsTwoLayers) {
    auto l = build_layout(5, 2);
    EXPECT_EQ(l.ranges, (std::vector<std::size_t>{1, 2}));
}

TEST(BuildLayout, TwoQubitsOnlyRangeOne) {
    EXPECT_EQ(build_layout(2, 3).ranges, (std::vector<std::size_t>{1, 1, 1}));
}

TEST(BuildLayout, TargetWrapsAround) { EXPECT_EQ(EntanglingLayout::target(4, 2, 5), 1U); }

TEST(BuildLayout, CyclesThroughRanges) {
    EXPECT_EQ(build_layout(4, 7).ranges, (std::vector<std::size_t>{1, 2, 3, 1, 2, 3, 1}));
}

TEST(BuildLayout, RejectsSingleQubit) {
    EXPECT_THROW(build_layout(1, 2), ConfigError);
    EXPECT_THROW(build_layout(0, 1), ConfigError);
}

TEST(CircuitForward, ZeroAnglesOnGroundState) {
    CircuitParams p(2, 3);
    auto z = circuit_forward(std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0}, p, build_layout(3, 2));
    for (double v : z) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(CircuitForward, ZeroAnglesReduceToEncodingPlusRings) {
    std::mt19937_64 rng(1);
    const std::size_t n = 3, L = 2;
    CircuitParams p(L, n);
    auto layout = build_layout(n, L);
    auto x = random_vector(8, rng);
    auto z = circuit_forward(x, p, layout);
    auto ref = qgat::testing::dense_circuit(x, n, L, p.angles(), layout.ranges);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(z[k], ref[k], 1e-12);
}

TEST(CircuitForward, RandomAnglesMatchDenseOracle) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial % 3, L = 1 + trial % 3;
        auto p = CircuitParams::random(L, n, rng);
        auto layout = build_layout(n, L);
        auto x = random_vector(std::size_t{1} << n, rng);
        auto z = circuit_forward(x, p, layout);
        auto ref = qgat::testing::dense_circuit(x, n, L, p.angles(), layout.ranges);
        for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(z[k], ref[k], 1e-10);
    }
}

TEST(CircuitForward, ShapeMismatchIsConfigError) {
    CircuitParams p(2, 3);
    EXPECT_THROW(circuit_forward(std::vector<double>{1, 0}, p, build_layout(4, 2)), ConfigError);
    EXPECT_THROW(circuit_forward(std::vector<double>{1, 0}, p, build_layout(3, 1)), ConfigError);
}

TEST(CircuitForward, OutputsBoundedAndDeterministic) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 4;
        auto p = CircuitParams::random(2, n, rng);
        auto x = random_vector(std::size_t{1} << n, rng);
        auto a = circuit_forward(x, p, build_layout(n, 2));
        auto b = circuit_forward(x, p, build_layout(n, 2));
        EXPECT_EQ(a, b);
        for (double v : a) {
            EXPECT_GE(v, -1.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(CircuitForward, ScaleInvariance) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = CircuitParams::random(2, 3, rng);
        auto layout = build_layout(3, 2);
        auto x = random_vector(8, rng);
        auto base = circuit_forward(x, p, layout);
        // Power-of-two scales are exact in floating point.
        for (double c : {0.25, 2.0, 1024.0}) {
            auto y = x;
            for (auto &v : y) v *= c;
            EXPECT_EQ(circuit_forward(y, p, layout), base);
        }
        for (double c : {0.3, 7.1, 1e4}) {
            auto y = x;
            for (auto &v : y) v *= c;
            auto z = circuit_forward(y, p, layout);
            for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(z[k], base[k], 1e-12);
        }
    }
}

TEST(CircuitBackward, ZeroUpstreamGivesZeroGradients) {
    std::mt19937_64 rng(5);
    auto p = CircuitParams::random(2, 3, rng);
    auto g = circuit_backward(random_vector(8, rng), p, build_layout(3, 2), std::vector<double>(3, 0.0));
    for (double v : g.params) EXPECT_EQ(v, 0.0);
    for (double v : g.input) EXPECT_EQ(v, 0.0);
}

TEST(CircuitBackward, SingleQubitRyDerivative) {
    for (double mu : {0.0, 0.4, 1.3, 2.9, -2.2}) {
        CircuitParams p(1, 1);
        p.at(0, 0, 0) = 0.37; // outer RZ
        p.at(0, 0, 1) = mu;   // RY
        p.at(0, 0, 2) = -1.1; // inner RZ
        auto layout = default_layout(1, 1);
        auto z = circuit_forward(std::vector<double>{1, 0}, p, layout);
        EXPECT_NEAR(z[0], std::cos(mu), 1e-14);
        auto g = circuit_backward(std::vector<double>{1, 0}, p, layout, std::vector<double>{1.0});
        EXPECT_NEAR(g.params[1], -std::sin(mu), 1e-14);
        EXPECT_NEAR(g.params[0], 0.0, 1e-14);
        EXPECT_NEAR(g.params[2], 0.0, 1e-14);
    }
}

TEST(CircuitBackward, MatchesCentralDifferencesOnFiftyConfigs) {
    std::mt19937_64 rng(6);
    const double h = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 3, L = 1 + (trial / 3) % 3;
        auto p = CircuitParams::random(L, n, rng);
        auto layout = build_layout(n, L);
        auto x = random_vector(std::size_t{1} << n, rng);
        auto w = random_vector(n, rng);
        auto g = circuit_backward(x, p, layout, w);
        ASSERT_EQ(g.params.size(), param_count(L, n));
        ASSERT_EQ(g.input.size(), x.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            auto pp = p, pm = p;
            pp.angles()[i] += h;
            pm.angles()[i] -= h;
            const double fd =
                (weighted(circuit_forward(x, pp, layout), w) - weighted(circuit_forward(x, pm, layout), w)) /
                (2 * h);
            worst = std::max(worst, rel_err(g.params[i], fd));
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            auto xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd =
                (weighted(circuit_forward(xp, p, layout), w) - weighted(circuit_forward(xm, p, layout), w)) /
                (2 * h);
            worst = std::max(worst, rel_err(g.input[i], fd));
        }
    }
    EXPECT_LE(worst, 1e-5);
}

TEST(CircuitBackward, ParameterShiftAgrees) {
    std::mt19937_64 rng(7);
    const double s = std::numbers::pi / 2;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 2 + trial % 3;
        auto p = CircuitParams::random(2, n, rng);
        auto layout = build_layout(n, 2);
        auto x = random_vector(std::size_t{1} << n, rng);
        auto w = random_vector(n, rng);
        auto g = circuit_backward(x, p, layout, w);
        for (std::size_t i = 0; i < p.size(); ++i) {
            auto pp = p, pm = p;
            pp.angles()[i] += s;
            pm.angles()[i] -= s;
            const double shift =
                (weighted(circuit_forward(x, pp, layout), w) - weighted(circuit_forward(x, pm, layout), w)) / 2;
            EXPECT_NEAR(g.params[i], shift, 1e-12);
        }
    }
}

TEST(CircuitBackward, InputGradientOrthogonalToInput) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + trial % 3;
        auto p = CircuitParams::random(3, n, rng);
        auto x = random_vector(std::size_t{1} << n, rng);
        auto g = circuit_backward(x, p, build_layout(n, 3), random_vector(n, rng));
        double dot = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) dot += g.input[i] * x[i];
        EXPECT_LE(std::abs(dot), 1e-8);
    }
}

TEST(CircuitBackward, ZeroInputGetsZeroInputGradient) {
    std::mt19937_64 rng(9);
    auto p = CircuitParams::random(2, 2, rng);
    auto g = circuit_backward(std::vector<double>(4, 0.0), p, build_layout(2, 2), std::vector<double>{1.0, -0.5});
    for (double v : g.input) EXPECT_EQ(v, 0.0);
}

TEST(CircuitBackward, ShortInputIsPaddedConsistently) {
    std::mt19937_64 rng(10);
    auto p = CircuitParams::random(2, 3, rng);
    auto layout = build_layout(3, 2);
    std::vector<double> x{0.3, -1.2, 0.8};
    auto padded = x;
    padded.resize(8, 0.0);
    EXPECT_EQ(circuit_forward(x, p, layout), circuit_forward(padded, p, layout));
    auto g = circuit_backward(x, p, layout, std::vector<double>{1, 1, 1});
    EXPECT_EQ(g.input.size(), 3U);
}

TEST(ParamCount, Examples) {
    EXPECT_EQ(param_count(1, 1), 3U);
    EXPECT_EQ(param_count(2, 5), 30U);
    for (std::size_t nq = 1; nq <= 6; ++nq)
        for (std::size_t L = 0; L <= 4; ++L) EXPECT_EQ(param_count(L + 1, nq) - param_count(L, nq), 3 * nq);
    EXPECT_EQ(param_count(3, 4) - param_count(2, 4), 12U);
}

TEST(CircuitParams, IndexLayoutAndInitRange) {
    std::mt19937_64 rng(11);
    auto p = CircuitParams::random(3, 4, rng);
    EXPECT_EQ(p.size(), 36U);
    for (double a : p.angles()) {
        EXPECT_GE(a, 0.0);
        EXPECT_LT(a, 2 * std::numbers::pi);
    }
    EXPECT_EQ(&p.at(1, 2, 1), &p.angles()[(1 * 4 + 2) * 3 + 1]);
}
