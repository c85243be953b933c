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

#include "qgat/inductive.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace qgat;
namespace fs = std::filesystem;

namespace {

TrainConfig multilabel_config(LayerKind kind, std::size_t epochs) {
    TrainConfig c;
    c.task = Task::MultiLabel;
    c.model.kind = kind;
    c.model.in_dim = 8;
    c.model.out_dim = 4;
    c.epochs = epochs;
    return c;
}

} // namespace

TEST(Collection, TwoOneOneGivesFourGraphs) {
    auto c = synth_collection(CollectionParams{}, 3);
    ASSERT_EQ(c.size(), 4U);
    EXPECT_EQ(c.members(Split::Train), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(c.members(Split::Val), (std::vector<std::size_t>{2}));
    EXPECT_EQ(c.members(Split::Test), (std::vector<std::size_t>{3}));
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_TRUE(c.graph(i).has_multilabels());
        EXPECT_EQ(c.graph(i).multilabels.cols(), 4U);
        EXPECT_FALSE(c.graph(i).has_masks());
    }
    EXPECT_NE(c.graph(0).features.data(), c.graph(1).features.data());
}

TEST(Collection, SameSeedSameCollection) {
    auto a = synth_collection(CollectionParams{}, 5), b = synth_collection(CollectionParams{}, 5);
    auto c = synth_collection(CollectionParams{}, 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.graph(i), b.graph(i));
        EXPECT_EQ(a.split(i), b.split(i));
    }
    EXPECT_NE(a.graph(0), c.graph(0));
}

TEST(Collection, UnionOffsetsKeepGraphsDisjoint) {
    auto c = synth_collection(CollectionParams{}, 7);
    const Graph &g0 = c.graph(0), &g1 = c.graph(1);
    Graph u = GraphCollection::disjoint_union({&g0, &g1});
    EXPECT_EQ(u.n_nodes, g0.n_nodes + g1.n_nodes);
    EXPECT_EQ(u.edges.size(), g0.edges.size() + g1.edges.size());
    for (std::size_t e = 0; e < u.edges.size(); ++e) {
        const bool first = e < g0.edges.size();
        EXPECT_EQ(u.edges[e].src < g0.n_nodes, first);
        EXPECT_EQ(u.edges[e].dst < g0.n_nodes, first);
    }
    for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(u.features(g0.n_nodes, k), g1.features(0, k));
    EXPECT_EQ(u.multilabels(g0.n_nodes + 3, 1), g1.multilabels(3, 1));
}

TEST(Collection, BatchedForwardEqualsPerGraphForward) {
    CollectionParams p;
    p.n_train = 3;
    auto c = synth_collection(p, 8);
    for (auto kind : {LayerKind::QGAT, LayerKind::GAT, LayerKind::GATv2}) {
        auto cfg = multilabel_config(kind, 0);
        Model m(cfg.model, 1);
        auto b = c.batch(Split::Train, Purpose::Evaluation);
        Matrix all = m.predict(b->index, b->features);
        std::size_t off = 0;
        for (auto i : c.members(Split::Train)) {
            const Graph &g = c.graph(i);
            Matrix one = m.predict(build_message_index(g), g.features);
            for (std::size_t r = 0; r < g.n_nodes; ++r)
                for (std::size_t k = 0; k < one.cols(); ++k) ASSERT_EQ(all(off + r, k), one(r, k)) << to_string(kind);
            off += g.n_nodes;
        }
    }
}

TEST(Inductive, HeldOutGraphsNeverReachGradients) {
    auto c = synth_collection(CollectionParams{}, 9);
    auto cfg = multilabel_config(LayerKind::GAT, 5);
    Model m(cfg.model, 0);
    train_inductive(m, c, cfg);
    eval_inductive(m, c, Task::MultiLabel);
    EXPECT_GT(c.gradient_reads(0), 0U);
    EXPECT_GT(c.gradient_reads(1), 0U);
    EXPECT_EQ(c.gradient_reads(2), 0U);
    EXPECT_EQ(c.gradient_reads(3), 0U);
}

TEST(Inductive, EvaluatingTrainGraphsReproducesTrainingMetric) {
    auto c = synth_collection(CollectionParams{}, 10);
    auto cfg = multilabel_config(LayerKind::GATv2, 20);
    Model m(cfg.model, 0);
    auto res = train_inductive(m, c, cfg);
    auto ev = eval_inductive(m, c, Task::MultiLabel);
    EXPECT_EQ(ev[0].metric, res.best.train.metric);
    EXPECT_EQ(ev[0].loss, res.best.train.loss);
    EXPECT_EQ(ev[2].metric, res.best.test.metric);
}

TEST(Inductive, UntrainedModelIsNearChance) {
    auto c = synth_collection(CollectionParams{}, 11);
    double sum = 0;
    const int n = 10;
    for (int s = 0; s < n; ++s) {
        auto cfg = multilabel_config(LayerKind::QGAT, 0);
        Model m(cfg.model, static_cast<std::uint64_t>(s));
        sum += eval_inductive(m, c, Task::MultiLabel)[2].metric;
    }
    EXPECT_NEAR(sum / n, 0.5, 0.2);
}

TEST(Inductive, TrainedQgatGeneralizesToHeldOutGraphs) {
    auto c = synth_collection(CollectionParams{}, 0);
    auto cfg = multilabel_config(LayerKind::QGAT, 200);
    Model m(cfg.model, 0);
    train_inductive(m, c, cfg);
    auto ev = eval_inductive(m, c, Task::MultiLabel);
    EXPECT_GE(ev[2].metric, 0.90);
}

TEST(Inductive, EmptySplitIsAnError) {
    CollectionParams p;
    p.n_val = 0;
    auto c = synth_collection(p, 1);
    auto cfg = multilabel_config(LayerKind::GAT, 1);
    Model m(cfg.model, 0);
    EXPECT_THROW(train_inductive(m, c, cfg), ConfigError);
    EXPECT_THROW(eval_inductive(m, c, Task::MultiLabel), ConfigError);
    p.n_train = p.n_test = 0;
    EXPECT_THROW(synth_collection(p, 1), ConfigError);
}

TEST(Inductive, NodeClassVariant) {
    CollectionParams p;
    p.multilabel = false;
    auto c = synth_collection(p, 2);
    EXPECT_TRUE(c.graph(0).has_classes());
    TrainConfig cfg;
    cfg.model.kind = LayerKind::GAT;
    cfg.model.in_dim = 8;
    cfg.model.out_dim = 2;
    cfg.epochs = 60;
    Model m(cfg.model, 0);
    train_inductive(m, c, cfg);
    EXPECT_GE(eval_inductive(m, c, Task::NodeClass)[2].metric, 0.9);
}

TEST(Manifest, RoundTrip) {
    const fs::path dir = fs::temp_directory_path() / ("qgat_manifest_" + std::to_string(::getpid()));
    auto c = synth_collection(CollectionParams{}, 12);
    write_collection(c, dir);
    auto back = load_collection(dir / "manifest.json");
    ASSERT_EQ(back.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_EQ(back.graph(i), c.graph(i));
        EXPECT_EQ(back.split(i), c.split(i));
    }
    std::ofstream(dir / "bad.json") << R"({"graphs": [{"path": "graph0.json", "split": "holdout"}]})";
    try {
        load_collection(dir / "bad.json");
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_NE(std::string(e.what()).find("graphs[0].split"), std::string::npos) << e.what();
    }
    std::ofstream(dir / "bad2.json") << R"({"items": []})";
    EXPECT_THROW(load_collection(dir / "bad2.json"), ParseError);
    fs::remove_all(dir);
}
