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
/**
 * @file
 * Inductive harness: several disjoint graphs tagged train/val/test. Training
 * sees only the train graphs (batched as a disjoint union); evaluation runs
 * the frozen model on graphs it never saw.
 */
#pragma once

#include "qgat/errors.hpp"
#include "qgat/graph.hpp"
#include "qgat/training.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace qgat {

enum class Split { Train, Val, Test };

inline const char *to_string(Split s) {
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "?";
}

inline Split parse_split(const std::string &s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw ParseError("unknown split '" + s + "'");
}

/// Why a batch was assembled; gradient batches are counted per graph.
enum class Purpose { Gradient, Evaluation };

class GraphCollection {
  public:
    void add(Graph g, Split s) {
        validate(g);
        graphs_.push_back(std::move(g));
        splits_.push_back(s);
        gradient_reads_.push_back(0);
    }

    [[nodiscard]] std::size_t size() const { return graphs_.size(); }
    [[nodiscard]] const Graph &graph(std::size_t i) const { return graphs_.at(i); }
    [[nodiscard]] Split split(std::size_t i) const { return splits_.at(i); }

    [[nodiscard]] std::vector<std::size_t> members(Split s) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < graphs_.size(); ++i) {
            if (splits_[i] == s) out.push_back(i);
        }
        return out;
    }

    /// Times graph i was batched for gradient computation.
    [[nodiscard]] std::size_t gradient_reads(std::size_t i) const { return gradient_reads_.at(i); }

    /// Disjoint union of the split's graphs with node-index offsets.
    std::shared_ptr<const GraphBatch> batch(Split s, Purpose purpose) {
        const auto ids = members(s);
        if (ids.empty()) {
            throw ConfigError(std::string("collection has no ") + to_string(s) + " graphs");
        }
        std::vector<const Graph *> gs;
        for (auto i : ids) {
            gs.push_back(&graphs_[i]);
            if (purpose == Purpose::Gradient) ++gradient_reads_[i];
        }
        return GraphBatch::from_graph(disjoint_union(gs));
    }

    static Graph disjoint_union(const std::vector<const Graph *> &gs) {
        Graph u;
        const std::size_t d = gs.front()->feature_dim();
        std::size_t n = 0;
        for (const auto *g : gs) {
            if (g->feature_dim() != d) {
                throw DimensionError("disjoint_union: feature dimensions differ");
            }
            n += g->n_nodes;
        }
        u.n_nodes = n;
        u.features = Matrix(n, d);
        const bool ml = gs.front()->has_multilabels();
        const bool cl = gs.front()->has_classes();
        if (ml) u.multilabels = Matrix(n, gs.front()->multilabels.cols());
        std::size_t off = 0;
        for (const auto *g : gs) {
            std::copy(g->features.data().begin(), g->features.data().end(),
                      u.features.data().begin() + static_cast<long>(off * d));
            for (const auto &e : g->edges) u.edges.push_back({e.src + off, e.dst + off});
            if (cl) u.classes.insert(u.classes.end(), g->classes.begin(), g->classes.end());
            if (ml) {
                if (g->multilabels.cols() != u.multilabels.cols()) {
                    throw DimensionError("disjoint_union: label widths differ");
                }
                std::copy(g->multilabels.data().begin(), g->multilabels.data().end(),
                          u.multilabels.data().begin() +
                              static_cast<long>(off * u.multilabels.cols()));
            }
            off += g->n_nodes;
        }
        return u;
    }

  private:
    std::vector<Graph> graphs_;
    std::vector<Split> splits_;
    std::vector<std::size_t> gradient_reads_;
};

struct CollectionParams {
    std::size_t n_train = 2, n_val = 1, n_test = 1;
    SbmParams sbm;
    bool multilabel = true;
    std::size_t n_labels = 4; ///< multi-label width
};

/**
 * Independent SBM draws. In the multi-label variant each block carries a
 * random balanced label profile; node features are class_sep * (2*profile - 1)
 * on the first n_labels dimensions plus N(0, I), and a node's targets are its
 * block's profile.
 */
inline GraphCollection synth_collection(const CollectionParams &p, std::uint64_t seed) {
    if (p.n_train + p.n_val + p.n_test == 0) {
        throw ConfigError("synth_collection: at least one graph is required");
    }
    if (p.multilabel && (p.n_labels == 0 || p.n_labels > p.sbm.feature_dim)) {
        throw ConfigError("synth_collection: n_labels must lie in [1, feature_dim]");
    }
    std::mt19937_64 rng(seed);
    GraphCollection c;
    const std::size_t counts[3] = {p.n_train, p.n_val, p.n_test};
    const Split tags[3] = {Split::Train, Split::Val, Split::Test};
    // Profiles are shared by every graph so that labels transfer.
    std::vector<std::vector<int>> profiles(p.sbm.n_classes, std::vector<int>(p.n_labels, 0));
    std::bernoulli_distribution coin(0.5);
    for (auto &prof : profiles) {
        for (auto &b : prof) b = coin(rng) ? 1 : 0;
    }
    for (int s = 0; s < 3; ++s) {
        for (std::size_t k = 0; k < counts[s]; ++k) {
            Graph g = synth_sbm(p.sbm, rng());
            if (p.multilabel) {
                std::mt19937_64 frng(rng());
                std::normal_distribution<double> normal(0.0, 1.0);
                g.multilabels = Matrix(g.n_nodes, p.n_labels);
                for (std::size_t i = 0; i < g.n_nodes; ++i) {
                    const auto &prof = profiles[static_cast<std::size_t>(g.classes[i])];
                    for (std::size_t dd = 0; dd < g.feature_dim(); ++dd) {
                        double signal = dd < p.n_labels ? p.sbm.class_sep * (2.0 * prof[dd] - 1.0) : 0.0;
                        g.features(i, dd) = signal + normal(frng);
                    }
                    for (std::size_t l = 0; l < p.n_labels; ++l) g.multilabels(i, l) = prof[l];
                }
                g.classes.clear();
            }
            g.train_mask.clear();
            g.val_mask.clear();
            g.test_mask.clear();
            c.add(std::move(g), tags[s]);
        }
    }
    return c;
}

/// Builds task data: all nodes of each split's union are evaluated.
inline NodeTaskData inductive_task_data(GraphCollection &c, Task task) {
    if (task == Task::LinkPred) {
        throw ConfigError("inductive harness supports node-class and multi-label tasks");
    }
    NodeTaskData d;
    d.task = task;
    auto tr = c.batch(Split::Train, Purpose::Gradient);
    auto va = c.batch(Split::Val, Purpose::Evaluation);
    auto te = c.batch(Split::Test, Purpose::Evaluation);
    d.train = {tr, all_rows(tr->features.rows())};
    d.val = {va, all_rows(va->features.rows())};
    d.test = {te, all_rows(te->features.rows())};
    return d;
}

inline TrainResult train_inductive(Model &model, GraphCollection &c, const TrainConfig &cfg,
                                   const EpochCallback &cb = {}) {
    return train(model, inductive_task_data(c, cfg.task), cfg, cb);
}

/// Per-split metrics of a frozen model ({train, val, test}).
inline std::array<Evaluation, 3> eval_inductive(Model &model, GraphCollection &c, Task task) {
    std::array<Evaluation, 3> out;
    const Split splits[3] = {Split::Train, Split::Val, Split::Test};
    for (int s = 0; s < 3; ++s) {
        auto b = c.batch(splits[s], Purpose::Evaluation);
        const Matrix pred = model.predict(b->index, b->features);
        out[s] = evaluate_nodes(task, pred, *b, all_rows(b->features.rows()));
    }
    return out;
}

/**
 * Manifest: {"graphs": [{"path": "g0.json", "split": "train"}, ...]}.
 * Relative paths resolve against the manifest's directory.
 */
inline GraphCollection load_collection(const std::filesystem::path &manifest) {
    const std::string text = detail::read_text_file(manifest);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ParseError(manifest.string() + ": " + e.what());
    }
    if (!j.contains("graphs") || !j["graphs"].is_array()) {
        throw ParseError(manifest.string() + ": field 'graphs' missing or not an array");
    }
    GraphCollection c;
    for (std::size_t k = 0; k < j["graphs"].size(); ++k) {
        const auto &e = j["graphs"][k];
        const std::string f = "graphs[" + std::to_string(k) + "]";
        if (!e.is_object() || !e.contains("path") || !e.contains("split") ||
            !e["path"].is_string() || !e["split"].is_string()) {
            throw ParseError(manifest.string() + ": field '" + f + "': expected {path, split}");
        }
        std::filesystem::path p = e["path"].get<std::string>();
        if (p.is_relative()) p = manifest.parent_path() / p;
        Split s;
        try {
            s = parse_split(e["split"].get<std::string>());
        } catch (const ParseError &err) {
            throw ParseError(manifest.string() + ": field '" + f + ".split': " + err.what());
        }
        c.add(load_json_bundle(p), s);
    }
    return c;
}

inline void write_collection(const GraphCollection &c, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["graphs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < c.size(); ++i) {
        const std::string name = "graph" + std::to_string(i) + ".json";
        write_json_bundle(c.graph(i), dir / name);
        j["graphs"].push_back({{"path", name}, {"split", to_string(c.split(i))}});
    }
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << "\n";
}

} // namespace qgat
