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
 * Losses, task datasets, full-batch training with early stopping, and
 * checkpoint files.
 */
#pragma once

#include "qgat/errors.hpp"
#include "qgat/graph.hpp"
#include "qgat/matrix.hpp"
#include "qgat/metrics.hpp"
#include "qgat/model.hpp"
#include "qgat/optim.hpp"
#include "qgat/tape.hpp"

#include <json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace qgat {

enum class Task { NodeClass, MultiLabel, LinkPred };

inline const char *to_string(Task t) {
    switch (t) {
    case Task::NodeClass: return "node-class";
    case Task::MultiLabel: return "multi-label";
    case Task::LinkPred: return "link-pred";
    }
    return "?";
}

inline Task parse_task(const std::string &s) {
    if (s == "node-class") return Task::NodeClass;
    if (s == "multi-label") return Task::MultiLabel;
    if (s == "link-pred") return Task::LinkPred;
    throw ConfigError("unknown task '" + s + "' (expected node-class, multi-label or link-pred)");
}

// ---------------------------------------------------------------------------
// Losses

struct LossResult {
    double value = 0.0;
    Matrix grad; ///< d value / d logits, same shape as the logits
};

/// Mean softmax cross-entropy over `rows` (all rows when empty).
inline LossResult softmax_cross_entropy(const Matrix &logits, std::span<const int> labels,
                                        std::span<const std::size_t> rows = {}) {
    std::vector<std::size_t> all;
    if (rows.empty()) {
        all.resize(logits.rows());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        rows = all;
    }
    if (labels.size() != logits.rows()) {
        throw DimensionError("cross_entropy: one label per row required");
    }
    LossResult r{0.0, Matrix(logits.rows(), logits.cols())};
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (auto i : rows) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= logits.cols()) {
            throw InputError("cross_entropy: label " + std::to_string(y) + " out of range for " +
                             std::to_string(logits.cols()) + " classes");
        }
        auto z = logits.row(i);
        double m = z[0];
        for (double v : z) m = std::max(m, v);
        double s = 0.0;
        for (double v : z) s += std::exp(v - m);
        const double lse = m + std::log(s);
        r.value += (lse - z[static_cast<std::size_t>(y)]) * inv;
        for (std::size_t c = 0; c < z.size(); ++c) {
            r.grad(i, c) = (std::exp(z[c] - lse) - (static_cast<int>(c) == y ? 1.0 : 0.0)) * inv;
        }
    }
    return r;
}

/// Mean binary cross-entropy with logits over `rows` x all columns.
inline LossResult bce_with_logits(const Matrix &logits, const Matrix &targets,
                                  std::span<const std::size_t> rows = {}) {
    logits.require_same_shape(targets, "bce_with_logits");
    std::vector<std::size_t> all;
    if (rows.empty()) {
        all.resize(logits.rows());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        rows = all;
    }
    LossResult r{0.0, Matrix(logits.rows(), logits.cols())};
    const double inv = 1.0 / static_cast<double>(rows.size() * logits.cols());
    for (auto i : rows) {
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            const double z = logits(i, c), y = targets(i, c);
            // log(1 + e^z) - y z, stable form.
            r.value += (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)))) * inv;
            r.grad(i, c) = (1.0 / (1.0 + std::exp(-z)) - y) * inv;
        }
    }
    return r;
}

/// Wraps a precomputed LossResult as a 1x1 tape node.
inline Var loss_node(GradTape &t, Var logits, LossResult r) {
    return t.push(Matrix(1, 1, r.value), t.requires_grad(logits),
                  [logits, g = std::move(r.grad)](GradTape &t, const Matrix &up) {
                      Matrix gl = g;
                      for (auto &v : gl.data()) v *= up[0];
                      t.accumulate(logits, gl);
                  });
}

// ---------------------------------------------------------------------------
// Task data

/// Features, message index and targets of one (possibly batched) graph.
struct GraphBatch {
    Matrix features;
    MessageIndex index;
    std::vector<int> classes;
    Matrix multilabels;

    static std::shared_ptr<const GraphBatch> from_graph(const Graph &g) {
        auto b = std::make_shared<GraphBatch>();
        b->features = g.features;
        b->index = build_message_index(g);
        b->classes = g.classes;
        b->multilabels = g.multilabels;
        return b;
    }
};

struct NodeSplit {
    std::shared_ptr<const GraphBatch> batch;
    std::vector<std::size_t> rows;
};

inline std::vector<std::size_t> mask_rows(const Mask &m) {
    std::vector<std::size_t> r;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i]) r.push_back(i);
    }
    return r;
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = i;
    return r;
}

struct NodeTaskData {
    Task task = Task::NodeClass;
    NodeSplit train, val, test;

    /// Transductive split of one graph by its masks.
    static NodeTaskData transductive(const Graph &g, Task task) {
        if (!g.has_masks()) {
            throw ConfigError("transductive training needs train/val/test masks");
        }
        if (task == Task::NodeClass && !g.has_classes()) {
            throw ConfigError("node classification needs class labels");
        }
        if (task == Task::MultiLabel && !g.has_multilabels()) {
            throw ConfigError("multi-label classification needs multi-label targets");
        }
        auto b = GraphBatch::from_graph(g);
        return {task,
                {b, mask_rows(g.train_mask)},
                {b, mask_rows(g.val_mask)},
                {b, mask_rows(g.test_mask)}};
    }
};

struct LinkTaskData {
    std::shared_ptr<const GraphBatch> batch; ///< message-passing (training) graph
    std::vector<Edge> train_pos, val_pos, val_neg, test_pos, test_neg;
    std::size_t n_nodes = 0;
    std::unordered_set<std::uint64_t> train_edges; ///< excluded from per-epoch negatives
    std::size_t neg_ratio = 1;
    std::size_t hits_k = 50;

    static LinkTaskData from_split(const LinkSplit &s, std::size_t neg_ratio, std::size_t hits_k) {
        LinkTaskData d;
        d.batch = GraphBatch::from_graph(s.train_graph);
        d.train_pos = s.train_pos;
        d.val_pos = s.val_pos;
        d.val_neg = s.val_neg;
        d.test_pos = s.test_pos;
        d.test_neg = s.test_neg;
        d.n_nodes = s.train_graph.n_nodes;
        for (const auto &e : s.train_pos) d.train_edges.insert(pair_key(e.src, e.dst));
        d.neg_ratio = neg_ratio;
        d.hits_k = hits_k;
        return d;
    }
};

// ---------------------------------------------------------------------------
// Training loop

struct TrainConfig {
    ModelConfig model;
    Task task = Task::NodeClass;
    double learning_rate = 2e-3;
    double lr_min = 0.0;
    double weight_decay = 5e-4;
    std::size_t epochs = 200;
    std::size_t patience = 100;
    std::uint64_t seed = 0;

    void validate() const {
        model.validate();
        if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
            throw ConfigError("training: learning rate must be > 0");
        }
        if (lr_min < 0 || weight_decay < 0) {
            throw ConfigError("training: lr_min and weight_decay must be >= 0");
        }
        if (patience == 0) {
            throw ConfigError("training: patience must be >= 1");
        }
    }
};

struct Evaluation {
    double loss = 0.0;
    double metric = 0.0;
    double mrr = std::numeric_limits<double>::quiet_NaN(); ///< link prediction only
};

struct MetricsRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double seconds = 0.0;
    Evaluation train, val, test;
};

struct TrainResult {
    std::vector<MetricsRecord> history;
    std::size_t best_epoch = 0;
    MetricsRecord best;
    std::vector<Matrix> checkpoint;
};

namespace detail {

inline std::vector<double> edge_scores(const Matrix &emb, const std::vector<Edge> &edges) {
    std::vector<double> s(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        double d = 0.0;
        for (std::size_t c = 0; c < emb.cols(); ++c) d += emb(edges[e].src, c) * emb(edges[e].dst, c);
        s[e] = d;
    }
    return s;
}

/// Mean BCE over positive (target 1) and negative (target 0) edge scores.
inline double link_bce(std::span<const double> pos, std::span<const double> neg) {
    const std::size_t n = pos.size() + neg.size();
    if (n == 0) return 0.0;
    double l = 0.0;
    auto sp = [](double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); };
    for (double z : pos) l += sp(z) - z;
    for (double z : neg) l += sp(z);
    return l / static_cast<double>(n);
}

inline bool better(const Evaluation &cand, const Evaluation &best) {
    return cand.metric > best.metric || (cand.metric == best.metric && cand.loss < best.loss);
}

} // namespace detail

inline Evaluation evaluate_nodes(Task task, const Matrix &out, const GraphBatch &b,
                                 std::span<const std::size_t> rows) {
    if (rows.empty()) {
        throw InputError("evaluation: empty split");
    }
    Evaluation ev;
    if (task == Task::NodeClass) {
        ev.loss = softmax_cross_entropy(out, b.classes, rows).value;
        std::vector<int> pred, truth;
        const auto am = argmax_rows(out);
        for (auto i : rows) {
            pred.push_back(am[i]);
            truth.push_back(b.classes[i]);
        }
        ev.metric = accuracy(pred, truth);
    } else {
        ev.loss = bce_with_logits(out, b.multilabels, rows).value;
        Matrix sel(rows.size(), out.cols()), tgt(rows.size(), out.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::copy(out.row(rows[r]).begin(), out.row(rows[r]).end(), sel.row(r).begin());
            std::copy(b.multilabels.row(rows[r]).begin(), b.multilabels.row(rows[r]).end(),
                      tgt.row(r).begin());
        }
        ev.metric = micro_f1(sel, tgt);
    }
    return ev;
}

/// Evaluates every split of a node task in inference mode.
inline std::array<Evaluation, 3> evaluate_node_task(Model &model, const NodeTaskData &data) {
    std::array<Evaluation, 3> out;
    const NodeSplit *splits[3] = {&data.train, &data.val, &data.test};
    const GraphBatch *last = nullptr;
    Matrix pred;
    for (int s = 0; s < 3; ++s) {
        const auto &sp = *splits[s];
        if (sp.batch.get() != last) {
            pred = model.predict(sp.batch->index, sp.batch->features);
            last = sp.batch.get();
        }
        out[s] = evaluate_nodes(data.task, pred, *sp.batch, sp.rows);
    }
    return out;
}

inline Evaluation evaluate_links(const Matrix &emb, const std::vector<Edge> &pos,
                                 const std::vector<Edge> &neg, std::size_t k) {
    Evaluation ev;
    const auto ps = detail::edge_scores(emb, pos), ns = detail::edge_scores(emb, neg);
    ev.loss = detail::link_bce(ps, ns);
    if (pos.empty()) {
        ev.metric = 0.0;
        ev.mrr = 0.0;
        return ev;
    }
    ev.metric = hits_at_k(ps, ns, k);
    ev.mrr = mrr_shared(ps, ns);
    return ev;
}

inline std::array<Evaluation, 3> evaluate_link_task(Model &model, const LinkTaskData &data) {
    const Matrix emb = model.predict(data.batch->index, data.batch->features);
    return {evaluate_links(emb, data.train_pos, {}, data.hits_k),
            evaluate_links(emb, data.val_pos, data.val_neg, data.hits_k),
            evaluate_links(emb, data.test_pos, data.test_neg, data.hits_k)};
}

/// Optional observer called after every epoch (including epoch 0).
using EpochCallback = std::function<void(const MetricsRecord &)>;

namespace detail {

/**
 * Shared loop: `step` performs one training update and returns the training
 * loss; `eval` evaluates the three splits in inference mode.
 */
inline TrainResult run_loop(Model &model, const TrainConfig &cfg,
                            const std::function<double(double lr, std::size_t epoch)> &step,
                            const std::function<std::array<Evaluation, 3>()> &eval,
                            const EpochCallback &callback) {
    const auto t0 = std::chrono::steady_clock::now();
    auto seconds = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    TrainResult res;
    auto record = [&](std::size_t epoch, double lr) {
        auto ev = eval();
        MetricsRecord r{epoch, lr, seconds(), ev[0], ev[1], ev[2]};
        res.history.push_back(r);
        if (callback) callback(r);
        return r;
    };
    res.best = record(0, cosine_lr(0, cfg.epochs, cfg.learning_rate, cfg.lr_min));
    res.best_epoch = 0;
    res.checkpoint = model.snapshot();
    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch - 1, cfg.epochs, cfg.learning_rate, cfg.lr_min);
        const double loss = step(lr, epoch);
        if (!std::isfinite(loss)) {
            throw DivergenceError("training diverged: non-finite loss at epoch " +
                                  std::to_string(epoch));
        }
        auto r = record(epoch, lr);
        if (better(r.val, res.best.val)) {
            res.best = r;
            res.best_epoch = epoch;
            res.checkpoint = model.snapshot();
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    model.restore(res.checkpoint);
    return res;
}

inline std::vector<Matrix> collect_grads(GradTape &t, const Model::Bound &b) {
    std::vector<Matrix> g;
    for (Var v : b.flat) g.push_back(t.grad(v));
    return g;
}

inline std::vector<Matrix *> param_ptrs(Model &m, std::vector<std::string> &names) {
    std::vector<Matrix *> ps;
    for (auto &p : m.params()) {
        ps.push_back(p.value);
        names.push_back(p.name);
    }
    return ps;
}

inline std::uint64_t dropout_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

} // namespace detail

/**
 * Full-batch training for node classification / multi-label tasks. The model
 * is left at the best-validation checkpoint; `best` holds its metrics.
 */
inline TrainResult train(Model &model, const NodeTaskData &data, const TrainConfig &cfg,
                         const EpochCallback &callback = {}) {
    cfg.validate();
    if (data.task == Task::LinkPred) {
        throw ConfigError("train: use train_link for link prediction");
    }
    std::mt19937_64 drng(detail::dropout_seed(cfg.seed));
    AdamWState opt;
    std::vector<std::string> names;
    auto ptrs = detail::param_ptrs(model, names);
    const auto &b = *data.train.batch;
    auto step = [&](double lr, std::size_t) {
        GradTape t;
        auto bound = model.bind(t, true);
        Var out = model.forward(t, b.index, t.constant(b.features), bound, ForwardMode{true, &drng});
        LossResult lr_ = data.task == Task::NodeClass
                             ? softmax_cross_entropy(t.value(out), b.classes, data.train.rows)
                             : bce_with_logits(t.value(out), b.multilabels, data.train.rows);
        const double loss = lr_.value;
        Var l = loss_node(t, out, std::move(lr_));
        t.backward(l);
        if (std::isfinite(loss)) {
            adamw_step(ptrs, detail::collect_grads(t, bound), opt, lr, cfg.weight_decay, {}, &names);
        }
        return loss;
    };
    return detail::run_loop(model, cfg, step, [&] { return evaluate_node_task(model, data); },
                            callback);
}

/// Link prediction with inner-product edge scores and fresh negatives each epoch.
inline TrainResult train_link(Model &model, const LinkTaskData &data, const TrainConfig &cfg,
                              const EpochCallback &callback = {}) {
    cfg.validate();
    if (data.train_pos.empty()) {
        throw ConfigError("train_link: no training edges");
    }
    std::mt19937_64 drng(detail::dropout_seed(cfg.seed));
    AdamWState opt;
    std::vector<std::string> names;
    auto ptrs = detail::param_ptrs(model, names);
    const auto &b = *data.batch;
    auto step = [&](double lr, std::size_t) {
        std::unordered_set<std::uint64_t> taken;
        auto neg = sample_non_edges(data.n_nodes, data.train_edges, taken,
                                    data.neg_ratio * data.train_pos.size(), drng);
        GradTape t;
        auto bound = model.bind(t, true);
        Var emb = model.forward(t, b.index, t.constant(b.features), bound, ForwardMode{true, &drng});
        std::vector<std::size_t> us, vs;
        Matrix target(data.train_pos.size() + neg.size(), 1);
        for (std::size_t e = 0; e < data.train_pos.size(); ++e) {
            us.push_back(data.train_pos[e].src);
            vs.push_back(data.train_pos[e].dst);
            target(e, 0) = 1.0;
        }
        for (const auto &e : neg) {
            us.push_back(e.src);
            vs.push_back(e.dst);
        }
        Var scores = ops::row_dot(t, ops::gather_rows(t, emb, us), ops::gather_rows(t, emb, vs));
        LossResult lr_ = bce_with_logits(t.value(scores), target);
        const double loss = lr_.value;
        Var l = loss_node(t, scores, std::move(lr_));
        t.backward(l);
        if (std::isfinite(loss)) {
            adamw_step(ptrs, detail::collect_grads(t, bound), opt, lr, cfg.weight_decay, {}, &names);
        }
        return loss;
    };
    return detail::run_loop(model, cfg, step, [&] { return evaluate_link_task(model, data); },
                            callback);
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointVersion = 1;

/// JSON weight bundle: {"format", "version", "config": <echo text>, "params": {...}}.
inline void save_checkpoint(const std::filesystem::path &path, Model &model,
                            const std::string &config_echo) {
    nlohmann::json j;
    j["format"] = "qgat-checkpoint";
    j["version"] = kCheckpointVersion;
    j["config"] = config_echo;
    auto &ps = j["params"] = nlohmann::json::object();
    for (auto &p : model.params()) {
        ps[p.name] = {{"rows", p.value->rows()}, {"cols", p.value->cols()}, {"data", p.value->data()}};
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out << j.dump() << "\n";
}

inline void load_checkpoint(const std::filesystem::path &path, Model &model) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "qgat-checkpoint" || j.value("version", 0) != kCheckpointVersion) {
        throw ParseError(path.string() + ": not a version " + std::to_string(kCheckpointVersion) +
                         " qgat checkpoint");
    }
    for (auto &p : model.params()) {
        if (!j["params"].contains(p.name)) {
            throw ParseError(path.string() + ": missing tensor '" + p.name + "'");
        }
        const auto &t = j["params"][p.name];
        Matrix m(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>(),
                 t.at("data").get<std::vector<double>>());
        if (!m.same_shape(*p.value)) {
            throw ParseError(path.string() + ": tensor '" + p.name + "' has shape " + m.shape_str() +
                             ", model expects " + p.value->shape_str());
        }
        *p.value = std::move(m);
    }
}

} // namespace qgat
