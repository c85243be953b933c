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
 * Graph attention layers sharing one message-passing skeleton:
 *
 *   - QgatLayer: attention logits are Pauli-Z expectations of a shared
 *     variational circuit run on amplitude-encoded edge features.
 *   - GatLayer:  e_ij = LeakyReLU(a^T [W h_i || W h_j]).
 *   - Gatv2Layer: e_ij = a^T LeakyReLU(W [h_i || h_j]).
 *
 * For an edge (j -> i), i is the aggregating node and j the neighbor.
 */
#pragma once

#include "qgat/errors.hpp"
#include "qgat/graph.hpp"
#include "qgat/matrix.hpp"
#include "qgat/tape.hpp"
#include "qgat/vqc.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qgat {

enum class LayerKind { QGAT, GAT, GATv2 };
enum class Merge { Concat, Mean };
enum class Activation { Identity, ELU, ReLU };

inline const char *to_string(LayerKind k) {
    switch (k) {
    case LayerKind::QGAT: return "qgat";
    case LayerKind::GAT: return "gat";
    case LayerKind::GATv2: return "gatv2";
    }
    return "?";
}

inline LayerKind parse_layer_kind(const std::string &s) {
    if (s == "qgat") return LayerKind::QGAT;
    if (s == "gat") return LayerKind::GAT;
    if (s == "gatv2") return LayerKind::GATv2;
    throw ConfigError("unknown model type '" + s + "' (expected qgat, gat or gatv2)");
}

inline const char *to_string(Merge m) { return m == Merge::Concat ? "concat" : "mean"; }

inline Merge parse_merge(const std::string &s) {
    if (s == "concat") return Merge::Concat;
    if (s == "mean") return Merge::Mean;
    throw ConfigError("unknown merge '" + s + "' (expected concat or mean)");
}

inline const char *to_string(Activation a) {
    switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ELU: return "elu";
    case Activation::ReLU: return "relu";
    }
    return "?";
}

inline Activation parse_activation(const std::string &s) {
    if (s == "identity") return Activation::Identity;
    if (s == "elu") return Activation::ELU;
    if (s == "relu") return Activation::ReLU;
    throw ConfigError("unknown activation '" + s + "' (expected identity, elu or relu)");
}

struct LayerConfig {
    LayerKind kind = LayerKind::QGAT;
    std::size_t in_dim = 1;
    std::size_t out_dim = 1; ///< per head
    std::size_t heads = 1;
    Merge merge = Merge::Concat;
    Activation activation = Activation::ELU;
    bool residual = true;
    double dropout = 0.0; ///< applied to layer input and to attention coefficients
    double negative_slope = 0.2;
    // QGAT only.
    std::size_t n_qubits = 4;
    std::size_t entangling_layers = 2;
    bool independent_values = false;

    [[nodiscard]] std::size_t output_width() const {
        return merge == Merge::Concat ? heads * out_dim : out_dim;
    }
    [[nodiscard]] std::size_t n_exec() const { return (heads + n_qubits - 1) / n_qubits; }
    [[nodiscard]] std::size_t circuit_input_width() const {
        return (std::size_t{1} << n_qubits) * n_exec();
    }
};

struct NamedParam {
    std::string name;
    Matrix *value;
};

/// Tape handles of one forward pass through a layer.
struct LayerTrace {
    Var output;
    Var logits; ///< E x heads, pre-softmax
    Var alpha;  ///< E x heads, post-softmax, pre-dropout
};

struct ForwardMode {
    bool training = false;
    std::mt19937_64 *rng = nullptr; ///< required when training with dropout > 0
};

inline Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64 &rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(fan_in, fan_out);
    for (auto &v : m.data()) {
        v = u(rng);
    }
    return m;
}

/// Inverted-dropout mask with keep-probability 1 - rate.
inline Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, std::mt19937_64 &rng) {
    Matrix m(rows, cols);
    std::bernoulli_distribution keep(1.0 - rate);
    const double s = 1.0 / (1.0 - rate);
    for (auto &v : m.data()) {
        v = keep(rng) ? s : 0.0;
    }
    return m;
}

inline Var apply_dropout(GradTape &t, Var x, double rate, const ForwardMode &mode) {
    if (!mode.training || rate <= 0.0) {
        return x;
    }
    if (mode.rng == nullptr) {
        throw ConfigError("dropout in training mode needs an rng");
    }
    const Matrix &v = t.value(x);
    return ops::mul_const(t, x, dropout_mask(v.rows(), v.cols(), rate, *mode.rng));
}

inline Var apply_activation(GradTape &t, Var x, Activation a) {
    switch (a) {
    case Activation::Identity: return x;
    case Activation::ELU: return ops::elu(t, x);
    case Activation::ReLU: return ops::relu(t, x);
    }
    return x;
}

class AttentionLayer {
  public:
    explicit AttentionLayer(LayerConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.heads == 0 || cfg_.in_dim == 0 || cfg_.out_dim == 0) {
            throw ConfigError("attention layer: heads, in_dim and out_dim must be >= 1");
        }
        if (!(cfg_.dropout >= 0.0 && cfg_.dropout < 1.0)) {
            throw ConfigError("attention layer: dropout must lie in [0, 1)");
        }
    }
    virtual ~AttentionLayer() = default;
    AttentionLayer(const AttentionLayer &) = delete;
    AttentionLayer &operator=(const AttentionLayer &) = delete;

    [[nodiscard]] const LayerConfig &config() const { return cfg_; }

    /// Trainable tensors; names are local to the layer ("W", "P", ...).
    virtual std::vector<NamedParam> params() = 0;

    /// `vars` are tape handles for params(), in the same order.
    virtual LayerTrace forward(GradTape &t, const MessageIndex &mi, Var h,
                               std::span<const Var> vars, const ForwardMode &mode) = 0;

    [[nodiscard]] std::size_t param_count() {
        std::size_t n = 0;
        for (auto &p : params()) {
            n += p.value->size();
        }
        return n;
    }

    /// Parameters living in the circuit (zero for classical layers).
    [[nodiscard]] virtual std::size_t quantum_param_count() const { return 0; }

    [[nodiscard]] bool has_shortcut() const {
        return cfg_.residual && cfg_.in_dim != cfg_.output_width();
    }

  protected:
    /// Softmax, dropout, weighted aggregation, merge, activation, residual.
    LayerTrace aggregate(GradTape &t, const MessageIndex &mi, Var x, Var logits, Var values,
                         const Var *shortcut, const ForwardMode &mode) const {
        Var alpha = ops::segment_softmax(t, logits, mi.offsets);
        Var alpha_d = apply_dropout(t, alpha, cfg_.dropout, mode);
        Var msg = ops::gather_rows(t, values, mi.src);
        Var weighted = ops::head_weight(t, msg, alpha_d);
        Var agg = ops::scatter_sum_rows(t, weighted, mi.dst, mi.n_nodes);
        if (cfg_.merge == Merge::Mean) {
            agg = ops::head_mean(t, agg, cfg_.heads);
        }
        Var out = apply_activation(t, agg, cfg_.activation);
        if (cfg_.residual) {
            Var res = shortcut ? ops::matmul(t, x, *shortcut) : x;
            out = ops::add(t, out, res);
        }
        return {out, logits, alpha};
    }

    void check_input(GradTape &t, const MessageIndex &mi, Var h, std::span<const Var> vars,
                     std::size_t n_vars) const {
        const Matrix &hv = t.value(h);
        if (hv.cols() != cfg_.in_dim || hv.rows() != mi.n_nodes) {
            throw DimensionError(std::string(to_string(cfg_.kind)) + " layer: input " +
                                 hv.shape_str() + " but expected " + std::to_string(mi.n_nodes) +
                                 "x" + std::to_string(cfg_.in_dim));
        }
        if (vars.size() != n_vars) {
            throw ConfigError("attention layer: expected " + std::to_string(n_vars) +
                              " parameter handles, got " + std::to_string(vars.size()));
        }
    }

    LayerConfig cfg_;
};

// ---------------------------------------------------------------------------
// QGAT

/// Circuit executions performed by QGAT layers (instrumentation).
struct CircuitCounter {
    std::uint64_t executions = 0;
};

/**
 * Splits a_prime into n_exec chunks of 2^n_qubits, runs each through the
 * shared circuit and keeps the first `heads` of the n_exec * n_qubits
 * expectations.
 */
inline std::vector<double> qgat_logits(std::span<const double> a_prime, std::size_t heads,
                                       const Circuit &circuit, CircuitCounter *counter = nullptr) {
    const std::size_t nq = circuit.n_qubits();
    const std::size_t chunk = std::size_t{1} << nq;
    const std::size_t n_exec = (heads + nq - 1) / nq;
    if (a_prime.size() != chunk * n_exec) {
        throw DimensionError("qgat_logits: input length " + std::to_string(a_prime.size()) +
                             " != 2^" + std::to_string(nq) + " * " + std::to_string(n_exec));
    }
    std::vector<double> out;
    out.reserve(n_exec * nq);
    for (std::size_t m = 0; m < n_exec; ++m) {
        auto z = circuit.forward(a_prime.subspan(m * chunk, chunk));
        if (counter) {
            ++counter->executions;
        }
        out.insert(out.end(), z.begin(), z.end());
    }
    out.resize(heads);
    return out;
}

inline std::vector<double> qgat_logits(std::span<const double> a_prime, std::size_t heads,
                                       const CircuitParams &params, const EntanglingLayout &layout,
                                       CircuitCounter *counter = nullptr) {
    return qgat_logits(a_prime, heads, Circuit(params, layout), counter);
}

class QgatLayer final : public AttentionLayer {
  public:
    QgatLayer(LayerConfig cfg, std::mt19937_64 &rng) : AttentionLayer(std::move(cfg)) {
        if (cfg_.n_qubits == 0 || cfg_.n_qubits > 12) {
            throw ConfigError("qgat layer: n_qubits must lie in [1, 12]");
        }
        layout_ = default_layout(cfg_.n_qubits, cfg_.entangling_layers);
        const std::size_t hd = cfg_.heads * cfg_.out_dim;
        W_ = glorot_uniform(cfg_.in_dim, hd, rng);
        P_ = glorot_uniform(2 * hd + 2 * cfg_.in_dim, cfg_.circuit_input_width(), rng);
        auto theta = CircuitParams::random(cfg_.entangling_layers, cfg_.n_qubits, rng);
        theta_ = Matrix(cfg_.entangling_layers * cfg_.n_qubits, 3, theta.angles());
        if (cfg_.independent_values) {
            Wv_ = glorot_uniform(cfg_.in_dim, hd, rng);
        }
        if (has_shortcut()) {
            R_ = glorot_uniform(cfg_.in_dim, cfg_.output_width(), rng);
        }
    }

    std::vector<NamedParam> params() override {
        std::vector<NamedParam> p{{"W", &W_}, {"P", &P_}, {"theta", &theta_}};
        if (cfg_.independent_values) {
            p.push_back({"Wv", &Wv_});
        }
        if (has_shortcut()) {
            p.push_back({"shortcut", &R_});
        }
        return p;
    }

    [[nodiscard]] std::size_t quantum_param_count() const override { return theta_.size(); }

    [[nodiscard]] const EntanglingLayout &layout() const { return layout_; }
    [[nodiscard]] CircuitParams circuit_params() const {
        return CircuitParams(cfg_.entangling_layers, cfg_.n_qubits, theta_.data());
    }
    Matrix &W() { return W_; }
    Matrix &P() { return P_; }
    Matrix &theta() { return theta_; }

    CircuitCounter &counter() { return counter_; }

    /// P([W h_i || W h_j || h_i || h_j]) for a single edge.
    [[nodiscard]] std::vector<double> edge_input(std::span<const double> h_i,
                                                 std::span<const double> h_j) const {
        if (h_i.size() != cfg_.in_dim || h_j.size() != cfg_.in_dim) {
            throw ConfigError("qgat_edge_input: feature length does not match W");
        }
        const std::size_t hd = cfg_.heads * cfg_.out_dim;
        std::vector<double> a(2 * hd + 2 * cfg_.in_dim, 0.0);
        for (std::size_t k = 0; k < cfg_.in_dim; ++k) {
            for (std::size_t c = 0; c < hd; ++c) {
                a[c] += h_i[k] * W_(k, c);
                a[hd + c] += h_j[k] * W_(k, c);
            }
        }
        std::copy(h_i.begin(), h_i.end(), a.begin() + 2 * hd);
        std::copy(h_j.begin(), h_j.end(), a.begin() + 2 * hd + cfg_.in_dim);
        std::vector<double> out(P_.cols(), 0.0);
        for (std::size_t r = 0; r < a.size(); ++r) {
            for (std::size_t c = 0; c < P_.cols(); ++c) {
                out[c] += a[r] * P_(r, c);
            }
        }
        return out;
    }

    [[nodiscard]] std::vector<double> logits(std::span<const double> a_prime) {
        return qgat_logits(a_prime, cfg_.heads, circuit_params(), layout_, &counter_);
    }

    LayerTrace forward(GradTape &t, const MessageIndex &mi, Var h, std::span<const Var> vars,
                       const ForwardMode &mode) override {
        check_input(t, mi, h, vars, params().size());
        const Var W = vars[0], P = vars[1], theta = vars[2];
        std::size_t next = 3;
        const Var Wv = cfg_.independent_values ? vars[next++] : W;
        const Var *shortcut = has_shortcut() ? &vars[next] : nullptr;

        Var x = apply_dropout(t, h, cfg_.dropout, mode);
        Var wh = ops::matmul(t, x, W);
        // P is linear, so project per node and gather per edge.
        const std::size_t hd = cfg_.heads * cfg_.out_dim;
        std::vector<std::size_t> rows_dst, rows_src;
        for (std::size_t r = 0; r < hd; ++r) {
            rows_dst.push_back(r);
            rows_src.push_back(hd + r);
        }
        for (std::size_t r = 0; r < cfg_.in_dim; ++r) {
            rows_dst.push_back(2 * hd + r);
            rows_src.push_back(2 * hd + cfg_.in_dim + r);
        }
        Var u = ops::concat_cols(t, {wh, x});
        Var p_dst = ops::matmul(t, u, ops::gather_rows(t, P, std::move(rows_dst)));
        Var p_src = ops::matmul(t, u, ops::gather_rows(t, P, std::move(rows_src)));
        Var a_prime =
            ops::add(t, ops::gather_rows(t, p_dst, mi.dst), ops::gather_rows(t, p_src, mi.src));
        Var logits = quantum_logits(t, a_prime, theta);
        Var values = cfg_.independent_values ? ops::matmul(t, x, Wv) : wh;
        return aggregate(t, mi, x, logits, values, shortcut, mode);
    }

  private:
    /// Tape op: rows of a_prime -> rows of head logits, adjoint backward.
    Var quantum_logits(GradTape &t, Var a_prime, Var theta) {
        const Matrix &ap = t.value(a_prime);
        auto circuit = std::make_shared<const Circuit>(
            CircuitParams(cfg_.entangling_layers, cfg_.n_qubits, t.value(theta).data()), layout_);
        Matrix out(ap.rows(), cfg_.heads);
        for (std::size_t e = 0; e < ap.rows(); ++e) {
            auto z = qgat_logits(ap.row(e), cfg_.heads, *circuit, &counter_);
            std::copy(z.begin(), z.end(), out.row(e).begin());
        }
        const std::size_t nq = cfg_.n_qubits, heads = cfg_.heads, n_exec = cfg_.n_exec();
        const std::size_t chunk = std::size_t{1} << nq;
        return t.push(std::move(out), t.any_requires_grad({a_prime, theta}),
                      [a_prime, theta, circuit, nq, heads, n_exec, chunk](GradTape &t,
                                                                           const Matrix &g) {
                          const Matrix &ap = t.value(a_prime);
                          Matrix g_ap(ap.rows(), ap.cols());
                          Matrix g_theta(t.value(theta).rows(), 3);
                          std::vector<double> up(nq);
                          for (std::size_t e = 0; e < ap.rows(); ++e) {
                              for (std::size_t m = 0; m < n_exec; ++m) {
                                  bool any = false;
                                  for (std::size_t q = 0; q < nq; ++q) {
                                      const std::size_t k = m * nq + q;
                                      up[q] = k < heads ? g(e, k) : 0.0;
                                      any = any || up[q] != 0.0;
                                  }
                                  if (!any) {
                                      continue;
                                  }
                                  circuit->backward(ap.row(e).subspan(m * chunk, chunk), up,
                                                    g_theta.data(),
                                                    g_ap.row(e).subspan(m * chunk, chunk));
                              }
                          }
                          t.accumulate(a_prime, g_ap);
                          t.accumulate(theta, g_theta);
                      });
    }

    EntanglingLayout layout_;
    Matrix W_, P_, theta_, Wv_, R_;
    CircuitCounter counter_;
};

// ---------------------------------------------------------------------------
// Classical baselines

class GatLayer final : public AttentionLayer {
  public:
    GatLayer(LayerConfig cfg, std::mt19937_64 &rng) : AttentionLayer(std::move(cfg)) {
        const std::size_t hd = cfg_.heads * cfg_.out_dim;
        W_ = glorot_uniform(cfg_.in_dim, hd, rng);
        a_dst_ = attention_vector(rng);
        a_src_ = attention_vector(rng);
        if (has_shortcut()) {
            R_ = glorot_uniform(cfg_.in_dim, cfg_.output_width(), rng);
        }
    }

    std::vector<NamedParam> params() override {
        std::vector<NamedParam> p{{"W", &W_}, {"a_dst", &a_dst_}, {"a_src", &a_src_}};
        if (has_shortcut()) {
            p.push_back({"shortcut", &R_});
        }
        return p;
    }

    Matrix &W() { return W_; }
    Matrix &a_dst() { return a_dst_; }
    Matrix &a_src() { return a_src_; }

    LayerTrace forward(GradTape &t, const MessageIndex &mi, Var h, std::span<const Var> vars,
                       const ForwardMode &mode) override {
        check_input(t, mi, h, vars, params().size());
        const Var *shortcut = has_shortcut() ? &vars[3] : nullptr;
        Var x = apply_dropout(t, h, cfg_.dropout, mode);
        Var wh = ops::matmul(t, x, vars[0]);
        // a^T [Wh_i || Wh_j] = a_dst . Wh_i + a_src . Wh_j, per head.
        Var s_dst = ops::head_dot(t, wh, vars[1], cfg_.heads);
        Var s_src = ops::head_dot(t, wh, vars[2], cfg_.heads);
        Var e = ops::add(t, ops::gather_rows(t, s_dst, mi.dst), ops::gather_rows(t, s_src, mi.src));
        Var logits = ops::leaky_relu(t, e, cfg_.negative_slope);
        return aggregate(t, mi, x, logits, wh, shortcut, mode);
    }

  private:
    Matrix attention_vector(std::mt19937_64 &rng) const {
        Matrix row(1, cfg_.heads * cfg_.out_dim);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const double limit = std::sqrt(6.0 / static_cast<double>(cfg_.out_dim + 1));
        for (auto &v : row.data()) {
            v = limit * u(rng);
        }
        return row;
    }

    Matrix W_, a_dst_, a_src_, R_;
};

class Gatv2Layer final : public AttentionLayer {
  public:
    Gatv2Layer(LayerConfig cfg, std::mt19937_64 &rng) : AttentionLayer(std::move(cfg)) {
        const std::size_t hd = cfg_.heads * cfg_.out_dim;
        W_dst_ = glorot_uniform(cfg_.in_dim, hd, rng);
        W_src_ = glorot_uniform(cfg_.in_dim, hd, rng);
        a_ = Matrix(1, hd);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const double limit = std::sqrt(6.0 / static_cast<double>(cfg_.out_dim + 1));
        for (auto &v : a_.data()) {
            v = limit * u(rng);
        }
        if (has_shortcut()) {
            R_ = glorot_uniform(cfg_.in_dim, cfg_.output_width(), rng);
        }
    }

    std::vector<NamedParam> params() override {
        std::vector<NamedParam> p{{"W_dst", &W_dst_}, {"W_src", &W_src_}, {"a", &a_}};
        if (has_shortcut()) {
            p.push_back({"shortcut", &R_});
        }
        return p;
    }

    Matrix &W_dst() { return W_dst_; }
    Matrix &W_src() { return W_src_; }
    Matrix &a() { return a_; }

    LayerTrace forward(GradTape &t, const MessageIndex &mi, Var h, std::span<const Var> vars,
                       const ForwardMode &mode) override {
        check_input(t, mi, h, vars, params().size());
        const Var *shortcut = has_shortcut() ? &vars[3] : nullptr;
        Var x = apply_dropout(t, h, cfg_.dropout, mode);
        // W [h_i || h_j] = W_dst h_i + W_src h_j; messages carry W_src h_j.
        Var wd = ops::matmul(t, x, vars[0]);
        Var ws = ops::matmul(t, x, vars[1]);
        Var z = ops::add(t, ops::gather_rows(t, wd, mi.dst), ops::gather_rows(t, ws, mi.src));
        Var logits = ops::head_dot(t, ops::leaky_relu(t, z, cfg_.negative_slope), vars[2], cfg_.heads);
        return aggregate(t, mi, x, logits, ws, shortcut, mode);
    }

  private:
    Matrix W_dst_, W_src_, a_, R_;
};

inline std::unique_ptr<AttentionLayer> make_layer(const LayerConfig &cfg, std::mt19937_64 &rng) {
    switch (cfg.kind) {
    case LayerKind::QGAT: return std::make_unique<QgatLayer>(cfg, rng);
    case LayerKind::GAT: return std::make_unique<GatLayer>(cfg, rng);
    case LayerKind::GATv2: return std::make_unique<Gatv2Layer>(cfg, rng);
    }
    throw ConfigError("unknown layer kind");
}

/// Binds a layer's parameters to the tape, as trainable leaves or constants.
inline std::vector<Var> bind_params(GradTape &t, AttentionLayer &layer, bool trainable) {
    std::vector<Var> vars;
    for (auto &p : layer.params()) {
        vars.push_back(trainable ? t.parameter(*p.value) : t.constant(*p.value));
    }
    return vars;
}

/// P([W h_i || W h_j || h_i || h_j]) of one edge.
inline std::vector<double> qgat_edge_input(std::span<const double> h_i, std::span<const double> h_j,
                                           const QgatLayer &layer) {
    return layer.edge_input(h_i, h_j);
}

/// Inference-mode forward of any attention layer over a graph (self-loops added).
inline Matrix layer_forward(AttentionLayer &layer, const MessageIndex &mi, const Matrix &features) {
    GradTape t;
    Var h = t.constant(features);
    auto vars = bind_params(t, layer, false);
    return t.value(layer.forward(t, mi, h, vars, ForwardMode{}).output);
}

struct LayerGradients {
    std::vector<std::pair<std::string, Matrix>> params; ///< in params() order
    Matrix input;
};

/// Gradients of sum(output .* upstream) w.r.t. every parameter and the input features.
inline LayerGradients layer_backward(AttentionLayer &layer, const MessageIndex &mi,
                                     const Matrix &features, const Matrix &upstream) {
    GradTape t;
    Var h = t.parameter(features);
    auto vars = bind_params(t, layer, true);
    Var out = layer.forward(t, mi, h, vars, ForwardMode{}).output;
    Var loss = ops::weighted_sum(t, out, upstream);
    t.backward(loss);
    LayerGradients g;
    auto named = layer.params();
    for (std::size_t i = 0; i < named.size(); ++i) {
        g.params.emplace_back(named[i].name, t.grad(vars[i]));
    }
    g.input = t.grad(h);
    return g;
}

} // namespace qgat
