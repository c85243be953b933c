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
 * Stacked attention model: hidden layers concatenate heads and apply the
 * configured activation; the output layer averages heads with no activation.
 */
#pragma once

#include "qgat/attention.hpp"
#include "qgat/errors.hpp"
#include "qgat/graph.hpp"
#include "qgat/tape.hpp"

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace qgat {

struct ModelConfig {
    LayerKind kind = LayerKind::QGAT;
    std::size_t in_dim = 1;
    std::vector<std::size_t> hidden_dims{16}; ///< per-head width of each hidden layer (broadcast if one value)
    std::vector<std::size_t> heads{4, 4, 4};
    std::size_t out_dim = 2;
    std::size_t n_qubits = 4;
    std::size_t entangling_layers = 2;
    double dropout = 0.5;
    bool residual = true;
    Merge hidden_merge = Merge::Concat;
    Activation activation = Activation::ELU;
    bool independent_values = false;

    [[nodiscard]] std::size_t hidden_dim(std::size_t layer) const {
        return hidden_dims.size() == 1 ? hidden_dims[0] : hidden_dims.at(layer);
    }

    void validate() const {
        if (heads.empty()) {
            throw ConfigError("model: heads list must not be empty");
        }
        if (hidden_dims.empty() ||
            (hidden_dims.size() != 1 && hidden_dims.size() != heads.size() - 1)) {
            throw ConfigError("model: hidden_dims needs 1 or " + std::to_string(heads.size() - 1) +
                              " entries, got " + std::to_string(hidden_dims.size()));
        }
        for (auto h : heads) {
            if (h == 0) {
                throw ConfigError("model: every layer needs at least one head");
            }
        }
        if (in_dim == 0 || out_dim == 0) {
            throw ConfigError("model: in_dim and out_dim must be positive");
        }
    }

    [[nodiscard]] std::vector<LayerConfig> layer_configs() const {
        validate();
        std::vector<LayerConfig> out;
        std::size_t in = in_dim;
        for (std::size_t l = 0; l < heads.size(); ++l) {
            const bool last = l + 1 == heads.size();
            LayerConfig c;
            c.kind = kind;
            c.in_dim = in;
            c.heads = heads[l];
            c.out_dim = last ? out_dim : hidden_dim(l);
            c.merge = last ? Merge::Mean : hidden_merge;
            c.activation = last ? Activation::Identity : activation;
            c.residual = residual;
            c.dropout = dropout;
            c.n_qubits = n_qubits;
            c.entangling_layers = entangling_layers;
            c.independent_values = independent_values;
            out.push_back(c);
            in = c.output_width();
        }
        return out;
    }
};

class Model {
  public:
    Model(const ModelConfig &cfg, std::uint64_t seed) : cfg_(cfg) {
        std::mt19937_64 rng(seed);
        for (const auto &lc : cfg.layer_configs()) {
            layers_.push_back(make_layer(lc, rng));
        }
    }

    [[nodiscard]] const ModelConfig &config() const { return cfg_; }
    [[nodiscard]] std::size_t n_layers() const { return layers_.size(); }
    AttentionLayer &layer(std::size_t i) { return *layers_.at(i); }

    /// Parameters named "layer<i>.<name>".
    std::vector<NamedParam> params() {
        std::vector<NamedParam> out;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            for (auto &p : layers_[l]->params()) {
                out.push_back({"layer" + std::to_string(l) + "." + p.name, p.value});
            }
        }
        return out;
    }

    [[nodiscard]] std::size_t param_count() {
        std::size_t n = 0;
        for (auto &l : layers_) {
            n += l->param_count();
        }
        return n;
    }

    [[nodiscard]] std::size_t quantum_param_count() const {
        std::size_t n = 0;
        for (const auto &l : layers_) {
            n += l->quantum_param_count();
        }
        return n;
    }

    struct Bound {
        std::vector<std::vector<Var>> per_layer;
        std::vector<Var> flat; ///< params() order
    };

    Bound bind(GradTape &t, bool trainable) {
        Bound b;
        for (auto &l : layers_) {
            b.per_layer.push_back(bind_params(t, *l, trainable));
            b.flat.insert(b.flat.end(), b.per_layer.back().begin(), b.per_layer.back().end());
        }
        return b;
    }

    Var forward(GradTape &t, const MessageIndex &mi, Var h, const Bound &b, const ForwardMode &mode) {
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            h = layers_[l]->forward(t, mi, h, b.per_layer[l], mode).output;
        }
        return h;
    }

    /// Inference-mode output.
    Matrix predict(const MessageIndex &mi, const Matrix &features) {
        GradTape t;
        auto b = bind(t, false);
        return t.value(forward(t, mi, t.constant(features), b, ForwardMode{}));
    }

    [[nodiscard]] std::vector<Matrix> snapshot() {
        std::vector<Matrix> s;
        for (auto &p : params()) {
            s.push_back(*p.value);
        }
        return s;
    }

    void restore(const std::vector<Matrix> &s) {
        auto ps = params();
        if (s.size() != ps.size()) {
            throw DimensionError("restore: snapshot has " + std::to_string(s.size()) +
                                 " tensors, model has " + std::to_string(ps.size()));
        }
        for (std::size_t i = 0; i < ps.size(); ++i) {
            ps[i].value->require_same_shape(s[i], "restore");
            *ps[i].value = s[i];
        }
    }

  private:
    ModelConfig cfg_;
    std::vector<std::unique_ptr<AttentionLayer>> layers_;
};

} // namespace qgat
