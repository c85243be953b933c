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
 * @file config.hpp
 * Strict key-value experiment configuration with dotted-key overrides and an
 * exact round-trip echo writer.
 */
#pragma once

#include "errors.hpp"
#include "graph.hpp"
#include "inductive.hpp"
#include "training.hpp"

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace qgat {

struct DataConfig {
    std::string source = "sbm"; ///< sbm | edgelist | json | collection | synth-collection
    std::string path;           ///< directory (edgelist), file (json) or manifest (collection)
    bool directed = false;
    std::uint64_t seed = 0;
    SbmParams sbm;
    std::size_t n_train = 2, n_val = 1, n_test = 1;
    bool multilabel = true;
    std::size_t n_labels = 4;

    [[nodiscard]] bool is_collection() const {
        return source == "collection" || source == "synth-collection";
    }
};

struct NoiseConfig {
    std::string kind = "none"; ///< none | feature | structural
    double level = 0.0;        ///< used by `train`
    std::vector<double> levels; ///< used by `noise-sweep`; empty selects the default grid
    std::vector<LayerKind> models{LayerKind::QGAT, LayerKind::GAT, LayerKind::GATv2};
};

struct LinkPredConfig {
    double frac_val = 0.1;
    double frac_test = 0.1;
    std::size_t neg_ratio = 1;
    std::size_t hits_k = 50;
};

struct GradcheckConfig {
    std::size_t configs = 50;
    std::vector<std::size_t> qubits{2, 3, 4};
    std::vector<std::size_t> layers{1, 2, 3};
    double circuit_step = 1e-5;
    double layer_step = 1e-4;
    double tolerance = 1e-4;
    std::uint64_t seed = 0;
    std::string corrupt; ///< test hook: name of a tensor whose analytic gradient is perturbed
};

inline const std::vector<double> kFeatureNoiseGrid{0.0, 0.01, 0.05, 0.1, 0.2};
inline const std::vector<double> kStructuralNoiseGrid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};

struct ExperimentConfig {
    TrainConfig train;
    bool out_dim_auto = true; ///< derive model.out_dim from the data
    std::vector<std::uint64_t> seeds{0};
    DataConfig data;
    NoiseConfig noise;
    LinkPredConfig linkpred;
    GradcheckConfig gradcheck;

    [[nodiscard]] std::vector<double> sweep_levels() const {
        if (!noise.levels.empty()) {
            return noise.levels;
        }
        if (noise.kind == "feature") {
            return kFeatureNoiseGrid;
        }
        if (noise.kind == "structural") {
            return kStructuralNoiseGrid;
        }
        throw ConfigError("noise.kind must be 'feature' or 'structural' for a sweep, got '" +
                          noise.kind + "'");
    }
};

namespace config_detail {

inline std::string fmt_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double to_double(const std::string &s) {
    auto v = detail::parse_double(s);
    if (!v) {
        throw ConfigError("expected a number, got '" + s + "'");
    }
    return *v;
}

inline std::uint64_t to_u64(const std::string &s) {
    std::uint64_t v = 0;
    auto t = detail::trim(s);
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
        throw ConfigError("expected a non-negative integer, got '" + s + "'");
    }
    return v;
}

inline std::size_t to_size(const std::string &s) { return static_cast<std::size_t>(to_u64(s)); }

inline bool to_bool(const std::string &s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw ConfigError("expected true or false, got '" + s + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string &s, F conv) {
    std::vector<T> out;
    if (detail::trim(s).empty()) {
        return out;
    }
    for (auto part : detail::split(s, ',')) {
        out.push_back(conv(std::string(detail::trim(part))));
    }
    return out;
}

template <class T, class F>
std::string from_list(const std::vector<T> &v, F fmt) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += fmt(v[i]);
    }
    return s;
}

inline std::string one_of(const std::string &s, std::initializer_list<const char *> allowed) {
    for (const char *a : allowed) {
        if (s == a) return s;
    }
    std::string msg = "expected one of {";
    for (const char *a : allowed) msg += std::string(" ") + a;
    throw ConfigError(msg + " }, got '" + s + "'");
}

struct Field {
    std::string key; ///< "section.name"
    std::string doc;
    std::function<void(ExperimentConfig &, const std::string &)> set;
    std::function<std::string(const ExperimentConfig &)> get;
};

// clang-format off
inline const std::vector<Field> &fields() {
    using C = ExperimentConfig;
    using S = std::string;
    auto sz = [](std::size_t v) { return std::to_string(v); };
    static const std::vector<Field> f = {
        {"model.kind", "qgat | gat | gatv2",
         [](C &c, const S &v) { c.train.model.kind = parse_layer_kind(v); },
         [](const C &c) { return S(to_string(c.train.model.kind)); }},
        {"model.hidden_dims", "per-head width of hidden layers (one value or one per hidden layer)",
         [](C &c, const S &v) { c.train.model.hidden_dims = to_list<std::size_t>(v, to_size); },
         [sz](const C &c) { return from_list(c.train.model.hidden_dims, sz); }},
        {"model.heads", "attention heads per layer, e.g. 4,4,4",
         [](C &c, const S &v) { c.train.model.heads = to_list<std::size_t>(v, to_size); },
         [sz](const C &c) { return from_list(c.train.model.heads, sz); }},
        {"model.out_dim", "output width, or auto (classes / labels / 16 for link prediction)",
         [](C &c, const S &v) {
             if (v == "auto") { c.out_dim_auto = true; return; }
             c.out_dim_auto = false;
             c.train.model.out_dim = to_size(v);
         },
         [](const C &c) { return c.out_dim_auto ? S("auto") : std::to_string(c.train.model.out_dim); }},
        {"model.n_qubits", "qubits per attention circuit",
         [](C &c, const S &v) { c.train.model.n_qubits = to_size(v); },
         [](const C &c) { return std::to_string(c.train.model.n_qubits); }},
        {"model.entangling_layers", "strongly entangling layers per circuit",
         [](C &c, const S &v) { c.train.model.entangling_layers = to_size(v); },
         [](const C &c) { return std::to_string(c.train.model.entangling_layers); }},
        {"model.dropout", "dropout rate on layer inputs and attention coefficients",
         [](C &c, const S &v) { c.train.model.dropout = to_double(v); },
         [](const C &c) { return fmt_double(c.train.model.dropout); }},
        {"model.residual", "true | false",
         [](C &c, const S &v) { c.train.model.residual = to_bool(v); },
         [](const C &c) { return S(c.train.model.residual ? "true" : "false"); }},
        {"model.merge", "hidden-layer head merge: concat | mean",
         [](C &c, const S &v) { c.train.model.hidden_merge = parse_merge(v); },
         [](const C &c) { return S(to_string(c.train.model.hidden_merge)); }},
        {"model.activation", "hidden-layer activation: elu | relu | identity",
         [](C &c, const S &v) { c.train.model.activation = parse_activation(v); },
         [](const C &c) { return S(to_string(c.train.model.activation)); }},
        {"model.independent_values", "separate value projection per head (qgat only)",
         [](C &c, const S &v) { c.train.model.independent_values = to_bool(v); },
         [](const C &c) { return S(c.train.model.independent_values ? "true" : "false"); }},

        {"training.task", "node-class | multi-label | link-pred",
         [](C &c, const S &v) { c.train.task = parse_task(v); },
         [](const C &c) { return S(to_string(c.train.task)); }},
        {"training.lr", "peak learning rate",
         [](C &c, const S &v) { c.train.learning_rate = to_double(v); },
         [](const C &c) { return fmt_double(c.train.learning_rate); }},
        {"training.lr_min", "final learning rate of the cosine schedule",
         [](C &c, const S &v) { c.train.lr_min = to_double(v); },
         [](const C &c) { return fmt_double(c.train.lr_min); }},
        {"training.weight_decay", "decoupled weight decay",
         [](C &c, const S &v) { c.train.weight_decay = to_double(v); },
         [](const C &c) { return fmt_double(c.train.weight_decay); }},
        {"training.epochs", "maximum epochs",
         [](C &c, const S &v) { c.train.epochs = to_size(v); },
         [](const C &c) { return std::to_string(c.train.epochs); }},
        {"training.patience", "epochs without validation improvement before stopping",
         [](C &c, const S &v) { c.train.patience = to_size(v); },
         [](const C &c) { return std::to_string(c.train.patience); }},
        {"training.seeds", "comma-separated run seeds",
         [](C &c, const S &v) { c.seeds = to_list<std::uint64_t>(v, to_u64); },
         [](const C &c) { return from_list(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); }},

        {"data.source", "sbm | edgelist | json | collection | synth-collection",
         [](C &c, const S &v) {
             c.data.source = one_of(v, {"sbm", "edgelist", "json", "collection", "synth-collection"});
         },
         [](const C &c) { return c.data.source; }},
        {"data.path", "dataset location for edgelist / json / collection",
         [](C &c, const S &v) { c.data.path = v; },
         [](const C &c) { return c.data.path; }},
        {"data.directed", "edge list is directed (otherwise both directions are added)",
         [](C &c, const S &v) { c.data.directed = to_bool(v); },
         [](const C &c) { return S(c.data.directed ? "true" : "false"); }},
        {"data.seed", "generator seed for synthetic data",
         [](C &c, const S &v) { c.data.seed = to_u64(v); },
         [](const C &c) { return std::to_string(c.data.seed); }},
        {"data.n_per_class", "SBM nodes per block",
         [](C &c, const S &v) { c.data.sbm.n_per_class = to_size(v); },
         [](const C &c) { return std::to_string(c.data.sbm.n_per_class); }},
        {"data.n_classes", "SBM blocks",
         [](C &c, const S &v) { c.data.sbm.n_classes = to_size(v); },
         [](const C &c) { return std::to_string(c.data.sbm.n_classes); }},
        {"data.p_in", "intra-block edge probability",
         [](C &c, const S &v) { c.data.sbm.p_in = to_double(v); },
         [](const C &c) { return fmt_double(c.data.sbm.p_in); }},
        {"data.p_out", "inter-block edge probability",
         [](C &c, const S &v) { c.data.sbm.p_out = to_double(v); },
         [](const C &c) { return fmt_double(c.data.sbm.p_out); }},
        {"data.feature_dim", "feature dimension",
         [](C &c, const S &v) { c.data.sbm.feature_dim = to_size(v); },
         [](const C &c) { return std::to_string(c.data.sbm.feature_dim); }},
        {"data.class_sep", "distance between class feature means",
         [](C &c, const S &v) { c.data.sbm.class_sep = to_double(v); },
         [](const C &c) { return fmt_double(c.data.sbm.class_sep); }},
        {"data.n_train", "synthetic collection: training graphs",
         [](C &c, const S &v) { c.data.n_train = to_size(v); },
         [](const C &c) { return std::to_string(c.data.n_train); }},
        {"data.n_val", "synthetic collection: validation graphs",
         [](C &c, const S &v) { c.data.n_val = to_size(v); },
         [](const C &c) { return std::to_string(c.data.n_val); }},
        {"data.n_test", "synthetic collection: test graphs",
         [](C &c, const S &v) { c.data.n_test = to_size(v); },
         [](const C &c) { return std::to_string(c.data.n_test); }},
        {"data.multilabel", "synthetic collection: multi-label targets",
         [](C &c, const S &v) { c.data.multilabel = to_bool(v); },
         [](const C &c) { return S(c.data.multilabel ? "true" : "false"); }},
        {"data.n_labels", "synthetic collection: labels per node",
         [](C &c, const S &v) { c.data.n_labels = to_size(v); },
         [](const C &c) { return std::to_string(c.data.n_labels); }},

        {"noise.kind", "none | feature | structural",
         [](C &c, const S &v) { c.noise.kind = one_of(v, {"none", "feature", "structural"}); },
         [](const C &c) { return c.noise.kind; }},
        {"noise.level", "perturbation strength for train / linkpred",
         [](C &c, const S &v) { c.noise.level = to_double(v); },
         [](const C &c) { return fmt_double(c.noise.level); }},
        {"noise.levels", "sweep grid; empty selects the default grid for the kind",
         [](C &c, const S &v) { c.noise.levels = to_list<double>(v, to_double); },
         [](const C &c) { return from_list(c.noise.levels, fmt_double); }},
        {"noise.models", "models compared by noise-sweep",
         [](C &c, const S &v) {
             c.noise.models = to_list<LayerKind>(v, [](const S &s) { return parse_layer_kind(s); });
         },
         [](const C &c) { return from_list(c.noise.models, [](LayerKind k) { return S(to_string(k)); }); }},

        {"linkpred.frac_val", "fraction of edges held out for validation",
         [](C &c, const S &v) { c.linkpred.frac_val = to_double(v); },
         [](const C &c) { return fmt_double(c.linkpred.frac_val); }},
        {"linkpred.frac_test", "fraction of edges held out for testing",
         [](C &c, const S &v) { c.linkpred.frac_test = to_double(v); },
         [](const C &c) { return fmt_double(c.linkpred.frac_test); }},
        {"linkpred.neg_ratio", "negatives per positive",
         [](C &c, const S &v) { c.linkpred.neg_ratio = to_size(v); },
         [](const C &c) { return std::to_string(c.linkpred.neg_ratio); }},
        {"linkpred.hits_k", "K of Hits@K",
         [](C &c, const S &v) { c.linkpred.hits_k = to_size(v); },
         [](const C &c) { return std::to_string(c.linkpred.hits_k); }},

        {"gradcheck.configs", "random circuit configurations",
         [](C &c, const S &v) { c.gradcheck.configs = to_size(v); },
         [](const C &c) { return std::to_string(c.gradcheck.configs); }},
        {"gradcheck.qubits", "qubit counts drawn from",
         [](C &c, const S &v) { c.gradcheck.qubits = to_list<std::size_t>(v, to_size); },
         [sz](const C &c) { return from_list(c.gradcheck.qubits, sz); }},
        {"gradcheck.layers", "entangling-layer counts drawn from",
         [](C &c, const S &v) { c.gradcheck.layers = to_list<std::size_t>(v, to_size); },
         [sz](const C &c) { return from_list(c.gradcheck.layers, sz); }},
        {"gradcheck.circuit_step", "central-difference step for circuits",
         [](C &c, const S &v) { c.gradcheck.circuit_step = to_double(v); },
         [](const C &c) { return fmt_double(c.gradcheck.circuit_step); }},
        {"gradcheck.layer_step", "central-difference step for attention layers",
         [](C &c, const S &v) { c.gradcheck.layer_step = to_double(v); },
         [](const C &c) { return fmt_double(c.gradcheck.layer_step); }},
        {"gradcheck.tolerance", "maximum allowed relative error",
         [](C &c, const S &v) { c.gradcheck.tolerance = to_double(v); },
         [](const C &c) { return fmt_double(c.gradcheck.tolerance); }},
        {"gradcheck.seed", "seed for random configurations",
         [](C &c, const S &v) { c.gradcheck.seed = to_u64(v); },
         [](const C &c) { return std::to_string(c.gradcheck.seed); }},
        {"gradcheck.corrupt", "test hook: tensor whose analytic gradient is perturbed",
         [](C &c, const S &v) { c.gradcheck.corrupt = v; },
         [](const C &c) { return c.gradcheck.corrupt; }},
    };
    return f;
}
// clang-format on

inline const Field &find_field(const std::string &key) {
    for (const auto &f : fields()) {
        if (f.key == key) return f;
    }
    throw ConfigError("unknown config key '" + key + "'");
}

inline void set_field(ExperimentConfig &c, const std::string &key, const std::string &value,
                      const std::string &where) {
    const Field *f = nullptr;
    try {
        f = &find_field(key);
    } catch (const ConfigError &e) {
        throw ConfigError(where + ": " + e.what());
    }
    try {
        f->set(c, value);
    } catch (const Error &e) {
        throw ConfigError(where + ": " + key + ": " + e.what());
    }
}

} // namespace config_detail

/**
 * Parses the declarative config format:
 *
 *     # comment
 *     [training]
 *     lr = 0.002      # trailing comment
 *
 * Unknown sections or keys and repeated keys are rejected.
 */
inline ExperimentConfig parse_config(std::string_view text, const std::string &name) {
    ExperimentConfig c;
    std::string section;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    static const std::set<std::string> sections{"model", "training", "data",
                                                "noise", "linkpred", "gradcheck"};
    for (auto raw : detail::lines(text)) {
        ++line_no;
        const std::string where = name + ":" + std::to_string(line_no);
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(where + ": malformed section header");
            }
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            if (!sections.contains(section)) {
                throw ConfigError(where + ": unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(where + ": expected 'key = value'");
        }
        if (section.empty()) {
            throw ConfigError(where + ": key outside of any section");
        }
        const std::string key = section + "." + std::string(detail::trim(line.substr(0, eq)));
        if (!seen.insert(key).second) {
            throw ConfigError(where + ": duplicate key '" + key + "'");
        }
        config_detail::set_field(c, key, std::string(detail::trim(line.substr(eq + 1))), where);
    }
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path &path) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    std::string text;
    try {
        text = detail::read_text_file(path);
    } catch (const Error &e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, path.string());
}

/// Applies one "section.key=value" override.
inline void apply_override(ExperimentConfig &c, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    }
    const std::string key(detail::trim(std::string_view(assignment).substr(0, eq)));
    const std::string value(detail::trim(std::string_view(assignment).substr(eq + 1)));
    config_detail::set_field(c, key, value, "--override");
}

/// Every key with its current value; parsing the result yields an identical config.
inline std::string config_echo(const ExperimentConfig &c) {
    std::ostringstream out;
    out << "# effective configuration\n";
    std::string section;
    for (const auto &f : config_detail::fields()) {
        const auto dot = f.key.find('.');
        const std::string s = f.key.substr(0, dot);
        if (s != section) {
            out << (section.empty() ? "" : "\n") << "[" << s << "]\n";
            section = s;
        }
        out << f.key.substr(dot + 1) << " = " << f.get(c) << "    # " << f.doc << "\n";
    }
    return out.str();
}

inline bool operator==(const ExperimentConfig &a, const ExperimentConfig &b) {
    return config_echo(a) == config_echo(b);
}

} // namespace qgat
