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
 * @file experiments.hpp
 * Experiment drivers behind the command-line subcommands: per-seed training,
 * noise sweeps, link prediction, gradient checks, parameter accounting and
 * dataset synthesis. Every driver writes its artifacts under an output
 * directory, starting with the effective configuration echo.
 */
#pragma once

#include "attention.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "inductive.hpp"
#include "model.hpp"
#include "plot.hpp"
#include "training.hpp"
#include "vqc.hpp"

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace qgat {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Logging

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

inline constexpr const char *kLogEnv = "QGAT_LOG";

/// Reads QGAT_LOG (quiet | info | debug); anything else means info.
inline LogLevel log_level_from_env() {
    const char *v = std::getenv(kLogEnv);
    if (!v) return LogLevel::Info;
    const std::string s(v);
    if (s == "quiet" || s == "0") return LogLevel::Quiet;
    if (s == "debug" || s == "2") return LogLevel::Debug;
    return LogLevel::Info;
}

class Logger {
  public:
    explicit Logger(std::ostream &sink, LogLevel level = log_level_from_env())
        : sink_(&sink), level_(level) {}

    void info(const std::string &msg) { write(LogLevel::Info, msg); }
    void debug(const std::string &msg) { write(LogLevel::Debug, msg); }
    [[nodiscard]] LogLevel level() const { return level_; }

  private:
    void write(LogLevel l, const std::string &msg) {
        if (static_cast<int>(l) > static_cast<int>(level_)) return;
        std::lock_guard<std::mutex> lock(mu_);
        *sink_ << "[qgat] " << msg << "\n";
    }

    std::ostream *sink_;
    LogLevel level_;
    std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Data

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// A single transductive graph or a multi-graph collection.
struct Dataset {
    Graph graph;
    std::optional<GraphCollection> collection;

    [[nodiscard]] std::size_t feature_dim() const {
        return collection ? collection->graph(0).feature_dim() : graph.feature_dim();
    }
    [[nodiscard]] std::size_t target_width() const {
        return collection ? collection->graph(0).n_classes() : graph.n_classes();
    }
};

inline Dataset load_dataset(const DataConfig &d) {
    Dataset ds;
    auto need_path = [&] {
        if (d.path.empty()) {
            throw ConfigError("data.path is required for data.source = " + d.source);
        }
        return fs::path(d.path);
    };
    if (d.source == "sbm") {
        ds.graph = synth_sbm(d.sbm, d.seed);
    } else if (d.source == "edgelist") {
        const auto dir = need_path();
        ds.graph = load_edge_list_graph(dir / "features.csv", dir / "edges.txt", d.directed);
    } else if (d.source == "json") {
        ds.graph = load_json_bundle(need_path());
    } else if (d.source == "collection") {
        ds.collection = load_collection(need_path());
    } else if (d.source == "synth-collection") {
        CollectionParams p;
        p.n_train = d.n_train;
        p.n_val = d.n_val;
        p.n_test = d.n_test;
        p.sbm = d.sbm;
        p.multilabel = d.multilabel;
        p.n_labels = d.n_labels;
        ds.collection = synth_collection(p, d.seed);
    } else {
        throw ConfigError("unknown data.source '" + d.source + "'");
    }
    if (!ds.collection && !ds.graph.has_masks()) {
        std::mt19937_64 rng(d.seed);
        random_split(ds.graph, rng);
    }
    return ds;
}

/// Fills model.in_dim and (if auto) model.out_dim from the data; checks task/data fit.
inline void resolve_dims(ExperimentConfig &cfg, const Dataset &ds) {
    auto &m = cfg.train.model;
    m.in_dim = ds.feature_dim();
    if (ds.collection && cfg.train.task == Task::LinkPred) {
        throw ConfigError("link prediction needs a single graph, not a collection");
    }
    if (cfg.out_dim_auto) {
        m.out_dim = cfg.train.task == Task::LinkPred ? 16 : ds.target_width();
        cfg.out_dim_auto = false;
    }
}

inline Graph apply_noise(const Graph &g, const std::string &kind, double level, std::uint64_t seed) {
    if (kind == "none") return g;
    if (kind == "feature") return add_feature_noise(g, level, seed);
    if (kind == "structural") return add_structural_noise(g, level, seed);
    throw ConfigError("unknown noise.kind '" + kind + "'");
}

/// Noise is drawn once per run from a stream of the run seed shared by all models.
inline std::uint64_t noise_seed(std::uint64_t run_seed) { return derive_seed(run_seed, 1); }

// ---------------------------------------------------------------------------
// Single runs

struct RunOutcome {
    std::uint64_t seed = 0;
    TrainResult result;
    std::unique_ptr<Model> model;
};

/// Trains one model for one seed on the configured task.
inline RunOutcome run_single(const ExperimentConfig &cfg, const Dataset &ds, std::uint64_t seed,
                             const EpochCallback &cb = {}) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    RunOutcome out;
    out.seed = seed;
    out.model = std::make_unique<Model>(tc.model, seed);
    if (ds.collection) {
        if (cfg.noise.kind != "none") {
            throw ConfigError("noise injection is only supported for single-graph data");
        }
        GraphCollection c = *ds.collection;
        out.result = train_inductive(*out.model, c, tc, cb);
        return out;
    }
    const Graph g = apply_noise(ds.graph, cfg.noise.kind, cfg.noise.level, noise_seed(seed));
    if (tc.task == Task::LinkPred) {
        auto split = split_link_prediction(g, cfg.linkpred.frac_val, cfg.linkpred.frac_test,
                                           cfg.linkpred.neg_ratio, seed);
        auto data = LinkTaskData::from_split(split, cfg.linkpred.neg_ratio, cfg.linkpred.hits_k);
        out.result = train_link(*out.model, data, tc, cb);
    } else {
        out.result = train(*out.model, NodeTaskData::transductive(g, tc.task), tc, cb);
    }
    return out;
}

/**
 * Runs fn(i) for i in [0, n) on at most `jobs` threads. The first exception
 * (by index) is rethrown after all workers finish.
 */
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F &&fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }
    for (auto &e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------------------
// Artifacts

inline const char *kMetricsHeader = "epoch,split,loss,metric,lr,seconds";

inline std::string metrics_csv(const std::vector<MetricsRecord> &history) {
    std::ostringstream out;
    out << kMetricsHeader << "\n";
    for (const auto &r : history) {
        const std::pair<const char *, const Evaluation *> splits[3] = {
            {"train", &r.train}, {"val", &r.val}, {"test", &r.test}};
        for (const auto &[name, ev] : splits) {
            out << r.epoch << "," << name << "," << format_exact(ev->loss) << ","
                << format_exact(ev->metric) << "," << format_exact(r.lr) << ","
                << format_exact(r.seconds) << "\n";
        }
    }
    return out.str();
}

inline void write_text(const fs::path &path, const std::string &text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

inline std::string metric_name(const ExperimentConfig &cfg) {
    switch (cfg.train.task) {
    case Task::NodeClass: return "accuracy";
    case Task::MultiLabel: return "micro-f1";
    case Task::LinkPred: return "hits@" + std::to_string(cfg.linkpred.hits_k);
    }
    return "metric";
}

inline const char *kEchoFile = "config.ini";

// ---------------------------------------------------------------------------
// train / linkpred

struct SeedSummary {
    std::uint64_t seed = 0;
    std::size_t best_epoch = 0;
    Evaluation val, test;
    std::vector<MetricsRecord> history;
};

struct TrainReport {
    ExperimentConfig config; ///< fully resolved
    std::string metric;
    std::vector<SeedSummary> runs;
    MeanStd test;
    MeanStd test_mrr; ///< link prediction only
    std::string summary_line;
};

struct CommandContext {
    fs::path out_dir = "qgat-out";
    std::size_t jobs = 1;
    std::ostream *out = &std::cout;
    Logger *log = nullptr;
};

namespace exp_detail {

inline Logger &fallback_logger() {
    static Logger l(std::cerr);
    return l;
}

inline Logger &logger(const CommandContext &ctx) { return ctx.log ? *ctx.log : fallback_logger(); }

inline std::string fmt4(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
}

} // namespace exp_detail

/**
 * Trains one model per seed. Writes config.ini, metrics_seed<S>.csv,
 * checkpoint_seed<S>.json and summary.csv, and prints the mean +- std line.
 */
inline TrainReport run_train(ExperimentConfig cfg, const CommandContext &ctx) {
    auto &log = exp_detail::logger(ctx);
    if (cfg.seeds.empty()) throw ConfigError("training.seeds must list at least one seed");
    const Dataset ds = load_dataset(cfg.data);
    resolve_dims(cfg, ds);
    cfg.train.validate();
    const std::string echo = config_echo(cfg);
    fs::create_directories(ctx.out_dir);
    write_text(ctx.out_dir / kEchoFile, echo);

    std::vector<RunOutcome> outcomes(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), ctx.jobs, [&](std::size_t i) {
        const auto seed = cfg.seeds[i];
        auto cb = [&log, seed](const MetricsRecord &r) {
            if (log.level() >= LogLevel::Debug) {
                log.debug("seed " + std::to_string(seed) + " epoch " + std::to_string(r.epoch) +
                          " train_loss " + exp_detail::fmt4(r.train.loss) + " val " +
                          exp_detail::fmt4(r.val.metric));
            }
        };
        outcomes[i] = run_single(cfg, ds, seed, cb);
        log.info("seed " + std::to_string(seed) + " done: best epoch " +
                 std::to_string(outcomes[i].result.best_epoch) + ", test " +
                 exp_detail::fmt4(outcomes[i].result.best.test.metric));
    });

    TrainReport rep;
    rep.metric = metric_name(cfg);
    const bool link = cfg.train.task == Task::LinkPred;
    std::ostringstream summary;
    summary << "seed,best_epoch,val_metric,test_metric" << (link ? ",val_mrr,test_mrr" : "") << "\n";
    std::vector<double> tests, mrrs;
    for (auto &o : outcomes) {
        const auto s = std::to_string(o.seed);
        write_text(ctx.out_dir / ("metrics_seed" + s + ".csv"), metrics_csv(o.result.history));
        save_checkpoint(ctx.out_dir / ("checkpoint_seed" + s + ".json"), *o.model, echo);
        SeedSummary ss{o.seed, o.result.best_epoch, o.result.best.val, o.result.best.test,
                       o.result.history};
        summary << s << "," << ss.best_epoch << "," << format_exact(ss.val.metric) << ","
                << format_exact(ss.test.metric);
        if (link) summary << "," << format_exact(ss.val.mrr) << "," << format_exact(ss.test.mrr);
        summary << "\n";
        tests.push_back(ss.test.metric);
        mrrs.push_back(ss.test.mrr);
        rep.runs.push_back(std::move(ss));
    }
    write_text(ctx.out_dir / "summary.csv", summary.str());
    rep.test = mean_std(tests);
    rep.summary_line = "test " + rep.metric + ": " + format_mean_std(rep.test) +
                       " (mean ± std over " + std::to_string(tests.size()) + " seeds)";
    if (link) {
        rep.test_mrr = mean_std(mrrs);
        rep.summary_line += "\ntest mrr: " + format_mean_std(rep.test_mrr) + " (mean ± std over " +
                            std::to_string(mrrs.size()) + " seeds)";
    }
    *ctx.out << rep.summary_line << "\n";
    rep.config = std::move(cfg);
    return rep;
}

/// Link prediction per seed; adds linkpred.csv with Hits@K and MRR columns.
inline TrainReport run_linkpred(ExperimentConfig cfg, const CommandContext &ctx) {
    cfg.train.task = Task::LinkPred;
    if (cfg.linkpred.hits_k == 0) throw ConfigError("linkpred.hits_k must be >= 1");
    auto rep = run_train(std::move(cfg), ctx);
    const std::string k = std::to_string(rep.config.linkpred.hits_k);
    std::ostringstream csv;
    csv << "seed,k,val_hits@" << k << ",val_mrr,test_hits@" << k << ",test_mrr\n";
    for (const auto &r : rep.runs) {
        csv << r.seed << "," << k << "," << format_exact(r.val.metric) << ","
            << format_exact(r.val.mrr) << "," << format_exact(r.test.metric) << ","
            << format_exact(r.test.mrr) << "\n";
    }
    write_text(ctx.out_dir / "linkpred.csv", csv.str());
    return rep;
}

// ---------------------------------------------------------------------------
// noise-sweep

struct SweepReport {
    ExperimentConfig config;
    std::vector<SweepRow> rows;
    std::vector<Series> series;
    std::vector<std::pair<std::string, bool>> degrades; ///< mean at max level <= mean at level 0
    fs::path csv_path, svg_path;
};

/**
 * Trains every model x level x seed cell on a bounded worker pool and writes
 * sweep_<kind>.csv (model, level, seed, metric) plus sweep_<kind>.svg drawn
 * from that CSV.
 */
inline SweepReport run_noise_sweep(ExperimentConfig cfg, const CommandContext &ctx) {
    auto &log = exp_detail::logger(ctx);
    const auto levels = cfg.sweep_levels();
    if (cfg.noise.models.empty()) throw ConfigError("noise.models must name at least one model");
    if (cfg.seeds.empty()) throw ConfigError("training.seeds must list at least one seed");
    const Dataset ds = load_dataset(cfg.data);
    if (ds.collection) throw ConfigError("noise-sweep needs single-graph data");
    resolve_dims(cfg, ds);
    cfg.train.validate();
    fs::create_directories(ctx.out_dir);
    write_text(ctx.out_dir / kEchoFile, config_echo(cfg));

    struct Cell {
        LayerKind model;
        double level;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (auto m : cfg.noise.models)
        for (double l : levels)
            for (auto s : cfg.seeds) cells.push_back({m, l, s});

    std::vector<double> metric(cells.size());
    std::atomic<std::size_t> done{0};
    parallel_for(cells.size(), ctx.jobs, [&](std::size_t i) {
        ExperimentConfig c = cfg;
        c.train.model.kind = cells[i].model;
        c.noise.level = cells[i].level;
        metric[i] = run_single(c, ds, cells[i].seed).result.best.test.metric;
        log.info(std::string("cell ") + std::to_string(++done) + "/" + std::to_string(cells.size()) +
                 ": " + to_string(cells[i].model) + " level " + format_exact(cells[i].level) +
                 " seed " + std::to_string(cells[i].seed) + " -> " + exp_detail::fmt4(metric[i]));
    });

    SweepReport rep;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        rep.rows.push_back({to_string(cells[i].model), cells[i].level, cells[i].seed, metric[i]});
    }
    const std::string kind = cfg.noise.kind;
    rep.csv_path = ctx.out_dir / ("sweep_" + kind + ".csv");
    rep.svg_path = ctx.out_dir / ("sweep_" + kind + ".svg");
    write_text(rep.csv_path, sweep_csv(rep.rows));
    const auto from_csv = parse_sweep_csv(detail::read_text_file(rep.csv_path), rep.csv_path.string());
    write_text(rep.svg_path,
               render_sweep_svg(from_csv, kind + " noise robustness",
                                kind == "feature" ? "feature noise level (epsilon)"
                                                  : "structural noise level (eta)",
                                "test " + metric_name(cfg)));

    rep.series = aggregate_sweep(from_csv);
    auto &o = *ctx.out;
    o << "noise-sweep (" << kind << "), test " << metric_name(cfg) << " mean ± std over "
      << cfg.seeds.size() << " seeds\n";
    for (const auto &s : rep.series) {
        o << "  " << s.model << ":";
        for (const auto &p : s.points) o << "  " << format_exact(p.level) << " -> " << format_mean_std(p.stats);
        o << "\n";
        const bool ok = s.points.back().stats.mean <= s.points.front().stats.mean;
        rep.degrades.emplace_back(s.model, ok);
        o << "  " << s.model << " mean at max noise <= mean at zero noise: " << (ok ? "yes" : "no") << "\n";
    }
    for (std::size_t li = 0; li < levels.size(); ++li) {
        std::vector<std::pair<double, std::string>> rank;
        for (const auto &s : rep.series) {
            for (const auto &p : s.points) {
                if (p.level == levels[li]) rank.emplace_back(p.stats.mean, s.model);
            }
        }
        std::stable_sort(rank.begin(), rank.end(), [](auto &a, auto &b) { return a.first > b.first; });
        o << "  ordering at " << format_exact(levels[li]) << ":";
        for (std::size_t r = 0; r < rank.size(); ++r) o << (r ? " >= " : " ") << rank[r].second;
        o << "\n";
    }
    rep.config = std::move(cfg);
    return rep;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckEntry {
    std::string component; ///< vqc | qgat | gat | gatv2
    std::string tensor;
    double max_rel_error = 0.0;
};

struct GradcheckReport {
    double tolerance = 1e-4;
    std::vector<GradcheckEntry> entries;

    [[nodiscard]] bool passed() const {
        for (const auto &e : entries) {
            if (!(e.max_rel_error <= tolerance)) return false;
        }
        return true;
    }
};

/// |a - b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor = 1e-3) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

namespace exp_detail {

inline void maybe_corrupt(const GradcheckConfig &g, const std::string &name, std::span<double> grad) {
    if (g.corrupt == name && !grad.empty()) {
        grad[0] = grad[0] * 1.01 + 1e-2;
    }
}

inline void record(GradcheckReport &rep, const std::string &component, const std::string &tensor,
                   double err) {
    for (auto &e : rep.entries) {
        if (e.component == component && e.tensor == tensor) {
            e.max_rel_error = std::max(e.max_rel_error, err);
            return;
        }
    }
    rep.entries.push_back({component, tensor, err});
}

/// Small directed graph with an asymmetric edge and a degree-1 node.
inline Graph gradcheck_graph(std::mt19937_64 &rng, std::size_t in_dim) {
    Graph g;
    g.n_nodes = 4;
    g.edges = {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 0}};
    g.features = Matrix(4, in_dim);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto &v : g.features.data()) v = n(rng);
    return g;
}

} // namespace exp_detail

/// Central-difference checks of the circuit adjoint and of each attention layer.
inline GradcheckReport run_gradcheck(const GradcheckConfig &gc) {
    if (gc.qubits.empty() || gc.layers.empty()) {
        throw ConfigError("gradcheck.qubits and gradcheck.layers must not be empty");
    }
    GradcheckReport rep;
    rep.tolerance = gc.tolerance;
    std::mt19937_64 rng(gc.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    rep.entries.push_back({"vqc", "theta", 0.0});
    rep.entries.push_back({"vqc", "input", 0.0});
    for (std::size_t c = 0; c < gc.configs; ++c) {
        const std::size_t nq = gc.qubits[rng() % gc.qubits.size()];
        const std::size_t L = gc.layers[rng() % gc.layers.size()];
        CircuitParams params = CircuitParams::random(L, nq, rng);
        const auto layout = default_layout(nq, L);
        std::vector<double> x(std::size_t{1} << nq), w(nq);
        for (auto &v : x) v = normal(rng);
        for (auto &v : w) v = normal(rng);
        auto f = [&](const CircuitParams &p, const std::vector<double> &in) {
            auto z = circuit_forward(in, p, layout);
            double s = 0.0;
            for (std::size_t k = 0; k < nq; ++k) s += w[k] * z[k];
            return s;
        };
        auto g = circuit_backward(x, params, layout, w);
        exp_detail::maybe_corrupt(gc, "vqc.theta", g.params);
        exp_detail::maybe_corrupt(gc, "vqc.input", g.input);
        const double h = gc.circuit_step;
        for (std::size_t i = 0; i < params.size(); ++i) {
            CircuitParams p = params, m = params;
            p.angles()[i] += h;
            m.angles()[i] -= h;
            const double fd = (f(p, x) - f(m, x)) / (2 * h);
            exp_detail::record(rep, "vqc", "theta", relative_error(g.params[i], fd));
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            auto p = x, m = x;
            p[i] += h;
            m[i] -= h;
            const double fd = (f(params, p) - f(params, m)) / (2 * h);
            exp_detail::record(rep, "vqc", "input", relative_error(g.input[i], fd));
        }
    }

    for (LayerKind kind : {LayerKind::QGAT, LayerKind::GAT, LayerKind::GATv2}) {
        const std::string comp = to_string(kind);
        LayerConfig lc;
        lc.kind = kind;
        lc.in_dim = 3;
        lc.out_dim = 2;
        lc.heads = 2;
        lc.n_qubits = 2;
        lc.entangling_layers = 2;
        lc.dropout = 0.0;
        lc.residual = true;
        lc.merge = Merge::Concat;
        lc.activation = Activation::ELU;
        auto layer = make_layer(lc, rng);
        const Graph g = exp_detail::gradcheck_graph(rng, lc.in_dim);
        const auto mi = build_message_index(g);
        Matrix up(g.n_nodes, lc.output_width());
        for (auto &v : up.data()) v = normal(rng);
        auto f = [&](const Matrix &feats) {
            const Matrix out = layer_forward(*layer, mi, feats);
            double s = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * up.data()[i];
            return s;
        };
        auto grads = layer_backward(*layer, mi, g.features, up);
        const double h = gc.layer_step;
        auto named = layer->params();
        for (std::size_t pi = 0; pi < named.size(); ++pi) {
            auto &analytic = grads.params[pi].second;
            exp_detail::maybe_corrupt(gc, comp + "." + named[pi].name, analytic.data());
            rep.entries.push_back({comp, named[pi].name, 0.0});
            auto &vals = named[pi].value->data();
            for (std::size_t i = 0; i < vals.size(); ++i) {
                const double orig = vals[i];
                vals[i] = orig + h;
                const double fp = f(g.features);
                vals[i] = orig - h;
                const double fm = f(g.features);
                vals[i] = orig;
                exp_detail::record(rep, comp, named[pi].name,
                                   relative_error(analytic.data()[i], (fp - fm) / (2 * h)));
            }
        }
        exp_detail::maybe_corrupt(gc, comp + ".features", grads.input.data());
        rep.entries.push_back({comp, "features", 0.0});
        for (std::size_t i = 0; i < g.features.size(); ++i) {
            Matrix p = g.features, m = g.features;
            p.data()[i] += h;
            m.data()[i] -= h;
            exp_detail::record(rep, comp, "features",
                               relative_error(grads.input.data()[i], (f(p) - f(m)) / (2 * h)));
        }
    }
    return rep;
}

inline std::string format_gradcheck(const GradcheckReport &rep) {
    std::ostringstream o;
    o << "component  tensor      max_rel_error  status\n";
    for (const auto &e : rep.entries) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-10s %-11s %13.3e  %s\n", e.component.c_str(),
                      e.tensor.c_str(), e.max_rel_error, e.max_rel_error <= rep.tolerance ? "ok" : "FAIL");
        o << buf;
    }
    o << (rep.passed() ? "all gradients within " : "gradient check FAILED, tolerance ")
      << format_exact(rep.tolerance) << "\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// params

struct ModuleCount {
    std::string module; ///< "layer<i>.<name>"
    std::size_t rows = 0, cols = 0;
    bool quantum = false;
};

struct ModelCount {
    LayerKind kind = LayerKind::QGAT;
    std::vector<ModuleCount> modules;
    std::size_t total = 0;
    std::size_t quantum = 0;
};

inline ModelCount count_params(ModelConfig mc, LayerKind kind) {
    mc.kind = kind;
    Model m(mc, 0);
    ModelCount out;
    out.kind = kind;
    for (std::size_t l = 0; l < m.n_layers(); ++l) {
        auto &layer = m.layer(l);
        for (auto &p : layer.params()) {
            const bool q = kind == LayerKind::QGAT && p.name == "theta";
            out.modules.push_back({"layer" + std::to_string(l) + "." + p.name, p.value->rows(),
                                   p.value->cols(), q});
        }
    }
    out.total = m.param_count();
    out.quantum = m.quantum_param_count();
    return out;
}

/// Parameter counts for qgat, gat and gatv2 at the configured dimensions.
inline std::vector<ModelCount> run_params(ExperimentConfig cfg, const CommandContext &ctx) {
    const Dataset ds = load_dataset(cfg.data);
    resolve_dims(cfg, ds);
    cfg.train.model.validate();
    std::vector<ModelCount> counts;
    std::ostringstream csv;
    csv << "model,module,rows,cols,count,quantum\n";
    auto &o = *ctx.out;
    for (LayerKind k : {LayerKind::QGAT, LayerKind::GAT, LayerKind::GATv2}) {
        counts.push_back(count_params(cfg.train.model, k));
        const auto &c = counts.back();
        o << to_string(k) << "\n";
        for (const auto &m : c.modules) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "  %-20s %5zu x %-5zu %10zu%s\n", m.module.c_str(), m.rows,
                          m.cols, m.rows * m.cols, m.quantum ? "  (quantum)" : "");
            o << buf;
            csv << to_string(k) << "," << m.module << "," << m.rows << "," << m.cols << ","
                << m.rows * m.cols << "," << (m.quantum ? 1 : 0) << "\n";
        }
        o << "  total " << c.total << ", quantum " << c.quantum << ", classical "
          << c.total - c.quantum << "\n";
    }
    fs::create_directories(ctx.out_dir);
    write_text(ctx.out_dir / kEchoFile, config_echo(cfg));
    write_text(ctx.out_dir / "params.csv", csv.str());
    return counts;
}

// ---------------------------------------------------------------------------
// synth

/// Writes features.csv (f0..f{d-1}[,label]) and edges.txt ("src dst" per line).
inline void write_edge_list_graph(const Graph &g, const fs::path &dir) {
    std::ostringstream f;
    for (std::size_t c = 0; c < g.feature_dim(); ++c) f << (c ? "," : "") << "f" << c;
    if (g.has_classes()) f << ",label";
    f << "\n";
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        for (std::size_t c = 0; c < g.feature_dim(); ++c) {
            f << (c ? "," : "") << format_exact(g.features(i, c));
        }
        if (g.has_classes()) f << "," << g.classes[i];
        f << "\n";
    }
    std::ostringstream e;
    e << "# src dst\n";
    for (const auto &ed : g.edges) e << ed.src << " " << ed.dst << "\n";
    write_text(dir / "features.csv", f.str());
    write_text(dir / "edges.txt", e.str());
}

/**
 * Materializes the configured dataset: graph.json plus an edgelist/ directory
 * for single graphs, a manifest with member graphs for collections.
 */
inline fs::path run_synth(const ExperimentConfig &cfg, const CommandContext &ctx) {
    const Dataset ds = load_dataset(cfg.data);
    fs::create_directories(ctx.out_dir);
    write_text(ctx.out_dir / kEchoFile, config_echo(cfg));
    fs::path main;
    if (ds.collection) {
        write_collection(*ds.collection, ctx.out_dir);
        main = ctx.out_dir / "manifest.json";
        *ctx.out << "wrote collection of " << ds.collection->size() << " graphs: " << main.string()
                 << "\n";
    } else {
        main = ctx.out_dir / "graph.json";
        write_json_bundle(ds.graph, main);
        write_edge_list_graph(ds.graph, ctx.out_dir / "edgelist");
        *ctx.out << "wrote graph with " << ds.graph.n_nodes << " nodes and " << ds.graph.edges.size()
                 << " directed edges: " << main.string() << "\n";
    }
    return main;
}

} // namespace qgat
