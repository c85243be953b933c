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

#include "qgat/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace qgat;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "qgat");
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Drops the trailing wall-clock column of a metrics CSV.
std::string without_seconds(const std::string &csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        static int counter = 0;
        dir_ = fs::temp_directory_path() /
               ("qgat_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    [[nodiscard]] std::string path(const std::string &name) const { return (dir_ / name).string(); }
    fs::path dir_;
};

const std::vector<std::string> kQuick{"--override", "model.kind=gat",     "--override", "training.epochs=8",
                                      "--override", "model.heads=2,2",    "--override", "model.hidden_dims=4"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

} // namespace

TEST_F(CliTest, MissingConfigIsUsageErrorNamingPath) {
    auto r = cli({"train", "-c", path("nope.ini"), "-o", path("o")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find(path("nope.ini")), std::string::npos) << r.err;
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({"train", "--bogus-flag"}).code, 2);
    auto r = cli({"params", "-o", path("p"), "--override", "model.colour=red"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("model.colour"), std::string::npos) << r.err;
    EXPECT_EQ(cli({"params", "-o", path("p"), "--override", "training.lr=fast"}).code, 2);
    EXPECT_EQ(cli({"params", "-o", path("p"), "--override", "nokey"}).code, 2);
    EXPECT_EQ(cli({"train", "-o", path("t"), "-j", "0"}).code, 2);
    std::ofstream(path("bad.ini")) << "[model]\nkind = qgat\nflavour = 3\n";
    r = cli({"params", "-c", path("bad.ini"), "-o", path("p")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("bad.ini:3"), std::string::npos) << r.err;
}

TEST_F(CliTest, HelpExitsZero) {
    auto r = cli({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("noise-sweep"), std::string::npos);
    EXPECT_EQ(cli({"train", "--help"}).code, 0);
}

TEST_F(CliTest, OverrideShowsInEcho) {
    auto r = cli(with({"train", "-o", path("t"), "--override", "training.lr=1e-3"}, kQuick));
    ASSERT_EQ(r.code, 0) << r.err;
    auto echo = load_config(path("t/config.ini"));
    EXPECT_EQ(echo.train.learning_rate, 1e-3);
    EXPECT_NE(slurp(path("t/config.ini")).find("lr = 0.001"), std::string::npos);
}

TEST_F(CliTest, TrainFiveSeedsPrintsMeanStd) {
    auto r = cli(with({"train", "-o", path("t"), "--seeds", "0,1,2,3,4"}, kQuick));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("test accuracy: "), std::string::npos) << r.out;
    EXPECT_NE(r.out.find(" ± "), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("(mean ± std over 5 seeds)"), std::string::npos) << r.out;
    for (int s = 0; s < 5; ++s) {
        const auto m = slurp(path("t/metrics_seed" + std::to_string(s) + ".csv"));
        EXPECT_EQ(m.substr(0, m.find('\n')), "epoch,split,loss,metric,lr,seconds");
        EXPECT_TRUE(fs::exists(path("t/checkpoint_seed" + std::to_string(s) + ".json")));
    }
    const auto summary = slurp(path("t/summary.csv"));
    EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 6);
}

TEST_F(CliTest, RerunFromEchoIsBitExact) {
    auto a = cli(with({"train", "-o", path("a"), "--seeds", "3,4", "--override", "model.dropout=0.3"}, kQuick));
    ASSERT_EQ(a.code, 0) << a.err;
    auto b = cli({"train", "-c", path("a/config.ini"), "-o", path("b"), "-j", "2"});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(path("a/config.ini")), slurp(path("b/config.ini")));
    for (const char *s : {"3", "4"}) {
        const std::string f = std::string("metrics_seed") + s + ".csv";
        EXPECT_EQ(without_seconds(slurp(path("a/" + f))), without_seconds(slurp(path("b/" + f))));
    }
    EXPECT_EQ(slurp(path("a/summary.csv")), slurp(path("b/summary.csv")));
    EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, EchoRoundTripsThroughParser) {
    ExperimentConfig cfg;
    apply_override(cfg, "model.heads=6,6,4");
    apply_override(cfg, "noise.kind=structural");
    apply_override(cfg, "noise.levels=0,0.25");
    apply_override(cfg, "training.seeds=1,2,3");
    const auto text = config_echo(cfg);
    EXPECT_EQ(parse_config(text, "echo"), cfg);
    EXPECT_EQ(config_echo(parse_config(text, "echo")), text);
}

TEST_F(CliTest, GradcheckPassesAndListsEveryTensor) {
    auto r = cli({"gradcheck", "-o", path("g"), "--override", "gradcheck.configs=10"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    for (const char *name : {"theta", "input", "W ", "P ", "a_dst", "a_src", "W_dst", "W_src", "shortcut", "features"})
        EXPECT_NE(r.out.find(name), std::string::npos) << name;
    for (const char *comp : {"vqc", "qgat", "gat ", "gatv2"}) EXPECT_NE(r.out.find(comp), std::string::npos) << comp;
    EXPECT_EQ(slurp(path("g/gradcheck.txt")), r.out);
}

TEST_F(CliTest, CorruptedGradientFailsGradcheck) {
    for (const char *target : {"qgat.P", "vqc.theta", "gatv2.a"}) {
        auto r = cli({"gradcheck", "-o", path("g"), "--override", "gradcheck.configs=5", "--override",
                      std::string("gradcheck.corrupt=") + target});
        EXPECT_EQ(r.code, 1) << target;
        EXPECT_NE(r.out.find("FAIL"), std::string::npos);
    }
}

TEST_F(CliTest, ParamsAccounting) {
    auto count = [&](const std::vector<std::string> &ov) {
        std::vector<std::string> args{"params", "-o", path("p")};
        for (const auto &o : ov) {
            args.push_back("--override");
            args.push_back(o);
        }
        auto r = cli(args);
        EXPECT_EQ(r.code, 0) << r.err;
        return r.out;
    };
    EXPECT_NE(count({}).find("total"), std::string::npos);
    for (std::size_t nq : {2, 4, 6}) {
        ExperimentConfig cfg;
        cfg.train.model.in_dim = 8;
        cfg.train.model.n_qubits = nq;
        for (std::size_t L = 1; L <= 3; ++L) {
            cfg.train.model.entangling_layers = L;
            auto a = count_params(cfg.train.model, LayerKind::QGAT);
            cfg.train.model.entangling_layers = L + 1;
            auto b = count_params(cfg.train.model, LayerKind::QGAT);
            const std::size_t layers = cfg.train.model.heads.size();
            EXPECT_EQ(b.total - a.total, 3 * nq * layers);
            EXPECT_EQ(a.quantum, 3 * nq * L * layers);
        }
    }
    ModelConfig mc;
    mc.in_dim = 8;
    EXPECT_GT(count_params(mc, LayerKind::GATv2).total, count_params(mc, LayerKind::GAT).total);
    mc.entangling_layers = 0;
    EXPECT_EQ(count_params(mc, LayerKind::QGAT).quantum, 0U);
    const auto out = count({"model.entangling_layers=0"});
    EXPECT_NE(out.find("quantum 0"), std::string::npos) << out;
    const auto csv = slurp(path("p/params.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,module,rows,cols,count,quantum");
}

TEST_F(CliTest, NoiseSweepLevelZeroMatchesTrain) {
    auto s = cli({"noise-sweep", "-o", path("s"), "--seeds", "5", "--override", "noise.kind=feature", "--override",
                  "noise.levels=0,0.2", "--override", "noise.models=gat,gatv2", "--override", "training.epochs=8",
                  "--override", "model.heads=2,2", "--override", "model.hidden_dims=4"});
    ASSERT_EQ(s.code, 0) << s.err;
    auto t = cli(with({"train", "-o", path("t"), "--seeds", "5"}, kQuick));
    ASSERT_EQ(t.code, 0) << t.err;
    const auto rows = parse_sweep_csv(slurp(path("s/sweep_feature.csv")), "sweep");
    ASSERT_EQ(rows.size(), 4U);
    const auto summary = slurp(path("t/summary.csv"));
    const auto line = summary.substr(summary.find('\n') + 1);
    const auto test_metric = line.substr(line.rfind(',') + 1, line.find('\n') - line.rfind(',') - 1);
    bool found = false;
    for (const auto &r : rows) {
        if (r.model == "gat" && r.level == 0.0) {
            EXPECT_EQ(format_exact(r.metric), test_metric);
            found = true;
        }
    }
    EXPECT_TRUE(found);
    const auto svg = slurp(path("s/sweep_feature.svg"));
    EXPECT_NE(svg.find("data-model=\"gat\""), std::string::npos);
    EXPECT_NE(svg.find("data-model=\"gatv2\""), std::string::npos);
    EXPECT_EQ(svg.find("data-model=\"qgat\""), std::string::npos);
    EXPECT_NE(s.out.find("mean at max noise <= mean at zero noise"), std::string::npos);
    EXPECT_NE(s.out.find("ordering at 0.2"), std::string::npos);
}

TEST_F(CliTest, SweepGridsDefaultByKind) {
    ExperimentConfig cfg;
    cfg.noise.kind = "feature";
    EXPECT_EQ(cfg.sweep_levels(), (std::vector<double>{0.0, 0.01, 0.05, 0.1, 0.2}));
    cfg.noise.kind = "structural";
    EXPECT_EQ(cfg.sweep_levels(), (std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5}));
    cfg.noise.kind = "none";
    EXPECT_THROW((void)cfg.sweep_levels(), ConfigError);
    EXPECT_EQ(cli({"noise-sweep", "-o", path("s")}).code, 2);
}

TEST_F(CliTest, LinkpredWritesHitsAndMrrColumns) {
    auto r = cli(with({"linkpred", "-o", path("l"), "--seeds", "0,1", "--override", "linkpred.hits_k=10"}, kQuick));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto csv = slurp(path("l/linkpred.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "seed,k,val_hits@10,val_mrr,test_hits@10,test_mrr");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_NE(r.out.find("test hits@10: "), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("test mrr: "), std::string::npos) << r.out;
    EXPECT_EQ(load_config(path("l/config.ini")).linkpred.hits_k, 10U);
    EXPECT_EQ(ExperimentConfig{}.linkpred.hits_k, 50U);
}

TEST_F(CliTest, SynthThenTrainFromJson) {
    auto s = cli({"synth", "-o", path("d"), "--override", "data.seed=4"});
    ASSERT_EQ(s.code, 0) << s.err;
    ASSERT_TRUE(fs::exists(path("d/graph.json")));
    ASSERT_TRUE(fs::exists(path("d/edgelist/edges.txt")));
    auto t = cli(with({"train", "-o", path("t"), "--override", "data.source=json", "--override",
                       "data.path=" + path("d/graph.json")},
                      kQuick));
    EXPECT_EQ(t.code, 0) << t.err;
    auto e = cli(with({"train", "-o", path("e"), "--override", "data.source=edgelist", "--override",
                       "data.path=" + path("d/edgelist")},
                      kQuick));
    EXPECT_EQ(e.code, 0) << e.err;
    const Graph a = load_graph(path("d/graph.json"), GraphFormat::JsonBundle);
    const Graph b = load_graph(path("d/edgelist"), GraphFormat::EdgeListCsv);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.classes, b.classes);
}

TEST_F(CliTest, SynthCollectionAndInductiveTrain) {
    auto s = cli({"synth", "-o", path("c"), "--override", "data.source=synth-collection"});
    ASSERT_EQ(s.code, 0) << s.err;
    ASSERT_TRUE(fs::exists(path("c/manifest.json")));
    auto t = cli(with({"train", "-o", path("t"), "--override", "data.source=collection", "--override",
                       "data.path=" + path("c/manifest.json"), "--override", "training.task=multi-label"},
                      kQuick));
    EXPECT_EQ(t.code, 0) << t.err;
    EXPECT_NE(t.out.find("test micro-f1: "), std::string::npos) << t.out;
}

TEST_F(CliTest, RuntimeFailureExitsOne) {
    std::ofstream(path("broken.json")) << "{\"features\": [[1]], \"edges\": [[0, 3]]}";
    auto r = cli(with({"train", "-o", path("t"), "--override", "data.source=json", "--override",
                       "data.path=" + path("broken.json")},
                      kQuick));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("broken.json"), std::string::npos) << r.err;
}

TEST(ConfigParser, StrictnessAndContext) {
    auto msg = [](const std::string &text) {
        try {
            parse_config(text, "x.ini");
        } catch (const ConfigError &e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(msg("kind = qgat\n").find("x.ini:1"), std::string::npos);
    EXPECT_NE(msg("[model]\nkind = qgat\nkind = gat\n").find("x.ini:3"), std::string::npos);
    EXPECT_NE(msg("[optimizer]\nlr = 1\n").find("x.ini:1"), std::string::npos);
    EXPECT_NE(msg("[model]\n\nkind = transformer\n").find("x.ini:3"), std::string::npos);
    EXPECT_NE(msg("[training]\nepochs = -4\n").find("x.ini:2"), std::string::npos);
    auto cfg = parse_config("# comment\n[model]\nkind = gatv2   # trailing\n\n[training]\nseeds = 4,5\n", "x.ini");
    EXPECT_EQ(cfg.train.model.kind, LayerKind::GATv2);
    EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{4, 5}));
}

TEST(Plot, MeanStdUsesSampleDeviation) {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    auto m = mean_std(xs);
    EXPECT_DOUBLE_EQ(m.mean, 2.5);
    EXPECT_NEAR(m.std, std::sqrt(5.0 / 3.0), 1e-15);
    EXPECT_EQ(mean_std(std::vector<double>{0.7}).std, 0.0);
    EXPECT_EQ(format_mean_std(m), "2.5000 ± 1.2910");
}

TEST(Plot, SweepCsvRoundTripsAndAggregates) {
    std::vector<SweepRow> rows{{"qgat", 0.0, 0, 0.9}, {"qgat", 0.0, 1, 0.8}, {"qgat", 0.1, 0, 0.7},
                               {"qgat", 0.1, 1, 0.6}, {"gat", 0.0, 0, 0.85}, {"gat", 0.1, 0, 0.65}};
    const auto csv = sweep_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,level,seed,metric");
    const auto back = parse_sweep_csv(csv, "s.csv");
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].model, rows[i].model);
        EXPECT_EQ(back[i].level, rows[i].level);
        EXPECT_EQ(back[i].metric, rows[i].metric);
    }
    auto series = aggregate_sweep(back);
    ASSERT_EQ(series.size(), 2U);
    for (const auto &s : series) {
        if (s.model != "qgat") continue;
        ASSERT_EQ(s.points.size(), 2U);
        EXPECT_NEAR(s.points[0].stats.mean, 0.85, 1e-15);
        EXPECT_EQ(s.points[1].stats.n, 2U);
    }
    EXPECT_THROW(parse_sweep_csv("model,level,seed,metric\nqgat,zero,0,1\n", "s.csv"), ParseError);
    const auto svg = render_sweep_svg(back, "t", "x", "y");
    EXPECT_EQ(svg.rfind("<svg", 0), 0U);
    EXPECT_NE(svg.find("data-model=\"qgat\""), std::string::npos);
    EXPECT_NE(svg.find("data-model=\"gat\""), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
