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
 * @file cli.hpp
 * Command-line front end. Exit codes: 0 success, 1 runtime failure,
 * 2 usage or configuration error.
 */
#pragma once

#include "config.hpp"
#include "errors.hpp"
#include "experiments.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace qgat {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct CliOptions {
    std::string config;
    std::string out;
    std::string seeds;
    std::vector<std::string> overrides;
    std::size_t jobs = 1;
};

namespace cli_detail {

inline void add_common(CLI::App *sub, CliOptions &o) {
    sub->add_option("-c,--config", o.config, "experiment config file (defaults apply if omitted)");
    sub->add_option("-o,--out", o.out, "output directory");
    sub->add_option("--seeds", o.seeds, "comma-separated seeds, replaces training.seeds");
    sub->add_option("--override", o.overrides, "section.key=value, may be repeated")->take_all();
    sub->add_option("-j,--jobs", o.jobs, "worker threads for independent runs")
        ->check(CLI::PositiveNumber);
}

inline ExperimentConfig resolve_config(const CliOptions &o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    for (const auto &ov : o.overrides) {
        apply_override(cfg, ov);
    }
    if (!o.seeds.empty()) {
        apply_override(cfg, "training.seeds=" + o.seeds);
    }
    return cfg;
}

} // namespace cli_detail

/// Runs the CLI with the given arguments (argv[0] is the program name).
inline int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"qgat: quantum graph attention experiments"};
    app.require_subcommand(1);
    CliOptions o;
    struct Sub {
        const char *name;
        const char *help;
    };
    const Sub subs[] = {
        {"train", "train one model per seed and report mean ± std"},
        {"noise-sweep", "robustness sweep over noise levels for several models"},
        {"linkpred", "link prediction with Hits@K and MRR"},
        {"gradcheck", "finite-difference check of all analytic gradients"},
        {"params", "trainable parameter counts per module"},
        {"synth", "write a synthetic dataset"},
    };
    std::vector<CLI::App *> handles;
    for (const auto &s : subs) {
        handles.push_back(app.add_subcommand(s.name, s.help));
        cli_detail::add_common(handles.back(), o);
    }

    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    std::string cmd;
    for (std::size_t i = 0; i < handles.size(); ++i) {
        if (handles[i]->parsed()) cmd = subs[i].name;
    }
    Logger log(err);
    try {
        ExperimentConfig cfg = cli_detail::resolve_config(o);
        CommandContext ctx;
        ctx.out_dir = o.out.empty() ? fs::path("qgat-out") / cmd : fs::path(o.out);
        ctx.jobs = o.jobs;
        ctx.out = &out;
        ctx.log = &log;
        if (cmd == "train") {
            run_train(cfg, ctx);
        } else if (cmd == "noise-sweep") {
            run_noise_sweep(cfg, ctx);
        } else if (cmd == "linkpred") {
            run_linkpred(cfg, ctx);
        } else if (cmd == "gradcheck") {
            auto rep = run_gradcheck(cfg.gradcheck);
            out << format_gradcheck(rep);
            fs::create_directories(ctx.out_dir);
            write_text(ctx.out_dir / kEchoFile, config_echo(cfg));
            write_text(ctx.out_dir / "gradcheck.txt", format_gradcheck(rep));
            return rep.passed() ? kExitOk : kExitFailure;
        } else if (cmd == "params") {
            run_params(cfg, ctx);
        } else if (cmd == "synth") {
            run_synth(cfg, ctx);
        }
        return kExitOk;
    } catch (const ConfigError &e) {
        err << "qgat " << cmd << ": configuration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UsageError &e) {
        err << "qgat " << cmd << ": usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception &e) {
        err << "qgat " << cmd << ": " << e.what() << "\n";
        return kExitFailure;
    }
}

inline int run_cli(int argc, const char *const *argv, std::ostream &out = std::cout,
                   std::ostream &err = std::cerr) {
    return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

} // namespace qgat
