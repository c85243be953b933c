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
 * @file plot.hpp
 * Long-format sweep tables and their self-contained SVG rendering.
 */
#pragma once

#include "errors.hpp"
#include "graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace qgat {

struct SweepRow {
    std::string model;
    double level = 0.0;
    std::uint64_t seed = 0;
    double metric = 0.0;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; ///< sample standard deviation (n - 1), 0 for a single value
    std::size_t n = 0;
};

inline MeanStd mean_std(std::span<const double> xs) {
    MeanStd m;
    m.n = xs.size();
    if (xs.empty()) {
        return m;
    }
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return m;
}

/// "0.9500 ± 0.0100"
inline std::string format_mean_std(const MeanStd &m, int digits = 4) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.*f ± %.*f", digits, m.mean, digits, m.std);
    return buf;
}

/// Shortest text that parses back to exactly `v`.
inline std::string format_exact(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline const char *kSweepHeader = "model,level,seed,metric";

inline std::string sweep_csv(const std::vector<SweepRow> &rows) {
    std::ostringstream out;
    out << kSweepHeader << "\n";
    for (const auto &r : rows) {
        out << r.model << "," << format_exact(r.level) << "," << r.seed << ","
            << format_exact(r.metric) << "\n";
    }
    return out.str();
}

inline std::vector<SweepRow> parse_sweep_csv(std::string_view text, const std::string &name) {
    auto ls = detail::lines(text);
    if (ls.empty() || detail::trim(ls[0]) != kSweepHeader) {
        throw ParseError(name + ": expected header '" + kSweepHeader + "'");
    }
    std::vector<SweepRow> rows;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        if (detail::trim(ls[i]).empty()) continue;
        auto f = detail::split(ls[i], ',');
        auto level = f.size() == 4 ? detail::parse_double(f[1]) : std::nullopt;
        auto seed = f.size() == 4 ? detail::parse_int(f[2]) : std::nullopt;
        auto metric = f.size() == 4 ? detail::parse_double(f[3]) : std::nullopt;
        if (!level || !seed || *seed < 0 || !metric) {
            throw ParseError(name + ":" + std::to_string(i + 1) + ": malformed sweep row");
        }
        rows.push_back({std::string(detail::trim(f[0])), *level,
                        static_cast<std::uint64_t>(*seed), *metric});
    }
    return rows;
}

struct SeriesPoint {
    double level = 0.0;
    MeanStd stats;
};

struct Series {
    std::string model;
    std::vector<SeriesPoint> points; ///< ascending level
};

/// Groups rows by model (first-appearance order) and level.
inline std::vector<Series> aggregate_sweep(const std::vector<SweepRow> &rows) {
    std::vector<Series> out;
    std::vector<std::map<double, std::vector<double>>> buckets;
    for (const auto &r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const Series &s) { return s.model == r.model; });
        if (it == out.end()) {
            out.push_back({r.model, {}});
            buckets.emplace_back();
            it = out.end() - 1;
        }
        buckets[static_cast<std::size_t>(it - out.begin())][r.level].push_back(r.metric);
    }
    for (std::size_t s = 0; s < out.size(); ++s) {
        for (const auto &[level, vals] : buckets[s]) {
            out[s].points.push_back({level, mean_std(vals)});
        }
    }
    return out;
}

namespace plot_detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string color(const std::string &model, std::size_t i) {
    if (model == "qgat") return "#d62728";
    if (model == "gat") return "#1f77b4";
    if (model == "gatv2") return "#2ca02c";
    static const char *palette[] = {"#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    return palette[i % 4];
}

inline std::string escape(const std::string &s) {
    std::string o;
    for (char c : s) {
        switch (c) {
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '&': o += "&amp;"; break;
        default: o += c;
        }
    }
    return o;
}

} // namespace plot_detail

/**
 * Line plot of mean metric against noise level, one line per model, with
 * +-1 std error bars.
 */
inline std::string render_sweep_svg(const std::vector<SweepRow> &rows, const std::string &title,
                                    const std::string &x_label, const std::string &y_label) {
    using plot_detail::num;
    const auto series = aggregate_sweep(rows);
    const double W = 640, H = 420, ml = 70, mr = 130, mt = 40, mb = 60;
    const double pw = W - ml - mr, ph = H - mt - mb;

    std::vector<double> levels;
    double lo = 1.0, hi = 0.0;
    for (const auto &s : series) {
        for (const auto &p : s.points) {
            levels.push_back(p.level);
            lo = std::min(lo, p.stats.mean - p.stats.std);
            hi = std::max(hi, p.stats.mean + p.stats.std);
        }
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.empty()) {
        levels.push_back(0.0);
    }
    lo = std::max(0.0, std::floor(std::min(lo, hi) * 10.0) / 10.0);
    hi = std::min(1.0, std::ceil(hi * 10.0) / 10.0);
    if (hi <= lo) {
        hi = lo + 0.1;
    }
    const double x0 = levels.front(), x1 = levels.back() > x0 ? levels.back() : x0 + 1.0;
    auto X = [&](double v) { return ml + (v - x0) / (x1 - x0) * pw; };
    auto Y = [&](double v) { return mt + (hi - v) / (hi - lo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << ml + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << plot_detail::escape(title) << "</text>\n";
    // Axes and grid.
    const int n_y = static_cast<int>(std::lround((hi - lo) / 0.1));
    for (int k = 0; k <= n_y; ++k) {
        const double v = lo + (hi - lo) * k / std::max(n_y, 1);
        o << "<line x1=\"" << ml << "\" x2=\"" << ml + pw << "\" y1=\"" << num(Y(v)) << "\" y2=\""
          << num(Y(v)) << "\" stroke=\"#e0e0e0\"/>\n";
        o << "<text x=\"" << ml - 8 << "\" y=\"" << num(Y(v) + 4) << "\" text-anchor=\"end\">"
          << num(v) << "</text>\n";
    }
    for (double v : levels) {
        o << "<line x1=\"" << num(X(v)) << "\" x2=\"" << num(X(v)) << "\" y1=\"" << mt + ph
          << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << num(X(v)) << "\" y=\"" << mt + ph + 20 << "\" text-anchor=\"middle\">"
          << num(v) << "</text>\n";
    }
    o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
      << plot_detail::escape(x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << plot_detail::escape(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto c = plot_detail::color(series[s].model, s);
        o << "<g class=\"series\" data-model=\"" << plot_detail::escape(series[s].model) << "\">\n";
        std::string pts;
        for (const auto &p : series[s].points) {
            pts += num(X(p.level)) + "," + num(Y(p.stats.mean)) + " ";
        }
        o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"" << pts
          << "\"/>\n";
        for (const auto &p : series[s].points) {
            const double x = X(p.level);
            const double ya = Y(p.stats.mean - p.stats.std), yb = Y(p.stats.mean + p.stats.std);
            o << "<line x1=\"" << num(x) << "\" x2=\"" << num(x) << "\" y1=\"" << num(ya)
              << "\" y2=\"" << num(yb) << "\" stroke=\"" << c << "\"/>\n";
            for (double yy : {ya, yb}) {
                o << "<line x1=\"" << num(x - 4) << "\" x2=\"" << num(x + 4) << "\" y1=\"" << num(yy)
                  << "\" y2=\"" << num(yy) << "\" stroke=\"" << c << "\"/>\n";
            }
            o << "<circle cx=\"" << num(x) << "\" cy=\"" << num(Y(p.stats.mean)) << "\" r=\"3.5\" fill=\""
              << c << "\"/>\n";
        }
        o << "</g>\n";
        const double ly = mt + 10 + 20.0 * static_cast<double>(s);
        o << "<line x1=\"" << ml + pw + 15 << "\" x2=\"" << ml + pw + 40 << "\" y1=\"" << ly
          << "\" y2=\"" << ly << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << ml + pw + 46 << "\" y=\"" << ly + 4 << "\">"
          << plot_detail::escape(series[s].model) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace qgat
