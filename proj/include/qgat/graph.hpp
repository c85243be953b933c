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
 * Graph data model, file loaders, synthetic SBM generator, noise injection
 * and link-prediction splits.
 *
 * Edge order is significant: message passing visits in-neighbors in edge-list
 * order, so relabeling nodes while keeping edge order yields bit-identical
 * per-node results.
 */
#pragma once

#include "qgat/errors.hpp"
#include "qgat/matrix.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace qgat {

struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;
    friend bool operator==(const Edge &, const Edge &) = default;
    friend auto operator<=>(const Edge &, const Edge &) = default;
};

using Mask = std::vector<std::uint8_t>;

struct Graph {
    std::size_t n_nodes = 0;
    Matrix features; ///< n_nodes x d
    std::vector<Edge> edges;
    std::vector<int> classes; ///< single-label targets, empty if absent
    Matrix multilabels;       ///< n_nodes x C of {0,1}, empty if absent
    Mask train_mask, val_mask, test_mask;

    [[nodiscard]] std::size_t feature_dim() const { return features.cols(); }
    [[nodiscard]] bool has_classes() const { return !classes.empty(); }
    [[nodiscard]] bool has_multilabels() const { return !multilabels.empty(); }
    [[nodiscard]] bool has_masks() const { return !train_mask.empty(); }

    [[nodiscard]] std::size_t n_classes() const {
        if (has_multilabels()) {
            return multilabels.cols();
        }
        int m = -1;
        for (int c : classes) {
            m = std::max(m, c);
        }
        return static_cast<std::size_t>(m + 1);
    }

    friend bool operator==(const Graph &, const Graph &) = default;
};

inline std::uint64_t pair_key(std::size_t u, std::size_t v) {
    if (u > v) {
        std::swap(u, v);
    }
    return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
}

/// Drops self-loops and repeated directed edges, keeping first occurrences in order.
inline std::vector<Edge> canonical_edges(const std::vector<Edge> &edges) {
    std::vector<Edge> out;
    out.reserve(edges.size());
    std::unordered_set<std::uint64_t> seen;
    for (const auto &e : edges) {
        if (e.src == e.dst) {
            continue;
        }
        const auto key = (static_cast<std::uint64_t>(e.src) << 32) | e.dst;
        if (seen.insert(key).second) {
            out.push_back(e);
        }
    }
    return out;
}

/// Appends (v, u) after every (u, v), then canonicalizes.
inline std::vector<Edge> symmetrize(const std::vector<Edge> &edges) {
    std::vector<Edge> both;
    both.reserve(edges.size() * 2);
    for (const auto &e : edges) {
        both.push_back(e);
        both.push_back({e.dst, e.src});
    }
    return canonical_edges(both);
}

/// Unordered pairs {u < v} in order of first appearance.
inline std::vector<Edge> undirected_pairs(const std::vector<Edge> &edges) {
    std::vector<Edge> out;
    std::unordered_set<std::uint64_t> seen;
    for (const auto &e : edges) {
        if (e.src == e.dst) {
            continue;
        }
        if (seen.insert(pair_key(e.src, e.dst)).second) {
            out.push_back({std::min(e.src, e.dst), std::max(e.src, e.dst)});
        }
    }
    return out;
}

inline void validate(const Graph &g) {
    if (g.features.rows() != g.n_nodes) {
        throw DimensionError("graph: feature matrix has " + std::to_string(g.features.rows()) +
                             " rows for " + std::to_string(g.n_nodes) + " nodes");
    }
    std::unordered_set<std::uint64_t> seen;
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const auto &e = g.edges[i];
        if (e.src >= g.n_nodes || e.dst >= g.n_nodes) {
            throw IndexError("graph: edge " + std::to_string(i) + " (" + std::to_string(e.src) +
                             ", " + std::to_string(e.dst) + ") references a node >= " +
                             std::to_string(g.n_nodes));
        }
        if (!seen.insert((static_cast<std::uint64_t>(e.src) << 32) | e.dst).second) {
            throw InputError("graph: duplicate edge (" + std::to_string(e.src) + ", " +
                             std::to_string(e.dst) + ")");
        }
    }
    if (g.has_classes() && g.classes.size() != g.n_nodes) {
        throw DimensionError("graph: label count does not match node count");
    }
    if (g.has_multilabels() && g.multilabels.rows() != g.n_nodes) {
        throw DimensionError("graph: multi-label rows do not match node count");
    }
    for (int c : g.classes) {
        if (c < 0) {
            throw InputError("graph: negative class label");
        }
    }
    if (g.has_masks()) {
        if (g.train_mask.size() != g.n_nodes || g.val_mask.size() != g.n_nodes ||
            g.test_mask.size() != g.n_nodes) {
            throw DimensionError("graph: mask length does not match node count");
        }
        for (std::size_t i = 0; i < g.n_nodes; ++i) {
            if (g.train_mask[i] + g.val_mask[i] + g.test_mask[i] > 1) {
                throw InputError("graph: node " + std::to_string(i) + " is in more than one split");
            }
        }
    }
}

/**
 * Message-passing view: per-destination contiguous edge segments. Segment i
 * holds the optional self-loop (i, i) first, then in-edges (j, i) in edge-list
 * order.
 */
struct MessageIndex {
    std::size_t n_nodes = 0;
    std::vector<std::size_t> src;
    std::vector<std::size_t> dst;
    std::vector<std::size_t> offsets; ///< n_nodes + 1 entries

    [[nodiscard]] std::size_t n_edges() const { return src.size(); }

    [[nodiscard]] std::span<const std::size_t> neighbors(std::size_t i) const {
        return {src.data() + offsets[i], offsets[i + 1] - offsets[i]};
    }
};

inline MessageIndex build_message_index(std::size_t n_nodes, const std::vector<Edge> &edges,
                                        bool self_loops = true) {
    MessageIndex mi;
    mi.n_nodes = n_nodes;
    std::vector<std::size_t> count(n_nodes, self_loops ? 1 : 0);
    for (const auto &e : edges) {
        if (e.src >= n_nodes || e.dst >= n_nodes) {
            throw IndexError("message index: edge endpoint out of range");
        }
        if (e.src != e.dst) {
            ++count[e.dst];
        }
    }
    mi.offsets.assign(n_nodes + 1, 0);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        mi.offsets[i + 1] = mi.offsets[i] + count[i];
    }
    mi.src.assign(mi.offsets.back(), 0);
    mi.dst.assign(mi.offsets.back(), 0);
    std::vector<std::size_t> cursor(mi.offsets.begin(), mi.offsets.end() - 1);
    if (self_loops) {
        for (std::size_t i = 0; i < n_nodes; ++i) {
            mi.src[cursor[i]] = i;
            mi.dst[cursor[i]] = i;
            ++cursor[i];
        }
    }
    for (const auto &e : edges) {
        if (e.src == e.dst) {
            continue;
        }
        mi.src[cursor[e.dst]] = e.src;
        mi.dst[cursor[e.dst]] = e.dst;
        ++cursor[e.dst];
    }
    return mi;
}

inline MessageIndex build_message_index(const Graph &g, bool self_loops = true) {
    return build_message_index(g.n_nodes, g.edges, self_loops);
}

/// Directed edges (j, i) recovered from a message index, self-loops removed.
inline std::vector<Edge> edges_from_index(const MessageIndex &mi) {
    std::vector<Edge> out;
    for (std::size_t e = 0; e < mi.n_edges(); ++e) {
        if (mi.src[e] != mi.dst[e]) {
            out.push_back({mi.src[e], mi.dst[e]});
        }
    }
    return out;
}

/// Node i of g becomes node perm[i]; edge order is preserved.
inline Graph relabel(const Graph &g, const std::vector<std::size_t> &perm) {
    if (perm.size() != g.n_nodes) {
        throw DimensionError("relabel: permutation length mismatch");
    }
    Graph out = g;
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        std::copy(g.features.row(i).begin(), g.features.row(i).end(),
                  out.features.row(perm[i]).begin());
        if (g.has_classes()) {
            out.classes[perm[i]] = g.classes[i];
        }
        if (g.has_multilabels()) {
            std::copy(g.multilabels.row(i).begin(), g.multilabels.row(i).end(),
                      out.multilabels.row(perm[i]).begin());
        }
        if (g.has_masks()) {
            out.train_mask[perm[i]] = g.train_mask[i];
            out.val_mask[perm[i]] = g.val_mask[i];
            out.test_mask[perm[i]] = g.test_mask[i];
        }
    }
    for (auto &e : out.edges) {
        e = {perm[e.src], perm[e.dst]};
    }
    return out;
}

// ---------------------------------------------------------------------------
// File formats

namespace detail {

inline bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > s.size()) {
            return false;
        }
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) {
                return false;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        // Overlong encodings and surrogates.
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
            cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            return false;
        }
        i += len;
    }
    return true;
}

inline std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string s = ss.str();
    if (!valid_utf8(s)) {
        throw ParseError(path.string() + ": not valid UTF-8");
    }
    return s;
}

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) {
            ++i;
        }
        const std::size_t b = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') {
            ++i;
        }
        if (i > b) {
            out.push_back(s.substr(b, i - b));
        }
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0;
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto *end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end || s.empty()) {
        return std::nullopt;
    }
    return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
    long long v = 0;
    const auto *end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end || s.empty()) {
        return std::nullopt;
    }
    return v;
}

inline std::vector<std::string_view> lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) {
            if (start < text.size()) {
                out.push_back(text.substr(start));
            }
            break;
        }
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

} // namespace detail

/**
 * Features CSV: one row per node, comma-separated. An optional header row
 * (detected by any non-numeric field) may name a column "label", which is then
 * read as the integer class of each node.
 */
struct FeatureTable {
    Matrix features;
    std::vector<int> classes;
};

inline FeatureTable parse_features_csv(std::string_view text, const std::string &name) {
    auto rows = detail::lines(text);
    std::optional<std::size_t> label_col;
    std::size_t first = 0;
    std::size_t header_cols = 0;
    // Skip leading blank lines.
    while (first < rows.size() && detail::trim(rows[first]).empty()) {
        ++first;
    }
    if (first < rows.size()) {
        const auto fields = detail::split(rows[first], ',');
        const bool header = std::any_of(fields.begin(), fields.end(), [](std::string_view f) {
            return !detail::parse_double(f).has_value();
        });
        if (header) {
            header_cols = fields.size();
            for (std::size_t c = 0; c < fields.size(); ++c) {
                if (fields[c] == "label") {
                    label_col = c;
                }
            }
            ++first;
        }
    }
    std::vector<double> data;
    std::vector<int> classes;
    std::size_t width = 0;
    std::size_t n = 0;
    for (std::size_t r = first; r < rows.size(); ++r) {
        if (detail::trim(rows[r]).empty()) {
            continue;
        }
        const auto fields = detail::split(rows[r], ',');
        const std::string where = name + ":" + std::to_string(r + 1);
        if (header_cols != 0 && fields.size() != header_cols) {
            throw ParseError(where + ": expected " + std::to_string(header_cols) +
                             " fields, got " + std::to_string(fields.size()));
        }
        const std::size_t w = fields.size() - (label_col ? 1 : 0);
        if (n == 0) {
            width = w;
        } else if (w != width) {
            throw ParseError(where + ": expected " + std::to_string(width) +
                             " feature columns, got " + std::to_string(w));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (label_col && c == *label_col) {
                auto v = detail::parse_int(fields[c]);
                if (!v || *v < 0) {
                    throw ParseError(where + ": column " + std::to_string(c + 1) + ": '" +
                                     std::string(fields[c]) + "' is not a class index");
                }
                classes.push_back(static_cast<int>(*v));
                continue;
            }
            auto v = detail::parse_double(fields[c]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError(where + ": column " + std::to_string(c + 1) + ": '" +
                                 std::string(fields[c]) + "' is not a finite number");
            }
            data.push_back(*v);
        }
        ++n;
    }
    return {Matrix(n, width, std::move(data)), std::move(classes)};
}

/// Edge list: one "src dst" pair per line; '#' starts a comment.
inline std::vector<Edge> parse_edge_list(std::string_view text, const std::string &name,
                                         std::size_t n_nodes) {
    std::vector<Edge> edges;
    auto rows = detail::lines(text);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto line = rows[r];
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const auto fields = detail::split_ws(line);
        if (fields.empty()) {
            continue;
        }
        const std::string where = name + ":" + std::to_string(r + 1);
        if (fields.size() != 2) {
            throw ParseError(where + ": expected 'src dst', got " + std::to_string(fields.size()) +
                             " fields");
        }
        std::size_t ends[2];
        for (int k = 0; k < 2; ++k) {
            auto v = detail::parse_int(fields[k]);
            if (!v || *v < 0) {
                throw ParseError(where + ": field " + std::to_string(k + 1) + ": '" +
                                 std::string(fields[k]) + "' is not a node index");
            }
            if (static_cast<std::size_t>(*v) >= n_nodes) {
                throw ParseError(where + ": node " + std::to_string(*v) + " out of range (graph has " +
                                 std::to_string(n_nodes) + " nodes)");
            }
            ends[k] = static_cast<std::size_t>(*v);
        }
        edges.push_back({ends[0], ends[1]});
    }
    return edges;
}

inline Graph load_edge_list_graph(const std::filesystem::path &features_csv,
                                  const std::filesystem::path &edge_file, bool directed = false) {
    auto table = parse_features_csv(detail::read_text_file(features_csv), features_csv.string());
    Graph g;
    g.n_nodes = table.features.rows();
    g.features = std::move(table.features);
    g.classes = std::move(table.classes);
    auto edges = parse_edge_list(detail::read_text_file(edge_file), edge_file.string(), g.n_nodes);
    g.edges = directed ? canonical_edges(edges) : symmetrize(edges);
    validate(g);
    return g;
}

inline Mask mask_from_indices(const nlohmann::json &j, std::size_t n, const std::string &field) {
    Mask m(n, 0);
    if (!j.is_array()) {
        throw ParseError("field '" + field + "': expected an array of node indices");
    }
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_number_integer() || j[k].get<long long>() < 0 ||
            j[k].get<std::size_t>() >= n) {
            throw ParseError("field '" + field + "[" + std::to_string(k) +
                             "]': not a node index below " + std::to_string(n));
        }
        m[j[k].get<std::size_t>()] = 1;
    }
    return m;
}

/**
 * JSON bundle:
 *   { "features": [[...], ...], "edges": [[u, v], ...], "directed": false,
 *     "labels": [c, ...] | "multilabels": [[0/1, ...], ...],
 *     "masks": {"train": [idx...], "val": [...], "test": [...]} }
 * Only "features" and "edges" are required.
 */
inline Graph graph_from_json(const nlohmann::json &j, const std::string &name) {
    auto fail = [&](const std::string &field, const std::string &why) {
        return ParseError(name + ": field '" + field + "': " + why);
    };
    if (!j.is_object()) {
        throw ParseError(name + ": top level must be an object");
    }
    static const std::set<std::string> known{"features", "edges",  "directed", "labels",
                                             "multilabels", "masks", "n_nodes"};
    for (const auto &[k, v] : j.items()) {
        if (!known.contains(k)) {
            throw fail(k, "unknown key");
        }
    }
    if (!j.contains("features") || !j["features"].is_array()) {
        throw fail("features", "missing or not an array");
    }
    Graph g;
    const auto &fj = j["features"];
    g.n_nodes = fj.size();
    std::size_t width = 0;
    std::vector<double> data;
    for (std::size_t r = 0; r < fj.size(); ++r) {
        const std::string f = "features[" + std::to_string(r) + "]";
        if (!fj[r].is_array()) {
            throw fail(f, "expected an array");
        }
        if (r == 0) {
            width = fj[r].size();
        } else if (fj[r].size() != width) {
            throw fail(f, "expected " + std::to_string(width) + " values, got " +
                              std::to_string(fj[r].size()));
        }
        for (std::size_t c = 0; c < fj[r].size(); ++c) {
            if (!fj[r][c].is_number() || !std::isfinite(fj[r][c].get<double>())) {
                throw fail(f + "[" + std::to_string(c) + "]", "not a finite number");
            }
            data.push_back(fj[r][c].get<double>());
        }
    }
    g.features = Matrix(g.n_nodes, width, std::move(data));
    if (j.contains("n_nodes") &&
        (!j["n_nodes"].is_number_integer() || j["n_nodes"].get<std::size_t>() != g.n_nodes)) {
        throw fail("n_nodes", "does not match the number of feature rows");
    }
    if (!j.contains("edges") || !j["edges"].is_array()) {
        throw fail("edges", "missing or not an array");
    }
    std::vector<Edge> edges;
    for (std::size_t k = 0; k < j["edges"].size(); ++k) {
        const auto &e = j["edges"][k];
        const std::string f = "edges[" + std::to_string(k) + "]";
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
            !e[1].is_number_integer()) {
            throw fail(f, "expected [src, dst]");
        }
        const auto u = e[0].get<long long>(), v = e[1].get<long long>();
        if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= g.n_nodes ||
            static_cast<std::size_t>(v) >= g.n_nodes) {
            throw fail(f, "node index out of range (graph has " + std::to_string(g.n_nodes) +
                              " nodes)");
        }
        edges.push_back({static_cast<std::size_t>(u), static_cast<std::size_t>(v)});
    }
    const bool directed = j.value("directed", false);
    g.edges = directed ? canonical_edges(edges) : symmetrize(edges);
    if (j.contains("labels")) {
        const auto &lj = j["labels"];
        if (!lj.is_array() || lj.size() != g.n_nodes) {
            throw fail("labels", "expected one class index per node");
        }
        for (std::size_t i = 0; i < lj.size(); ++i) {
            if (!lj[i].is_number_integer() || lj[i].get<long long>() < 0) {
                throw fail("labels[" + std::to_string(i) + "]", "not a class index");
            }
            g.classes.push_back(lj[i].get<int>());
        }
    }
    if (j.contains("multilabels")) {
        const auto &mj = j["multilabels"];
        if (!mj.is_array() || mj.size() != g.n_nodes) {
            throw fail("multilabels", "expected one bit-vector per node");
        }
        const std::size_t c = g.n_nodes ? mj[0].size() : 0;
        g.multilabels = Matrix(g.n_nodes, c);
        for (std::size_t i = 0; i < mj.size(); ++i) {
            if (!mj[i].is_array() || mj[i].size() != c) {
                throw fail("multilabels[" + std::to_string(i) + "]", "wrong length");
            }
            for (std::size_t k = 0; k < c; ++k) {
                const auto &b = mj[i][k];
                if (!b.is_number_integer() || (b.get<int>() != 0 && b.get<int>() != 1)) {
                    throw fail("multilabels[" + std::to_string(i) + "][" + std::to_string(k) + "]",
                               "expected 0 or 1");
                }
                g.multilabels(i, k) = b.get<int>();
            }
        }
    }
    if (j.contains("masks")) {
        const auto &m = j["masks"];
        if (!m.is_object()) {
            throw fail("masks", "expected an object");
        }
        for (const auto &[k, v] : m.items()) {
            if (k != "train" && k != "val" && k != "test") {
                throw fail("masks." + k, "unknown split");
            }
        }
        g.train_mask = mask_from_indices(m.value("train", nlohmann::json::array()), g.n_nodes,
                                         "masks.train");
        g.val_mask = mask_from_indices(m.value("val", nlohmann::json::array()), g.n_nodes,
                                       "masks.val");
        g.test_mask = mask_from_indices(m.value("test", nlohmann::json::array()), g.n_nodes,
                                        "masks.test");
    }
    try {
        validate(g);
    } catch (const Error &e) {
        throw ParseError(name + ": " + e.what());
    }
    return g;
}

inline Graph load_json_bundle(const std::filesystem::path &path) {
    const std::string text = detail::read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return graph_from_json(j, path.string());
}

inline nlohmann::json graph_to_json(const Graph &g) {
    nlohmann::json j;
    j["n_nodes"] = g.n_nodes;
    auto feats = nlohmann::json::array();
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        feats.push_back(std::vector<double>(g.features.row(i).begin(), g.features.row(i).end()));
    }
    j["features"] = std::move(feats);
    auto edges = nlohmann::json::array();
    for (const auto &e : g.edges) {
        edges.push_back({e.src, e.dst});
    }
    j["edges"] = std::move(edges);
    j["directed"] = true; // edges are stored already expanded
    if (g.has_classes()) {
        j["labels"] = g.classes;
    }
    if (g.has_multilabels()) {
        auto ml = nlohmann::json::array();
        for (std::size_t i = 0; i < g.n_nodes; ++i) {
            std::vector<int> bits;
            for (double b : g.multilabels.row(i)) {
                bits.push_back(static_cast<int>(b));
            }
            ml.push_back(bits);
        }
        j["multilabels"] = std::move(ml);
    }
    if (g.has_masks()) {
        auto idx = [&](const Mask &m) {
            std::vector<std::size_t> out;
            for (std::size_t i = 0; i < m.size(); ++i) {
                if (m[i]) {
                    out.push_back(i);
                }
            }
            return out;
        };
        j["masks"] = {{"train", idx(g.train_mask)}, {"val", idx(g.val_mask)}, {"test", idx(g.test_mask)}};
    }
    return j;
}

inline void write_json_bundle(const Graph &g, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << graph_to_json(g).dump() << "\n";
}

enum class GraphFormat { EdgeListCsv, JsonBundle };

/// For EdgeListCsv, `path` is a directory holding features.csv and edges.txt.
inline Graph load_graph(const std::filesystem::path &path, GraphFormat format) {
    if (format == GraphFormat::JsonBundle) {
        return load_json_bundle(path);
    }
    return load_edge_list_graph(path / "features.csv", path / "edges.txt");
}

// ---------------------------------------------------------------------------
// Synthetic data and perturbations

inline void random_split(Graph &g, std::mt19937_64 &rng, double frac_train = 0.6,
                         double frac_val = 0.2) {
    std::vector<std::size_t> order(g.n_nodes);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::floor(frac_train * g.n_nodes + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(frac_val * g.n_nodes + 1e-9));
    g.train_mask.assign(g.n_nodes, 0);
    g.val_mask.assign(g.n_nodes, 0);
    g.test_mask.assign(g.n_nodes, 0);
    for (std::size_t k = 0; k < g.n_nodes; ++k) {
        Mask &m = k < n_train ? g.train_mask : (k < n_train + n_val ? g.val_mask : g.test_mask);
        m[order[k]] = 1;
    }
}

struct SbmParams {
    std::size_t n_per_class = 30;
    std::size_t n_classes = 2;
    double p_in = 0.3;
    double p_out = 0.02;
    std::size_t feature_dim = 8;
    double class_sep = 1.0;
};

/**
 * Stochastic block model. Node i belongs to class i / n_per_class. Features
 * are class_sep * e_{c mod d} + N(0, I). Masks are a 60/20/20 random split.
 */
inline Graph synth_sbm(const SbmParams &p, std::uint64_t seed) {
    if (!(p.p_in >= 0 && p.p_in <= 1 && p.p_out >= 0 && p.p_out <= p.p_in)) {
        throw ConfigError("synth_sbm: need 0 <= p_out <= p_in <= 1, got p_in=" +
                          std::to_string(p.p_in) + " p_out=" + std::to_string(p.p_out));
    }
    if (p.n_per_class == 0 || p.n_classes == 0 || p.feature_dim == 0) {
        throw ConfigError("synth_sbm: sizes must be positive");
    }
    if (!std::isfinite(p.class_sep)) {
        throw ConfigError("synth_sbm: class_sep must be finite");
    }
    std::mt19937_64 rng(seed);
    Graph g;
    g.n_nodes = p.n_per_class * p.n_classes;
    g.classes.resize(g.n_nodes);
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        g.classes[i] = static_cast<int>(i / p.n_per_class);
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Edge> pairs;
    for (std::size_t a = 0; a < g.n_nodes; ++a) {
        for (std::size_t b = a + 1; b < g.n_nodes; ++b) {
            const double prob = g.classes[a] == g.classes[b] ? p.p_in : p.p_out;
            if (u(rng) < prob) {
                pairs.push_back({a, b});
            }
        }
    }
    g.edges = symmetrize(pairs);
    std::normal_distribution<double> normal(0.0, 1.0);
    g.features = Matrix(g.n_nodes, p.feature_dim);
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        for (std::size_t d = 0; d < p.feature_dim; ++d) {
            g.features(i, d) = normal(rng);
        }
        g.features(i, static_cast<std::size_t>(g.classes[i]) % p.feature_dim) += p.class_sep;
    }
    random_split(g, rng);
    return g;
}

/// x + epsilon * N(0, I), one fresh draw per node and dimension (row-major).
inline Graph add_feature_noise(const Graph &g, double epsilon, std::uint64_t seed) {
    if (!(epsilon >= 0) || !std::isfinite(epsilon)) {
        throw InputError("add_feature_noise: epsilon must be finite and >= 0");
    }
    Graph out = g;
    if (epsilon == 0.0) {
        return out;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto &v : out.features.data()) {
        v += epsilon * normal(rng);
    }
    return out;
}

/// Number of distinct unordered node pairs joined by an edge in either direction.
inline std::size_t undirected_edge_count(const Graph &g) { return undirected_pairs(g.edges).size(); }

/**
 * Samples floor(eta * E) new unordered pairs {u != v} uniformly from the
 * non-edges (E counts undirected edges) and appends both directions.
 */
inline Graph add_structural_noise(const Graph &g, double eta, std::uint64_t seed) {
    if (!(eta >= 0) || !std::isfinite(eta)) {
        throw InputError("add_structural_noise: eta must be finite and >= 0");
    }
    const auto pairs = undirected_pairs(g.edges);
    const std::size_t e_count = pairs.size();
    const auto k = static_cast<std::size_t>(std::floor(eta * static_cast<double>(e_count) + 1e-9));
    Graph out = g;
    if (k == 0) {
        return out;
    }
    const std::size_t n = g.n_nodes;
    const std::size_t all_pairs = n < 2 ? 0 : n * (n - 1) / 2;
    if (k > all_pairs - e_count) {
        throw InfeasibleError("add_structural_noise: requested " + std::to_string(k) +
                              " new edges but only " + std::to_string(all_pairs - e_count) +
                              " non-edges exist");
    }
    std::unordered_set<std::uint64_t> present;
    for (const auto &p : pairs) {
        present.insert(pair_key(p.src, p.dst));
    }
    std::mt19937_64 rng(seed);
    std::vector<Edge> added;
    added.reserve(k);
    if (all_pairs <= 20'000'000) {
        std::vector<Edge> candidates;
        candidates.reserve(all_pairs - e_count);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!present.contains(pair_key(a, b))) {
                    candidates.push_back({a, b});
                }
            }
        }
        // Partial Fisher-Yates.
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
            std::swap(candidates[i], candidates[pick(rng)]);
            added.push_back(candidates[i]);
        }
    } else {
        std::uniform_int_distribution<std::size_t> node(0, n - 1);
        while (added.size() < k) {
            std::size_t a = node(rng), b = node(rng);
            if (a == b) {
                continue;
            }
            if (present.insert(pair_key(a, b)).second) {
                added.push_back({std::min(a, b), std::max(a, b)});
            }
        }
    }
    for (const auto &e : added) {
        out.edges.push_back({e.src, e.dst});
        out.edges.push_back({e.dst, e.src});
    }
    return out;
}

struct LinkSplit {
    Graph train_graph;
    std::vector<Edge> train_pos, val_pos, val_neg, test_pos, test_neg;
};

/// Uniformly samples `count` distinct unordered non-edges of `present`,
/// excluding pairs already in `taken` (which is updated).
inline std::vector<Edge> sample_non_edges(std::size_t n_nodes,
                                          const std::unordered_set<std::uint64_t> &present,
                                          std::unordered_set<std::uint64_t> &taken,
                                          std::size_t count, std::mt19937_64 &rng) {
    const std::size_t all_pairs = n_nodes < 2 ? 0 : n_nodes * (n_nodes - 1) / 2;
    std::size_t blocked = 0;
    for (auto key : taken) {
        blocked += present.contains(key) ? 0 : 1;
    }
    if (count + present.size() + blocked > all_pairs) {
        throw InfeasibleError("negative sampling: need " + std::to_string(count) +
                              " non-edges, only " +
                              std::to_string(all_pairs - present.size() - blocked) + " available");
    }
    std::vector<Edge> out;
    out.reserve(count);
    std::uniform_int_distribution<std::size_t> node(0, n_nodes - 1);
    while (out.size() < count) {
        std::size_t a = node(rng), b = node(rng);
        if (a == b) {
            continue;
        }
        const auto key = pair_key(a, b);
        if (present.contains(key) || taken.contains(key)) {
            continue;
        }
        taken.insert(key);
        out.push_back({std::min(a, b), std::max(a, b)});
    }
    return out;
}

/**
 * Holds out val/test positive pairs from the message-passing graph and draws
 * neg_ratio negatives per positive from the non-edges of the full graph.
 */
inline LinkSplit split_link_prediction(const Graph &g, double frac_val, double frac_test,
                                       std::size_t neg_ratio, std::uint64_t seed) {
    if (frac_val < 0 || frac_test < 0 || frac_val + frac_test >= 1) {
        throw ConfigError("split_link_prediction: need frac_val, frac_test >= 0 with sum < 1");
    }
    auto pairs = undirected_pairs(g.edges);
    const std::size_t e = pairs.size();
    const auto n_val = static_cast<std::size_t>(std::floor(frac_val * e + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(frac_test * e + 1e-9));
    if ((frac_val > 0 && n_val == 0) || (frac_test > 0 && n_test == 0) ||
        (e > 0 && n_val + n_test >= e) || (e == 0 && frac_val + frac_test > 0)) {
        throw InfeasibleError("split_link_prediction: " + std::to_string(e) +
                              " edges are too few to split");
    }
    std::mt19937_64 rng(seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    LinkSplit s;
    s.test_pos.assign(pairs.begin(), pairs.begin() + n_test);
    s.val_pos.assign(pairs.begin() + n_test, pairs.begin() + n_test + n_val);
    s.train_pos.assign(pairs.begin() + n_test + n_val, pairs.end());
    std::unordered_set<std::uint64_t> held;
    for (const auto &p : s.test_pos) {
        held.insert(pair_key(p.src, p.dst));
    }
    for (const auto &p : s.val_pos) {
        held.insert(pair_key(p.src, p.dst));
    }
    s.train_graph = g;
    s.train_graph.edges.clear();
    for (const auto &ed : g.edges) {
        if (!held.contains(pair_key(ed.src, ed.dst))) {
            s.train_graph.edges.push_back(ed);
        }
    }
    std::unordered_set<std::uint64_t> present;
    for (const auto &p : pairs) {
        present.insert(pair_key(p.src, p.dst));
    }
    std::unordered_set<std::uint64_t> taken;
    s.val_neg = sample_non_edges(g.n_nodes, present, taken, neg_ratio * s.val_pos.size(), rng);
    s.test_neg = sample_non_edges(g.n_nodes, present, taken, neg_ratio * s.test_pos.size(), rng);
    return s;
}

} // namespace qgat
