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
 * Evaluation metrics. All values lie in [0, 1].
 */
#pragma once

#include "qgat/errors.hpp"
#include "qgat/matrix.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace qgat {

inline std::vector<int> argmax_rows(const Matrix &logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto r = logits.row(i);
        out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

inline double accuracy(std::span<const int> predicted, std::span<const int> labels) {
    if (predicted.size() != labels.size()) {
        throw DimensionError("accuracy: length mismatch");
    }
    if (predicted.empty()) {
        throw InputError("accuracy: empty evaluation set");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        correct += predicted[i] == labels[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

/// Pooled F1 over every (row, label) entry; a logit > 0 predicts positive.
/// Returns 1 when there are neither positives nor predicted positives.
inline double micro_f1(const Matrix &logits, const Matrix &targets) {
    logits.require_same_shape(targets, "micro_f1");
    if (logits.empty()) {
        throw InputError("micro_f1: empty evaluation set");
    }
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const bool pred = logits[i] > 0.0;
        const bool truth = targets[i] > 0.5;
        tp += pred && truth;
        fp += pred && !truth;
        fn += !pred && truth;
    }
    if (2 * tp + fp + fn == 0) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

/**
 * ROC-AUC via the Mann-Whitney rank statistic with average ranks for ties.
 * Returns nullopt when only one class is present.
 */
inline std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw DimensionError("roc_auc: length mismatch");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) {
                pos_rank_sum += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        return std::nullopt;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1) / 2) / (np * nn);
}

/// Fraction of positives scoring strictly above the k-th highest negative.
/// With fewer than k negatives every positive counts as a hit.
inline double hits_at_k(std::span<const double> pos, std::span<const double> neg, std::size_t k) {
    if (pos.empty()) {
        throw InputError("hits_at_k: no positive scores");
    }
    if (k == 0) {
        throw InputError("hits_at_k: k must be >= 1");
    }
    if (neg.size() < k) {
        return 1.0;
    }
    std::vector<double> sorted(neg.begin(), neg.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(k - 1), sorted.end(),
                     std::greater<>());
    const double threshold = sorted[k - 1];
    std::size_t hits = 0;
    for (double p : pos) {
        hits += p > threshold ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(pos.size());
}

/**
 * Mean reciprocal rank. Each positive is ranked against its own candidate
 * negatives; ties count half (rank = 1 + #greater + #equal / 2).
 */
inline double mrr(std::span<const double> pos, const std::vector<std::vector<double>> &neg) {
    if (pos.empty()) {
        throw InputError("mrr: no positive scores");
    }
    if (neg.size() != pos.size()) {
        throw DimensionError("mrr: one negative list per positive required");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        std::size_t greater = 0, equal = 0;
        for (double s : neg[i]) {
            greater += s > pos[i] ? 1 : 0;
            equal += s == pos[i] ? 1 : 0;
        }
        total += 1.0 / (1.0 + static_cast<double>(greater) + 0.5 * static_cast<double>(equal));
    }
    return total / static_cast<double>(pos.size());
}

/// mrr() with one shared negative set for every positive.
inline double mrr_shared(std::span<const double> pos, std::span<const double> neg) {
    std::vector<std::vector<double>> lists(pos.size(), std::vector<double>(neg.begin(), neg.end()));
    return mrr(pos, lists);
}

} // namespace qgat
