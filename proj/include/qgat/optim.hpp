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
 * AdamW with decoupled weight decay and a cosine-annealed learning rate.
 */
#pragma once

#include "qgat/errors.hpp"
#include "qgat/matrix.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

namespace qgat {

struct AdamWOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamWState {
    std::vector<Matrix> m, v;
    std::size_t step = 0;
};

/**
 * One AdamW update: p <- p - lr*wd*p, then the bias-corrected Adam step.
 * Throws DivergenceError naming the first tensor with a non-finite gradient;
 * parameters are left untouched in that case.
 */
inline void adamw_step(const std::vector<Matrix *> &params, const std::vector<Matrix> &grads,
                       AdamWState &state, double lr, double weight_decay,
                       const AdamWOptions &opt = {},
                       const std::vector<std::string> *names = nullptr) {
    if (params.size() != grads.size()) {
        throw DimensionError("adamw_step: " + std::to_string(params.size()) + " params but " +
                             std::to_string(grads.size()) + " gradients");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i]->require_same_shape(grads[i], "adamw_step");
        if (!grads[i].all_finite()) {
            throw DivergenceError("adamw_step: non-finite gradient in " +
                                  (names ? (*names)[i] : "tensor " + std::to_string(i)));
        }
    }
    if (state.m.empty()) {
        for (auto *p : params) {
            state.m.emplace_back(p->rows(), p->cols());
            state.v.emplace_back(p->rows(), p->cols());
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix &p = *params[i];
        Matrix &m = state.m[i], &v = state.v[i];
        const Matrix &g = grads[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            p[k] -= lr * weight_decay * p[k];
            m[k] = opt.beta1 * m[k] + (1 - opt.beta1) * g[k];
            v[k] = opt.beta2 * v[k] + (1 - opt.beta2) * g[k] * g[k];
            p[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + opt.eps);
        }
    }
}

/// lr_min + (lr_max - lr_min) * (1 + cos(pi * step / total)) / 2.
inline double cosine_lr(std::size_t step, std::size_t total_steps, double lr_max, double lr_min) {
    if (total_steps == 0) {
        return lr_max;
    }
    const double frac = static_cast<double>(std::min(step, total_steps)) /
                        static_cast<double>(total_steps);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

} // namespace qgat
