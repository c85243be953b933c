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
 * Strongly-entangling variational circuit: per-qubit Z-Y-Z rotations followed
 * by a CNOT ring whose range varies from layer to layer. Forward evaluation
 * returns every wire's <Z>; the backward pass is an adjoint sweep that yields
 * exact gradients for the rotation angles and for the raw (pre-normalization)
 * input vector.
 */
#pragma once

#include "qgat/errors.hpp"
#include "qgat/statevector.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qgat {

/// Rotation angles, shape n_layers x n_qubits x 3. Entry (l, q, 0..2) holds
/// (mu1, mu2, mu3) of G = R_Z(mu1) R_Y(mu2) R_Z(mu3).
class CircuitParams {
  public:
    CircuitParams() = default;
    CircuitParams(std::size_t n_layers, std::size_t n_qubits)
        : n_layers_(n_layers), n_qubits_(n_qubits), angles_(n_layers * n_qubits * 3, 0.0) {}
    CircuitParams(std::size_t n_layers, std::size_t n_qubits, std::vector<double> angles)
        : n_layers_(n_layers), n_qubits_(n_qubits), angles_(std::move(angles)) {
        if (angles_.size() != n_layers_ * n_qubits_ * 3) {
            throw DimensionError("CircuitParams: expected " +
                                 std::to_string(n_layers_ * n_qubits_ * 3) + " angles, got " +
                                 std::to_string(angles_.size()));
        }
        require_finite(angles_, "CircuitParams");
    }

    [[nodiscard]] std::size_t n_layers() const { return n_layers_; }
    [[nodiscard]] std::size_t n_qubits() const { return n_qubits_; }
    [[nodiscard]] std::size_t size() const { return angles_.size(); }

    static std::size_t index(std::size_t n_qubits, std::size_t layer, std::size_t qubit,
                             std::size_t k) {
        return (layer * n_qubits + qubit) * 3 + k;
    }
    double &at(std::size_t layer, std::size_t qubit, std::size_t k) {
        return angles_[index(n_qubits_, layer, qubit, k)];
    }
    [[nodiscard]] double at(std::size_t layer, std::size_t qubit, std::size_t k) const {
        return angles_[index(n_qubits_, layer, qubit, k)];
    }

    std::vector<double> &angles() { return angles_; }
    [[nodiscard]] const std::vector<double> &angles() const { return angles_; }

    /// Uniform [0, 2pi) initialization.
    template <class Rng> static CircuitParams random(std::size_t n_layers, std::size_t n_qubits,
                                                     Rng &rng) {
        CircuitParams p(n_layers, n_qubits);
        std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
        for (auto &a : p.angles_) {
            a = u(rng);
        }
        return p;
    }

  private:
    std::size_t n_layers_ = 0;
    std::size_t n_qubits_ = 0;
    std::vector<double> angles_;
};

/// CNOT ring ranges, one per layer. Layer l applies CNOT(i, (i + r_l) mod M)
/// for i = 0..M-1 in order. A range of 0 means the layer has no entangler
/// (single-qubit circuits).
struct EntanglingLayout {
    std::size_t n_qubits = 0;
    std::vector<std::size_t> ranges;

    [[nodiscard]] std::size_t n_layers() const { return ranges.size(); }

    [[nodiscard]] static std::size_t target(std::size_t i, std::size_t range, std::size_t m) {
        return (i + range) % m;
    }
};

/// r_l = ((l - 1) mod (M - 1)) + 1 for l = 1..L, i.e. 1, 2, ..., M-1, 1, ...
inline EntanglingLayout build_layout(std::size_t n_qubits, std::size_t n_layers) {
    if (n_qubits < 2) {
        throw ConfigError("build_layout: need at least 2 qubits to entangle, got " +
                          std::to_string(n_qubits));
    }
    EntanglingLayout layout{n_qubits, {}};
    layout.ranges.reserve(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        layout.ranges.push_back(l % (n_qubits - 1) + 1);
    }
    return layout;
}

/// build_layout for n_qubits >= 2; a rotation-only layout for a single qubit.
inline EntanglingLayout default_layout(std::size_t n_qubits, std::size_t n_layers) {
    if (n_qubits >= 2) {
        return build_layout(n_qubits, n_layers);
    }
    return EntanglingLayout{n_qubits, std::vector<std::size_t>(n_layers, 0)};
}

inline std::size_t param_count(std::size_t n_layers, std::size_t n_qubits) {
    return n_layers * n_qubits * 3;
}

/// One gate of the unrolled circuit; param < 0 for fixed gates.
struct CompiledGate {
    GateOp op;
    long param = -1;
};

inline void check_circuit_shapes(const CircuitParams &params, const EntanglingLayout &layout) {
    if (params.n_qubits() != layout.n_qubits || params.n_layers() != layout.n_layers()) {
        throw ConfigError("circuit params " + std::to_string(params.n_layers()) + "x" +
                          std::to_string(params.n_qubits()) + "x3 do not match layout with " +
                          std::to_string(layout.n_layers()) + " layers on " +
                          std::to_string(layout.n_qubits) + " qubits");
    }
    if (layout.n_qubits == 0 || layout.n_qubits > kMaxQubits) {
        throw ConfigError("circuit qubit count out of range");
    }
    for (auto r : layout.ranges) {
        if (r >= layout.n_qubits || (r == 0 && layout.n_qubits > 1)) {
            throw ConfigError("entangling range " + std::to_string(r) +
                              " outside (0, n_qubits)");
        }
    }
}

inline std::vector<CompiledGate> compile_circuit(const CircuitParams &params,
                                                 const EntanglingLayout &layout) {
    check_circuit_shapes(params, layout);
    const std::size_t m = layout.n_qubits;
    std::vector<CompiledGate> gates;
    gates.reserve(layout.n_layers() * m * 4);
    for (std::size_t l = 0; l < layout.n_layers(); ++l) {
        for (std::size_t q = 0; q < m; ++q) {
            // Rightmost factor acts first.
            const auto idx = [&](std::size_t k) {
                return static_cast<long>(CircuitParams::index(m, l, q, k));
            };
            gates.push_back({GateOp::rz(q, params.at(l, q, 2)), idx(2)});
            gates.push_back({GateOp::ry(q, params.at(l, q, 1)), idx(1)});
            gates.push_back({GateOp::rz(q, params.at(l, q, 0)), idx(0)});
        }
        const std::size_t r = layout.ranges[l];
        if (r == 0) {
            continue;
        }
        for (std::size_t i = 0; i < m; ++i) {
            gates.push_back({GateOp::cnot(i, EntanglingLayout::target(i, r, m)), -1});
        }
    }
    return gates;
}

/**
 * An ansatz compiled once for fixed angles; evaluates many inputs.
 */
class Circuit {
  public:
    Circuit(const CircuitParams &params, const EntanglingLayout &layout)
        : n_qubits_(layout.n_qubits), n_params_(params.size()),
          gates_(compile_circuit(params, layout)) {}

    [[nodiscard]] std::size_t n_qubits() const { return n_qubits_; }
    [[nodiscard]] std::size_t n_params() const { return n_params_; }
    [[nodiscard]] const std::vector<CompiledGate> &gates() const { return gates_; }

    [[nodiscard]] StateVector run(std::span<const double> input) const {
        StateVector psi = amplitude_encode(input, n_qubits_);
        for (const auto &g : gates_) {
            psi.apply(g.op);
        }
        return psi;
    }

    [[nodiscard]] std::vector<double> forward(std::span<const double> input) const {
        return run(input).expect_z_all();
    }

    /// Adds the gradients of sum_k upstream[k] <Z_k> into grad_params / grad_input.
    void backward(std::span<const double> input, std::span<const double> upstream,
                  std::span<double> grad_params, std::span<double> grad_input) const {
        if (upstream.size() != n_qubits_) {
            throw DimensionError("circuit backward: upstream has " +
                                 std::to_string(upstream.size()) + " entries for " +
                                 std::to_string(n_qubits_) + " qubits");
        }
        if (grad_params.size() != n_params_ || grad_input.size() != input.size()) {
            throw DimensionError("circuit backward: gradient buffer size mismatch");
        }
        StateVector psi = run(input);
        StateVector lambda = psi;
        lambda.apply_weighted_z(upstream);

        for (auto it = gates_.rbegin(); it != gates_.rend(); ++it) {
            if (it->param >= 0) {
                // dR/dtheta = -i/2 G R, so the contribution is Im <lambda|G|psi_after>.
                grad_params[static_cast<std::size_t>(it->param)] +=
                    generator_overlap(lambda, psi, it->op).imag();
            }
            const GateOp inv = it->op.inverse();
            psi.apply(inv);
            lambda.apply(inv);
        }

        // lambda = U^dag O U psi0 and psi0 is real, so d<O>/dpsi0_i = 2 Re(lambda_i).
        double ss = 0.0;
        for (double v : input) {
            ss += v * v;
        }
        const double norm = std::sqrt(ss);
        if (norm < kZeroNormThreshold) {
            return;
        }
        double vg = 0.0;
        for (std::size_t i = 0; i < input.size(); ++i) {
            vg += input[i] * 2.0 * lambda[i].real();
        }
        vg /= norm * norm;
        for (std::size_t i = 0; i < input.size(); ++i) {
            grad_input[i] += (2.0 * lambda[i].real() - input[i] * vg) / norm;
        }
    }

  private:
    /// <lambda| G |psi> for the Pauli generator G of a rotation gate.
    static cplx generator_overlap(const StateVector &lambda, const StateVector &psi,
                                  const GateOp &op) {
        const std::size_t s = psi.stride(op.wire0);
        const auto l = lambda.amplitudes();
        const auto p = psi.amplitudes();
        cplx acc(0);
        if (op.kind == GateKind::RZ) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                const cplx t = std::conj(l[i]) * p[i];
                acc += (i & s) ? -t : t;
            }
            return acc;
        }
        // Y = [[0, -i], [i, 0]].
        const cplx im(0, 1);
        for (std::size_t base = 0; base < p.size(); base += 2 * s) {
            for (std::size_t i = base; i < base + s; ++i) {
                acc += std::conj(l[i]) * (-im * p[i + s]) + std::conj(l[i + s]) * (im * p[i]);
            }
        }
        return acc;
    }

    std::size_t n_qubits_;
    std::size_t n_params_;
    std::vector<CompiledGate> gates_;
};

inline StateVector run_circuit(std::span<const double> input, const CircuitParams &params,
                               const EntanglingLayout &layout) {
    return Circuit(params, layout).run(input);
}

/// Amplitude-encodes `input`, applies the ansatz and returns (<Z_0>, ..., <Z_{n-1}>).
inline std::vector<double> circuit_forward(std::span<const double> input,
                                           const CircuitParams &params,
                                           const EntanglingLayout &layout) {
    return Circuit(params, layout).forward(input);
}

struct CircuitGradients {
    std::vector<double> params; ///< same layout as CircuitParams::angles()
    std::vector<double> input;  ///< same length as the raw input
};

/**
 * Adjoint-mode gradients of sum_k upstream[k] * <Z_k> with respect to every
 * rotation angle and every raw input component (through the L2
 * normalization). Zero-norm inputs receive a zero input-gradient.
 */
inline CircuitGradients circuit_backward(std::span<const double> input,
                                         const CircuitParams &params,
                                         const EntanglingLayout &layout,
                                         std::span<const double> upstream) {
    Circuit c(params, layout);
    CircuitGradients out{std::vector<double>(params.size(), 0.0),
                         std::vector<double>(input.size(), 0.0)};
    c.backward(input, upstream, out.params, out.input);
    return out;
}

} // namespace qgat
