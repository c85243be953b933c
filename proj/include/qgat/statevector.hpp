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
 * Dense pure-state simulator: state preparation, gate application and
 * Pauli-Z expectation values.
 *
 * Wire 0 is the most significant bit of the basis index, so the basis state
 * |q0 q1 ... q_{n-1}> lives at index sum_k q_k * 2^(n-1-k). Rotations follow
 * R_G(theta) = exp(-i theta G / 2).
 */
#pragma once

#include "qgat/errors.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace qgat {

using cplx = std::complex<double>;

/// Row-major 2x2 complex matrix {m00, m01, m10, m11}.
using Mat2 = std::array<cplx, 4>;

inline constexpr std::size_t kMaxQubits = 20;

enum class GateKind { RY, RZ, CNOT, CPHASE };

inline const char *gate_name(GateKind k) {
    switch (k) {
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CPHASE: return "CPHASE";
    }
    return "?";
}

struct GateOp {
    GateKind kind = GateKind::RY;
    /// Target wire for single-qubit gates; control wire for two-qubit gates.
    std::size_t wire0 = 0;
    /// Target wire for two-qubit gates, unused otherwise.
    std::size_t wire1 = 0;
    double angle = 0.0;

    static GateOp ry(std::size_t q, double theta) { return {GateKind::RY, q, 0, theta}; }
    static GateOp rz(std::size_t q, double theta) { return {GateKind::RZ, q, 0, theta}; }
    static GateOp cnot(std::size_t control, std::size_t target) {
        return {GateKind::CNOT, control, target, 0.0};
    }
    static GateOp cphase(std::size_t control, std::size_t target, double phi) {
        return {GateKind::CPHASE, control, target, phi};
    }

    [[nodiscard]] bool two_qubit() const {
        return kind == GateKind::CNOT || kind == GateKind::CPHASE;
    }

    /// CNOT is self-inverse; every other gate inverts by negating its angle.
    [[nodiscard]] GateOp inverse() const {
        GateOp g = *this;
        if (kind != GateKind::CNOT) {
            g.angle = -angle;
        }
        return g;
    }
};

inline Mat2 ry_matrix(double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    return {cplx(c), cplx(-s), cplx(s), cplx(c)};
}

inline Mat2 rz_matrix(double theta) {
    return {std::polar(1.0, -theta / 2), cplx(0), cplx(0), std::polar(1.0, theta / 2)};
}

/// d/dtheta of ry_matrix.
inline Mat2 ry_derivative(double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    return {cplx(-s / 2), cplx(-c / 2), cplx(c / 2), cplx(-s / 2)};
}

/// d/dtheta of rz_matrix.
inline Mat2 rz_derivative(double theta) {
    const cplx i(0, 1);
    return {-i / 2.0 * std::polar(1.0, -theta / 2), cplx(0), cplx(0),
            i / 2.0 * std::polar(1.0, theta / 2)};
}

class StateVector {
  public:
    /// |0...0> on n qubits.
    explicit StateVector(std::size_t n_qubits) : n_qubits_(n_qubits) {
        if (n_qubits == 0 || n_qubits > kMaxQubits) {
            throw ConfigError("StateVector: qubit count " + std::to_string(n_qubits) +
                              " outside [1, " + std::to_string(kMaxQubits) + "]");
        }
        amps_.assign(std::size_t{1} << n_qubits, cplx(0));
        amps_[0] = 1.0;
    }

    StateVector(std::size_t n_qubits, std::vector<cplx> amps) : StateVector(n_qubits) {
        if (amps.size() != amps_.size()) {
            throw DimensionError("StateVector: expected " + std::to_string(amps_.size()) +
                                 " amplitudes, got " + std::to_string(amps.size()));
        }
        amps_ = std::move(amps);
    }

    [[nodiscard]] std::size_t n_qubits() const { return n_qubits_; }
    [[nodiscard]] std::size_t dim() const { return amps_.size(); }
    [[nodiscard]] std::span<const cplx> amplitudes() const { return amps_; }
    std::span<cplx> amplitudes() { return amps_; }
    cplx operator[](std::size_t i) const { return amps_[i]; }

    [[nodiscard]] double norm_squared() const {
        double s = 0.0;
        for (const auto &a : amps_) {
            s += std::norm(a);
        }
        return s;
    }

    /// Stride between the two basis indices a single-qubit gate on `q` mixes.
    [[nodiscard]] std::size_t stride(std::size_t q) const {
        return std::size_t{1} << (n_qubits_ - 1 - q);
    }

    void check_wire(std::size_t q) const {
        if (q >= n_qubits_) {
            throw IndexError("wire " + std::to_string(q) + " out of range for " +
                             std::to_string(n_qubits_) + "-qubit state");
        }
    }

    /// Applies an arbitrary 2x2 matrix (not necessarily unitary) to wire q.
    void apply_matrix(std::size_t q, const Mat2 &m) {
        check_wire(q);
        const std::size_t s = stride(q);
        const std::size_t n = amps_.size();
        for (std::size_t base = 0; base < n; base += 2 * s) {
            for (std::size_t i = base; i < base + s; ++i) {
                const cplx a0 = amps_[i], a1 = amps_[i + s];
                amps_[i] = m[0] * a0 + m[1] * a1;
                amps_[i + s] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    void apply(const GateOp &g) {
        switch (g.kind) {
        case GateKind::RY: apply_matrix(g.wire0, ry_matrix(g.angle)); return;
        case GateKind::RZ: apply_rz(g.wire0, g.angle); return;
        case GateKind::CNOT: apply_cnot(g.wire0, g.wire1); return;
        case GateKind::CPHASE: apply_cphase(g.wire0, g.wire1, g.angle); return;
        }
    }

    void apply_rz(std::size_t q, double theta) {
        check_wire(q);
        const cplx p0 = std::polar(1.0, -theta / 2), p1 = std::polar(1.0, theta / 2);
        const std::size_t s = stride(q);
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            amps_[i] *= (i & s) ? p1 : p0;
        }
    }

    void apply_cnot(std::size_t control, std::size_t target) {
        check_pair(control, target);
        const std::size_t cs = stride(control), ts = stride(target);
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if ((i & cs) && !(i & ts)) {
                std::swap(amps_[i], amps_[i | ts]);
            }
        }
    }

    void apply_cphase(std::size_t control, std::size_t target, double phi) {
        check_pair(control, target);
        const std::size_t mask = stride(control) | stride(target);
        const cplx phase = std::polar(1.0, phi);
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if ((i & mask) == mask) {
                amps_[i] *= phase;
            }
        }
    }

    /// <Z_q> = sum_i (+1 if bit q of i is 0 else -1) |amp_i|^2.
    [[nodiscard]] double expect_z(std::size_t q) const {
        check_wire(q);
        const std::size_t s = stride(q);
        double e = 0.0;
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            e += (i & s) ? -std::norm(amps_[i]) : std::norm(amps_[i]);
        }
        return std::clamp(e, -1.0, 1.0);
    }

    /// <Z_q> for every wire in one pass.
    [[nodiscard]] std::vector<double> expect_z_all() const {
        std::vector<double> e(n_qubits_, 0.0);
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            const double p = std::norm(amps_[i]);
            for (std::size_t q = 0; q < n_qubits_; ++q) {
                e[q] += (i & stride(q)) ? -p : p;
            }
        }
        for (auto &v : e) {
            v = std::clamp(v, -1.0, 1.0);
        }
        return e;
    }

    /// Multiplies by the diagonal observable sum_q w_q Z_q (used to seed adjoint sweeps).
    void apply_weighted_z(std::span<const double> weights) {
        if (weights.size() != n_qubits_) {
            throw DimensionError("apply_weighted_z: weight count mismatch");
        }
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            double d = 0.0;
            for (std::size_t q = 0; q < n_qubits_; ++q) {
                d += (i & stride(q)) ? -weights[q] : weights[q];
            }
            amps_[i] *= d;
        }
    }

  private:
    void check_pair(std::size_t a, std::size_t b) const {
        check_wire(a);
        check_wire(b);
        if (a == b) {
            throw IndexError("two-qubit gate needs distinct wires, got " + std::to_string(a) +
                             " twice");
        }
    }

    std::size_t n_qubits_;
    std::vector<cplx> amps_;
};

/// <a|b>.
inline cplx inner(const StateVector &a, const StateVector &b) {
    cplx s(0);
    for (std::size_t i = 0; i < a.dim(); ++i) {
        s += std::conj(a[i]) * b[i];
    }
    return s;
}

inline void require_finite(std::span<const double> x, const char *who) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) {
            throw InputError(std::string(who) + ": non-finite entry at index " +
                             std::to_string(i));
        }
    }
}

inline constexpr double kZeroNormThreshold = 1e-12;

/**
 * Amplitude encoding: x is zero-padded after its last entry to 2^n and
 * L2-normalized. Inputs with norm below 1e-12 map to |0...0>.
 */
inline StateVector amplitude_encode(std::span<const double> x, std::size_t n_qubits) {
    StateVector psi(n_qubits);
    if (x.size() > psi.dim()) {
        throw DimensionError("amplitude_encode: " + std::to_string(x.size()) +
                             " features do not fit in " + std::to_string(n_qubits) + " qubits");
    }
    require_finite(x, "amplitude_encode");
    double ss = 0.0;
    for (double v : x) {
        ss += v * v;
    }
    const double norm = std::sqrt(ss);
    if (norm < kZeroNormThreshold) {
        return psi;
    }
    auto amps = psi.amplitudes();
    amps[0] = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        amps[i] = x[i] / norm;
    }
    return psi;
}

/// Angle encoding: one qubit per feature, state = (x) R_Y(x_i)|0>.
inline StateVector angle_encode(std::span<const double> x) {
    require_finite(x, "angle_encode");
    StateVector psi(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        psi.apply_matrix(i, ry_matrix(x[i]));
    }
    return psi;
}

/// Value-returning form of StateVector::apply.
inline StateVector apply_gate(StateVector state, const GateOp &gate) {
    state.apply(gate);
    return state;
}

inline double expect_z(const StateVector &state, std::size_t qubit) {
    return state.expect_z(qubit);
}

} // namespace qgat
