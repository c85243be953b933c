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
 * Reverse-mode gradient tape over dense matrices.
 *
 * Every op evaluates eagerly, stores its value on the tape and registers a
 * closure that maps the node's output gradient onto its inputs. Nodes that do
 * not depend on any parameter carry no gradient and skip their closure.
 */
#pragma once

#include "qgat/errors.hpp"
#include "qgat/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qgat {

struct Var {
    std::size_t id = 0;
    std::uint64_t generation = 0;
};

class GradTape {
  public:
    using Backward = std::function<void(GradTape &, const Matrix &grad_out)>;

    Var constant(Matrix value) { return push(std::move(value), false, nullptr); }

    /// Leaf that receives a gradient.
    Var parameter(const Matrix &value) { return push(value, true, nullptr); }

    Var push(Matrix value, bool requires_grad, Backward backward) {
        nodes_.push_back(Node{std::move(value), Matrix{}, requires_grad, std::move(backward)});
        return Var{nodes_.size() - 1, generation_};
    }

    [[nodiscard]] const Matrix &value(Var v) const { return node(v).value; }
    [[nodiscard]] bool requires_grad(Var v) const { return node(v).requires_grad; }

    [[nodiscard]] bool any_requires_grad(std::initializer_list<Var> vs) const {
        return std::any_of(vs.begin(), vs.end(), [&](Var v) { return requires_grad(v); });
    }

    /// Gradient of the last backward() root w.r.t. v; zeros if v was unreachable.
    [[nodiscard]] Matrix grad(Var v) const {
        const Node &n = node(v);
        if (n.grad.empty() && !n.value.empty()) {
            return Matrix(n.value.rows(), n.value.cols());
        }
        return n.grad;
    }

    /// Adds g into v's gradient; no-op for constants.
    void accumulate(Var v, const Matrix &g) {
        Node &n = node(v);
        if (!n.requires_grad) {
            return;
        }
        if (n.grad.empty()) {
            n.grad = g;
        } else {
            n.grad += g;
        }
    }

    /// Mutable gradient buffer for ops that scatter into it; nullptr for constants.
    Matrix *grad_buffer(Var v) {
        Node &n = node(v);
        if (!n.requires_grad) {
            return nullptr;
        }
        if (n.grad.empty()) {
            n.grad = Matrix(n.value.rows(), n.value.cols());
        }
        return &n.grad;
    }

    /// Seeds d(root)/d(root) = 1 for a 1x1 root, or `seed` otherwise.
    void backward(Var root, const Matrix *seed = nullptr) {
        Node &r = node(root);
        for (auto &n : nodes_) {
            n.grad = Matrix{};
        }
        if (seed != nullptr) {
            r.value.require_same_shape(*seed, "backward seed");
            r.grad = *seed;
        } else {
            if (r.value.size() != 1) {
                throw DimensionError("backward: root must be 1x1 without a seed, got " +
                                     r.value.shape_str());
            }
            r.grad = Matrix(1, 1, 1.0);
        }
        for (std::size_t i = root.id + 1; i-- > 0;) {
            Node &n = nodes_[i];
            if (!n.requires_grad || n.grad.empty() || !n.backward) {
                continue;
            }
            // The closure may accumulate into lower-indexed nodes only.
            const Matrix g = n.grad;
            n.backward(*this, g);
        }
    }

    /// Invalidates every Var handed out so far.
    void reset() {
        nodes_.clear();
        ++generation_;
    }

    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        Backward backward;
    };

    Node &node(Var v) {
        check(v);
        return nodes_[v.id];
    }
    [[nodiscard]] const Node &node(Var v) const {
        check(v);
        return nodes_[v.id];
    }
    void check(Var v) const {
        if (v.generation != generation_ || v.id >= nodes_.size()) {
            throw StaleTapeError("tape handle " + std::to_string(v.id) + " from generation " +
                                 std::to_string(v.generation) + " used on generation " +
                                 std::to_string(generation_));
        }
    }

    std::vector<Node> nodes_;
    std::uint64_t generation_ = 1;
};

namespace ops {

using Index = std::vector<std::size_t>;

inline Var matmul(GradTape &t, Var a, Var b) {
    Matrix out = qgat::matmul(t.value(a), t.value(b));
    const bool rg = t.any_requires_grad({a, b});
    return t.push(std::move(out), rg, [a, b](GradTape &t, const Matrix &g) {
        if (t.requires_grad(a)) {
            t.accumulate(a, matmul_nt(g, t.value(b)));
        }
        if (t.requires_grad(b)) {
            t.accumulate(b, matmul_tn(t.value(a), g));
        }
    });
}

inline Var add(GradTape &t, Var a, Var b) {
    Matrix out = t.value(a);
    out += t.value(b);
    return t.push(std::move(out), t.any_requires_grad({a, b}), [a, b](GradTape &t, const Matrix &g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

inline Var scale(GradTape &t, Var a, double c) {
    Matrix out = t.value(a);
    for (auto &v : out.data()) {
        v *= c;
    }
    return t.push(std::move(out), t.requires_grad(a), [a, c](GradTape &t, const Matrix &g) {
        Matrix ga = g;
        for (auto &v : ga.data()) {
            v *= c;
        }
        t.accumulate(a, ga);
    });
}

/// Elementwise product with a constant matrix (dropout masks).
inline Var mul_const(GradTape &t, Var a, Matrix mask) {
    const Matrix &av = t.value(a);
    av.require_same_shape(mask, "mul_const");
    Matrix out = av;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= mask[i];
    }
    return t.push(std::move(out), t.requires_grad(a),
                  [a, mask = std::move(mask)](GradTape &t, const Matrix &g) {
                      Matrix ga = g;
                      for (std::size_t i = 0; i < ga.size(); ++i) {
                          ga[i] *= mask[i];
                      }
                      t.accumulate(a, ga);
                  });
}

inline Var concat_cols(GradTape &t, const std::vector<Var> &parts) {
    if (parts.empty()) {
        throw DimensionError("concat_cols: nothing to concatenate");
    }
    const std::size_t rows = t.value(parts[0]).rows();
    std::size_t cols = 0;
    bool rg = false;
    for (Var p : parts) {
        if (t.value(p).rows() != rows) {
            throw DimensionError("concat_cols: row count mismatch");
        }
        cols += t.value(p).cols();
        rg = rg || t.requires_grad(p);
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    for (Var p : parts) {
        const Matrix &pv = t.value(p);
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy(pv.row(r).begin(), pv.row(r).end(), out.row(r).begin() + off);
        }
        off += pv.cols();
    }
    return t.push(std::move(out), rg, [parts](GradTape &t, const Matrix &g) {
        std::size_t off = 0;
        for (Var p : parts) {
            const std::size_t c = t.value(p).cols();
            if (Matrix *gp = t.grad_buffer(p)) {
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    for (std::size_t j = 0; j < c; ++j) {
                        (*gp)(r, j) += g(r, off + j);
                    }
                }
            }
            off += c;
        }
    });
}

/// out[e] = a[idx[e]].
inline Var gather_rows(GradTape &t, Var a, Index idx) {
    const Matrix &av = t.value(a);
    Matrix out(idx.size(), av.cols());
    for (std::size_t e = 0; e < idx.size(); ++e) {
        if (idx[e] >= av.rows()) {
            throw IndexError("gather_rows: row " + std::to_string(idx[e]) + " of " +
                             std::to_string(av.rows()));
        }
        std::copy(av.row(idx[e]).begin(), av.row(idx[e]).end(), out.row(e).begin());
    }
    return t.push(std::move(out), t.requires_grad(a),
                  [a, idx = std::move(idx)](GradTape &t, const Matrix &g) {
                      Matrix *ga = t.grad_buffer(a);
                      for (std::size_t e = 0; e < idx.size(); ++e) {
                          auto dst = ga->row(idx[e]);
                          auto src = g.row(e);
                          for (std::size_t j = 0; j < src.size(); ++j) {
                              dst[j] += src[j];
                          }
                      }
                  });
}

/// out[idx[e]] += a[e]; out has n_out rows. Rows are summed in edge order.
inline Var scatter_sum_rows(GradTape &t, Var a, Index idx, std::size_t n_out) {
    const Matrix &av = t.value(a);
    if (idx.size() != av.rows()) {
        throw DimensionError("scatter_sum_rows: index length mismatch");
    }
    Matrix out(n_out, av.cols());
    for (std::size_t e = 0; e < idx.size(); ++e) {
        auto dst = out.row(idx[e]);
        auto src = av.row(e);
        for (std::size_t j = 0; j < src.size(); ++j) {
            dst[j] += src[j];
        }
    }
    return t.push(std::move(out), t.requires_grad(a),
                  [a, idx = std::move(idx)](GradTape &t, const Matrix &g) {
                      Matrix ga(idx.size(), g.cols());
                      for (std::size_t e = 0; e < idx.size(); ++e) {
                          std::copy(g.row(idx[e]).begin(), g.row(idx[e]).end(),
                                    ga.row(e).begin());
                      }
                      t.accumulate(a, ga);
                  });
}

inline Var elu(GradTape &t, Var a, double alpha = 1.0) {
    Matrix out = t.value(a);
    for (auto &v : out.data()) {
        v = v > 0 ? v : alpha * std::expm1(v);
    }
    return t.push(std::move(out), t.requires_grad(a), [a, alpha](GradTape &t, const Matrix &g) {
        const Matrix &x = t.value(a);
        Matrix ga = g;
        for (std::size_t i = 0; i < ga.size(); ++i) {
            ga[i] *= x[i] > 0 ? 1.0 : alpha * std::exp(x[i]);
        }
        t.accumulate(a, ga);
    });
}

inline Var leaky_relu(GradTape &t, Var a, double slope) {
    Matrix out = t.value(a);
    for (auto &v : out.data()) {
        v = v > 0 ? v : slope * v;
    }
    return t.push(std::move(out), t.requires_grad(a), [a, slope](GradTape &t, const Matrix &g) {
        const Matrix &x = t.value(a);
        Matrix ga = g;
        for (std::size_t i = 0; i < ga.size(); ++i) {
            ga[i] *= x[i] > 0 ? 1.0 : slope;
        }
        t.accumulate(a, ga);
    });
}

inline Var relu(GradTape &t, Var a) { return leaky_relu(t, a, 0.0); }

/**
 * Column-wise softmax within contiguous row segments: rows
 * [offsets[s], offsets[s+1]) form one neighborhood. Max-subtracted.
 */
inline Var segment_softmax(GradTape &t, Var logits, Index offsets) {
    const Matrix &x = t.value(logits);
    if (offsets.empty() || offsets.back() != x.rows()) {
        throw DimensionError("segment_softmax: offsets do not cover " +
                             std::to_string(x.rows()) + " rows");
    }
    Matrix out(x.rows(), x.cols());
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
        const std::size_t lo = offsets[s], hi = offsets[s + 1];
        if (lo == hi) {
            continue;
        }
        for (std::size_t k = 0; k < x.cols(); ++k) {
            double m = x(lo, k);
            for (std::size_t e = lo + 1; e < hi; ++e) {
                m = std::max(m, x(e, k));
            }
            double z = 0.0;
            for (std::size_t e = lo; e < hi; ++e) {
                out(e, k) = std::exp(x(e, k) - m);
                z += out(e, k);
            }
            for (std::size_t e = lo; e < hi; ++e) {
                out(e, k) /= z;
            }
        }
    }
    const bool rg = t.requires_grad(logits);
    Matrix y = rg ? out : Matrix{};
    return t.push(std::move(out), rg,
                  [logits, y = std::move(y), offsets = std::move(offsets)](GradTape &t,
                                                                           const Matrix &g) {
                      Matrix gx(y.rows(), y.cols());
                      for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
                          const std::size_t lo = offsets[s], hi = offsets[s + 1];
                          for (std::size_t k = 0; k < y.cols(); ++k) {
                              double dot = 0.0;
                              for (std::size_t e = lo; e < hi; ++e) {
                                  dot += g(e, k) * y(e, k);
                              }
                              for (std::size_t e = lo; e < hi; ++e) {
                                  gx(e, k) = y(e, k) * (g(e, k) - dot);
                              }
                          }
                      }
                      t.accumulate(logits, gx);
                  });
}

/// out[e, k*D + d] = m[e, k*D + d] * w[e, k] for H heads of width D.
inline Var head_weight(GradTape &t, Var m, Var w) {
    const Matrix &mv = t.value(m), &wv = t.value(w);
    if (mv.rows() != wv.rows() || wv.cols() == 0 || mv.cols() % wv.cols() != 0) {
        throw DimensionError("head_weight: " + mv.shape_str() + " vs " + wv.shape_str());
    }
    const std::size_t heads = wv.cols(), width = mv.cols() / heads;
    Matrix out(mv.rows(), mv.cols());
    for (std::size_t e = 0; e < mv.rows(); ++e) {
        for (std::size_t k = 0; k < heads; ++k) {
            for (std::size_t d = 0; d < width; ++d) {
                out(e, k * width + d) = mv(e, k * width + d) * wv(e, k);
            }
        }
    }
    return t.push(std::move(out), t.any_requires_grad({m, w}),
                  [m, w, heads, width](GradTape &t, const Matrix &g) {
                      const Matrix &mv = t.value(m), &wv = t.value(w);
                      if (Matrix *gm = t.grad_buffer(m)) {
                          for (std::size_t e = 0; e < g.rows(); ++e) {
                              for (std::size_t k = 0; k < heads; ++k) {
                                  for (std::size_t d = 0; d < width; ++d) {
                                      (*gm)(e, k * width + d) += g(e, k * width + d) * wv(e, k);
                                  }
                              }
                          }
                      }
                      if (Matrix *gw = t.grad_buffer(w)) {
                          for (std::size_t e = 0; e < g.rows(); ++e) {
                              for (std::size_t k = 0; k < heads; ++k) {
                                  double s = 0.0;
                                  for (std::size_t d = 0; d < width; ++d) {
                                      s += g(e, k * width + d) * mv(e, k * width + d);
                                  }
                                  (*gw)(e, k) += s;
                              }
                          }
                      }
                  });
}

/// out[e, k] = sum_d x[e, k*D + d] * a[0, k*D + d].
inline Var head_dot(GradTape &t, Var x, Var a, std::size_t heads) {
    const Matrix &xv = t.value(x), &av = t.value(a);
    if (av.rows() != 1 || av.cols() != xv.cols() || heads == 0 || xv.cols() % heads != 0) {
        throw DimensionError("head_dot: " + xv.shape_str() + " vs " + av.shape_str());
    }
    const std::size_t width = xv.cols() / heads;
    Matrix out(xv.rows(), heads);
    for (std::size_t e = 0; e < xv.rows(); ++e) {
        for (std::size_t k = 0; k < heads; ++k) {
            double s = 0.0;
            for (std::size_t d = 0; d < width; ++d) {
                s += xv(e, k * width + d) * av(0, k * width + d);
            }
            out(e, k) = s;
        }
    }
    return t.push(std::move(out), t.any_requires_grad({x, a}),
                  [x, a, heads, width](GradTape &t, const Matrix &g) {
                      const Matrix &xv = t.value(x), &av = t.value(a);
                      Matrix *gx = t.grad_buffer(x);
                      Matrix *ga = t.grad_buffer(a);
                      for (std::size_t e = 0; e < g.rows(); ++e) {
                          for (std::size_t k = 0; k < heads; ++k) {
                              const double ge = g(e, k);
                              for (std::size_t d = 0; d < width; ++d) {
                                  const std::size_t c = k * width + d;
                                  if (gx) {
                                      (*gx)(e, c) += ge * av(0, c);
                                  }
                                  if (ga) {
                                      (*ga)(0, c) += ge * xv(e, c);
                                  }
                              }
                          }
                      }
                  });
}

/// Averages H head blocks of width D: N x (H*D) -> N x D.
inline Var head_mean(GradTape &t, Var x, std::size_t heads) {
    const Matrix &xv = t.value(x);
    if (heads == 0 || xv.cols() % heads != 0) {
        throw DimensionError("head_mean: " + xv.shape_str() + " not divisible into " +
                             std::to_string(heads) + " heads");
    }
    const std::size_t width = xv.cols() / heads;
    Matrix out(xv.rows(), width);
    for (std::size_t i = 0; i < xv.rows(); ++i) {
        for (std::size_t k = 0; k < heads; ++k) {
            for (std::size_t d = 0; d < width; ++d) {
                out(i, d) += xv(i, k * width + d);
            }
        }
        for (std::size_t d = 0; d < width; ++d) {
            out(i, d) /= static_cast<double>(heads);
        }
    }
    return t.push(std::move(out), t.requires_grad(x), [x, heads, width](GradTape &t, const Matrix &g) {
        Matrix gx(g.rows(), heads * width);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t k = 0; k < heads; ++k) {
                for (std::size_t d = 0; d < width; ++d) {
                    gx(i, k * width + d) = g(i, d) / static_cast<double>(heads);
                }
            }
        }
        t.accumulate(x, gx);
    });
}

/// out[e, 0] = <a[e], b[e]>.
inline Var row_dot(GradTape &t, Var a, Var b) {
    const Matrix &av = t.value(a), &bv = t.value(b);
    av.require_same_shape(bv, "row_dot");
    Matrix out(av.rows(), 1);
    for (std::size_t e = 0; e < av.rows(); ++e) {
        double s = 0.0;
        for (std::size_t j = 0; j < av.cols(); ++j) {
            s += av(e, j) * bv(e, j);
        }
        out(e, 0) = s;
    }
    return t.push(std::move(out), t.any_requires_grad({a, b}), [a, b](GradTape &t, const Matrix &g) {
        const Matrix &av = t.value(a), &bv = t.value(b);
        if (Matrix *ga = t.grad_buffer(a)) {
            for (std::size_t e = 0; e < av.rows(); ++e) {
                for (std::size_t j = 0; j < av.cols(); ++j) {
                    (*ga)(e, j) += g(e, 0) * bv(e, j);
                }
            }
        }
        if (Matrix *gb = t.grad_buffer(b)) {
            for (std::size_t e = 0; e < av.rows(); ++e) {
                for (std::size_t j = 0; j < av.cols(); ++j) {
                    (*gb)(e, j) += g(e, 0) * av(e, j);
                }
            }
        }
    });
}

/// sum(a .* w) for a constant weight matrix w; 1x1 result.
inline Var weighted_sum(GradTape &t, Var a, Matrix w) {
    const Matrix &av = t.value(a);
    av.require_same_shape(w, "weighted_sum");
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        s += av[i] * w[i];
    }
    return t.push(Matrix(1, 1, s), t.requires_grad(a),
                  [a, w = std::move(w)](GradTape &t, const Matrix &g) {
                      Matrix ga = w;
                      for (auto &v : ga.data()) {
                          v *= g[0];
                      }
                      t.accumulate(a, ga);
                  });
}

} // namespace ops
} // namespace qgat
