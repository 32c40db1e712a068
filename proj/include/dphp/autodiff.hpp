// Copyright 2026 The dphp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// A small tape-based reverse-mode automatic differentiation engine over dense
// matrices. Nodes are appended in evaluation order and may only reference
// earlier nodes, so every tape is a DAG by construction. Backward() walks the
// tape once in reverse.

#ifndef DPHP_AUTODIFF_HPP_
#define DPHP_AUTODIFF_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dphp/error.hpp"
#include "dphp/featuremaps.hpp"
#include "dphp/hermite.hpp"

namespace dphp::ad {

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Leaf(Matrix value, bool requires_grad = true) {
    return Push(std::move(value), {}, nullptr, requires_grad);
  }

  Var Constant(Matrix value) { return Leaf(std::move(value), false); }

  // Appends an interior node. `inputs` must already be on this tape.
  Var Push(Matrix value, std::vector<int> inputs, BackwardFn backward,
           bool requires_grad = false) {
    const int id = static_cast<int>(nodes_.size());
    for (int in : inputs) {
      if (in < 0 || in >= id) {
        Fail(ErrorCode::kInvalidArgument,
             "tape node may only depend on earlier nodes");
      }
      requires_grad = requires_grad || nodes_[static_cast<size_t>(in)].requires_grad;
    }
    Node node;
    node.value = std::move(value);
    node.inputs = std::move(inputs);
    node.backward = std::move(backward);
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return Var{this, id};
  }

  const Matrix& value(Var v) const { return node(v).value; }
  const Matrix& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }

  // Gradient accumulated by the last Backward(); zero-sized if unreached.
  const Matrix& grad(Var v) const { return node(v).grad; }

  // Adds `g` into the gradient slot of node `id`.
  void Accumulate(int id, const Matrix& g) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  void Accumulate(int id, Matrix&& g) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = std::move(g);
    } else {
      n.grad += g;
    }
  }

  bool RequiresGrad(int id) const {
    return nodes_[static_cast<size_t>(id)].requires_grad;
  }

  const Matrix& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }

  void Backward(Var loss) {
    CheckOwned(loss);
    const Matrix& v = value(loss);
    Require(v.rows() == 1 && v.cols() == 1, "backward needs a scalar loss");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[static_cast<size_t>(loss.id)].grad = Matrix::Ones(1, 1);
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<size_t>(id)];
      if (n.grad.size() == 0 || !n.backward) continue;
      n.backward(*this, id);
    }
  }

  size_t size() const { return nodes_.size(); }

  void CheckOwned(Var v) const {
    if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
      Fail(ErrorCode::kInvalidArgument, "variable does not belong to this tape");
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<int> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  const Node& node(Var v) const {
    CheckOwned(v);
    return nodes_[static_cast<size_t>(v.id)];
  }

  std::vector<Node> nodes_;
};

namespace internal {

inline Tape& SameTape(std::initializer_list<Var> vars) {
  Tape* tape = vars.begin()->tape;
  Require(tape != nullptr, "uninitialised variable");
  for (Var v : vars) tape->CheckOwned(v);
  return *tape;
}

inline void CheckShape(bool ok, const std::string& what) {
  if (!ok) Fail(ErrorCode::kInvalidArgument, "shape mismatch in " + what);
}

}  // namespace internal

// x (n x in) * w (in x out) + b (1 x out), bias broadcast over rows.
inline Var Affine(Var x, Var w, Var b) {
  Tape& t = internal::SameTape({x, w, b});
  const Matrix& xv = t.value(x);
  const Matrix& wv = t.value(w);
  const Matrix& bv = t.value(b);
  internal::CheckShape(xv.cols() == wv.rows() && bv.rows() == 1 &&
                           bv.cols() == wv.cols(),
                       "affine");
  Matrix out = xv * wv;
  out.rowwise() += bv.row(0);
  const int xi = x.id, wi = w.id, bi = b.id;
  return t.Push(std::move(out), {xi, wi, bi}, [xi, wi, bi](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.RequiresGrad(xi)) tp.Accumulate(xi, g * tp.value(wi).transpose());
    if (tp.RequiresGrad(wi)) tp.Accumulate(wi, tp.value(xi).transpose() * g);
    if (tp.RequiresGrad(bi)) tp.Accumulate(bi, g.colwise().sum());
  });
}

// Subgradient at zero is taken as 0.
inline Var Relu(Var x) {
  Tape& t = internal::SameTape({x});
  Matrix out = t.value(x).cwiseMax(0.0);
  const int xi = x.id;
  return t.Push(std::move(out), {xi}, [xi](Tape& tp, int self) {
    const Matrix mask = (tp.value(xi).array() > 0.0).cast<double>().matrix();
    tp.Accumulate(xi, tp.grad(self).cwiseProduct(mask));
  });
}

inline Var Tanh(Var x) {
  Tape& t = internal::SameTape({x});
  Matrix out = t.value(x).array().tanh().matrix();
  const int xi = x.id;
  return t.Push(std::move(out), {xi}, [xi](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    tp.Accumulate(xi, tp.grad(self).cwiseProduct(
                          (1.0 - y.array().square()).matrix()));
  });
}

inline Var Sigmoid(Var x) {
  Tape& t = internal::SameTape({x});
  Matrix out = (1.0 / (1.0 + (-t.value(x).array()).exp())).matrix();
  const int xi = x.id;
  return t.Push(std::move(out), {xi}, [xi](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    tp.Accumulate(xi, tp.grad(self).cwiseProduct(
                          (y.array() * (1.0 - y.array())).matrix()));
  });
}

// Row-wise softmax.
inline Var Softmax(Var x) {
  Tape& t = internal::SameTape({x});
  const Matrix& xv = t.value(x);
  Matrix out(xv.rows(), xv.cols());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) {
    const double mx = xv.row(i).maxCoeff();
    out.row(i) = (xv.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  const int xi = x.id;
  return t.Push(std::move(out), {xi}, [xi](Tape& tp, int self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.grad(self);
    Matrix gx(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double dot = g.row(i).dot(y.row(i));
      gx.row(i) = y.row(i).cwiseProduct(
          (g.row(i).array() - dot).matrix());
    }
    tp.Accumulate(xi, gx);
  });
}

// Columns [begin, begin + width).
inline Var SliceCols(Var x, Eigen::Index begin, Eigen::Index width) {
  Tape& t = internal::SameTape({x});
  const Matrix& xv = t.value(x);
  internal::CheckShape(begin >= 0 && width >= 0 && begin + width <= xv.cols(),
                       "slice");
  Matrix out = xv.middleCols(begin, width);
  const int xi = x.id;
  return t.Push(std::move(out), {xi}, [xi, begin, width](Tape& tp, int self) {
    Matrix g = Matrix::Zero(tp.value(xi).rows(), tp.value(xi).cols());
    g.middleCols(begin, width) = tp.grad(self);
    tp.Accumulate(xi, g);
  });
}

inline Var ConcatCols(std::span<const Var> parts) {
  Require(!parts.empty(), "concat needs at least one input");
  Tape& t = *parts.front().tape;
  Eigen::Index rows = -1, cols = 0;
  std::vector<int> ids;
  for (Var v : parts) {
    t.CheckOwned(v);
    const Matrix& pv = t.value(v);
    if (rows < 0) rows = pv.rows();
    internal::CheckShape(pv.rows() == rows, "concat");
    cols += pv.cols();
    ids.push_back(v.id);
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var v : parts) {
    const Matrix& pv = t.value(v);
    out.middleCols(at, pv.cols()) = pv;
    at += pv.cols();
  }
  return t.Push(std::move(out), ids, [ids](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Eigen::Index off = 0;
    for (int id : ids) {
      const Eigen::Index w = tp.value(id).cols();
      if (tp.RequiresGrad(id)) tp.Accumulate(id, g.middleCols(off, w));
      off += w;
    }
  });
}

inline Var ConcatCols(std::initializer_list<Var> parts) {
  return ConcatCols(std::span<const Var>(parts.begin(), parts.size()));
}

inline Var Scale(Var x, double factor) {
  Tape& t = internal::SameTape({x});
  Matrix out = factor * t.value(x);
  const int xi = x.id;
  return t.Push(std::move(out), {xi}, [xi, factor](Tape& tp, int self) {
    tp.Accumulate(xi, factor * tp.grad(self));
  });
}

inline Var Add(Var a, Var b) {
  Tape& t = internal::SameTape({a, b});
  internal::CheckShape(t.value(a).rows() == t.value(b).rows() &&
                           t.value(a).cols() == t.value(b).cols(),
                       "add");
  Matrix out = t.value(a) + t.value(b);
  const int ai = a.id, bi = b.id;
  return t.Push(std::move(out), {ai, bi}, [ai, bi](Tape& tp, int self) {
    tp.Accumulate(ai, tp.grad(self));
    tp.Accumulate(bi, tp.grad(self));
  });
}

// Per-coordinate Hermite features of (x - offset) * in_scale: input n x D,
// output n x D(C+1) with the block for coordinate d at columns
// [d(C+1), (d+1)(C+1)), each multiplied by `out_scale`. Local Jacobians come
// from the differentiated recursion.
inline Var HermiteFeatureLayer(Var x, const HermiteBasis& basis,
                               double offset = 0.0, double in_scale = 1.0,
                               double out_scale = 1.0) {
  Tape& t = internal::SameTape({x});
  const Matrix& xv = t.value(x);
  const Eigen::Index n = xv.rows(), dims = xv.cols();
  const int width = basis.size();
  Matrix out(n, dims * width);
  Matrix dphi(n, dims * width);
  Vector val(width), der(width);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index d = 0; d < dims; ++d) {
      HpFeaturesWithGradInto((xv(i, d) - offset) * in_scale, basis, val, der);
      out.row(i).segment(d * width, width) = out_scale * val.transpose();
      dphi.row(i).segment(d * width, width) =
          (out_scale * in_scale) * der.transpose();
    }
  }
  const int xi = x.id;
  return t.Push(std::move(out), {xi},
                [xi, dphi = std::move(dphi), dims, width](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  Matrix gx(g.rows(), dims);
                  for (Eigen::Index i = 0; i < g.rows(); ++i) {
                    for (Eigen::Index d = 0; d < dims; ++d) {
                      gx(i, d) = g.row(i)
                                     .segment(d * width, width)
                                     .dot(dphi.row(i).segment(d * width, width));
                    }
                  }
                  tp.Accumulate(xi, gx);
                });
}

inline Var SumMapLayer(Var x, const SumMapSpec& spec) {
  Validate(spec);
  Require(spec.bases.size() == 1,
          "sum map layer supports a shared basis only");
  internal::CheckShape(x.tape->value(x).cols() == spec.input_dim, "sum map");
  return HermiteFeatureLayer(
      x, spec.bases.front(), spec.offset, spec.scale,
      1.0 / std::sqrt(static_cast<double>(spec.input_dim)));
}

namespace internal {

// Row-wise Kronecker product of the column blocks in `blocks`, first block
// slowest. Every block has n rows; the result has n rows.
inline Matrix RowKron(const std::vector<Matrix>& blocks, Eigen::Index n) {
  Matrix cur = Matrix::Ones(n, 1);
  for (const Matrix& f : blocks) {
    Matrix next(n, cur.cols() * f.cols());
    for (Eigen::Index c = 0; c < cur.cols(); ++c) {
      for (Eigen::Index a = 0; a < f.cols(); ++a) {
        next.col(c * f.cols() + a) = cur.col(c).cwiseProduct(f.col(a));
      }
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace internal

// Tensor product of the selected coordinates' features, one sample per row.
inline Var ProductMapLayer(Var x, const ProductMapSpec& spec) {
  Validate(spec);
  Tape& t = internal::SameTape({x});
  const Matrix& xv = t.value(x);
  internal::CheckShape(xv.cols() == spec.input_dim, "product map");
  const Eigen::Index n = xv.rows();
  const int width = spec.basis.size();
  const int k = static_cast<int>(spec.dims.size());
  // Per selected coordinate: n x width features and derivatives.
  std::vector<Matrix> phi(static_cast<size_t>(k), Matrix(n, width));
  std::vector<Matrix> dphi(static_cast<size_t>(k), Matrix(n, width));
  Vector val(width), der(width);
  for (int j = 0; j < k; ++j) {
    const int d = spec.dims[static_cast<size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) {
      HpFeaturesWithGradInto((xv(i, d) - spec.offset) * spec.scale, spec.basis,
                             val, der);
      phi[static_cast<size_t>(j)].row(i) = val.transpose();
      dphi[static_cast<size_t>(j)].row(i) = spec.scale * der.transpose();
    }
  }
  Matrix out = internal::RowKron(phi, n);
  const int xi = x.id;
  auto backward = [xi, phi = std::move(phi), dphi = std::move(dphi), width, k,
                   dims = spec.dims](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    const Eigen::Index n = g.rows();
    Matrix gx = Matrix::Zero(n, tp.value(xi).cols());
    for (int j = 0; j < k; ++j) {
      // Flat index = (p * width + a) * post + q; contract over p and q.
      std::vector<Matrix> before(phi.begin(), phi.begin() + j);
      std::vector<Matrix> after(phi.begin() + j + 1, phi.end());
      const Matrix left = internal::RowKron(before, n);
      const Matrix right = internal::RowKron(after, n);
      const Eigen::Index post = right.cols();
      Matrix gphi = Matrix::Zero(n, width);
      Vector acc(n);
      for (Eigen::Index p = 0; p < left.cols(); ++p) {
        for (int a = 0; a < width; ++a) {
          const Eigen::Index base = (p * width + a) * post;
          acc.setZero();
          for (Eigen::Index q = 0; q < post; ++q) {
            acc.array() += g.col(base + q).array() * right.col(q).array();
          }
          gphi.col(a).array() += acc.array() * left.col(p).array();
        }
      }
      const Matrix& dj = dphi[static_cast<size_t>(j)];
      for (int a = 0; a < width; ++a) {
        gx.col(dims[static_cast<size_t>(j)]).array() +=
            gphi.col(a).array() * dj.col(a).array();
      }
    }
    tp.Accumulate(xi, std::move(gx));
  };
  return t.Push(std::move(out), {xi}, std::move(backward));
}

inline Var RffMapLayer(Var x, const RffMapSpec& spec) {
  Validate(spec);
  Tape& t = internal::SameTape({x});
  const Matrix& xv = t.value(x);
  internal::CheckShape(xv.cols() == spec.input_dim, "Fourier map");
  const Eigen::Index half = spec.num_features / 2;
  const double s = std::sqrt(2.0 / spec.num_features);
  const Matrix proj = xv * spec.omega.transpose();
  Matrix out(xv.rows(), spec.num_features);
  out.leftCols(half) = s * proj.array().cos().matrix();
  out.rightCols(half) = s * proj.array().sin().matrix();
  const int xi = x.id;
  return t.Push(std::move(out), {xi},
                [xi, half, omega = spec.omega](Tape& tp, int self) {
                  const Matrix& y = tp.value(self);
                  const Matrix& g = tp.grad(self);
                  // d cos = -sin, d sin = cos; y already carries the scale.
                  const Matrix gproj =
                      (-g.leftCols(half).array() * y.rightCols(half).array() +
                       g.rightCols(half).array() * y.leftCols(half).array())
                          .matrix();
                  tp.Accumulate(xi, gproj * omega);
                });
}

// Returns the product block, then the sum block, as separate variables.
inline std::pair<Var, Var> CombinedMapLayer(Var x, const CombinedMapSpec& spec) {
  return {ProductMapLayer(x, spec.product), SumMapLayer(x, spec.sum)};
}

// Labeled mean embedding (1/n) sum_i h_i onehot(y_i)^T of a feature batch
// (n x F) as an F x K matrix.
inline Var EmbedByLabel(Var features, std::span<const int> labels,
                        int num_classes) {
  Tape& t = internal::SameTape({features});
  const Matrix& fv = t.value(features);
  internal::CheckShape(static_cast<Eigen::Index>(labels.size()) == fv.rows(),
                       "embed by label");
  Require(fv.rows() > 0, "cannot embed an empty batch");
  std::vector<int> ys(labels.begin(), labels.end());
  for (int y : ys) Require(y >= 0 && y < num_classes, "label out of range");
  // Scaled one-hot rows turn both directions into dense products.
  Matrix onehot = Matrix::Zero(fv.rows(), num_classes);
  const double inv_n = 1.0 / static_cast<double>(fv.rows());
  for (size_t i = 0; i < ys.size(); ++i) {
    onehot(static_cast<Eigen::Index>(i), ys[i]) = inv_n;
  }
  Matrix out = fv.transpose() * onehot;
  const int fi = features.id;
  return t.Push(std::move(out), {fi},
                [fi, onehot = std::move(onehot)](Tape& tp, int self) {
                  Matrix gf = onehot * tp.grad(self).transpose();
                  tp.Accumulate(fi, std::move(gf));
                });
}

// ||x - target||_F^2 as a 1 x 1 value.
inline Var FrobeniusLoss(Var x, const Matrix& target) {
  Tape& t = internal::SameTape({x});
  const Matrix& xv = t.value(x);
  internal::CheckShape(xv.rows() == target.rows() && xv.cols() == target.cols(),
                       "frobenius loss");
  Matrix diff = xv - target;
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm();
  const int xi = x.id;
  return t.Push(std::move(out), {xi},
                [xi, diff = std::move(diff)](Tape& tp, int self) {
                  tp.Accumulate(xi, 2.0 * tp.grad(self)(0, 0) * diff);
                });
}

}  // namespace dphp::ad

#endif  // DPHP_AUTODIFF_HPP_
