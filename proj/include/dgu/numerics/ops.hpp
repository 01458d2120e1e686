// include/dgu/numerics/ops.hpp

// Copyright 2026  The dgu Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dgu/numerics/common.hpp"

// Eager dense kernels. The tape in tape.hpp computes every forward value
// through these same functions, so eager and recorded evaluation of one
// expression agree bit for bit.

namespace dgu {

inline constexpr double kBceEpsilon = 1e-7;

template <typename S>
Array2<S> add(const Array2<S>& a, const Array2<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("add: " + shape_str(a) + " vs " + shape_str(b));
  return a + b;
}

template <typename S>
Array2<S> sub(const Array2<S>& a, const Array2<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("sub: " + shape_str(a) + " vs " + shape_str(b));
  return a - b;
}

template <typename S>
Array2<S> mul(const Array2<S>& a, const Array2<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("mul: " + shape_str(a) + " vs " + shape_str(b));
  return a.cwiseProduct(b);
}

template <typename S>
Array2<S> scale(const Array2<S>& a, S c) {
  return a * c;
}

template <typename S>
Array2<S> add_scalar(const Array2<S>& a, S c) {
  return (a.array() + c).matrix();
}

template <typename S>
Array2<S> matmul(const Array2<S>& a, const Array2<S>& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: " + shape_str(a) + " x " + shape_str(b));
  Array2<S> out = a * b;
  return out;
}

template <typename S>
Array2<S> transpose(const Array2<S>& a) {
  return a.transpose();
}

/// a[L×C] + b[1×C] broadcast over rows.
template <typename S>
Array2<S> add_rowvec(const Array2<S>& a, const Array2<S>& b) {
  if (b.rows() != 1 || b.cols() != a.cols())
    throw DimensionError("add_rowvec: " + shape_str(a) + " + " + shape_str(b));
  Array2<S> out = a;
  out.rowwise() += b.row(0);
  return out;
}

/// Column sums: [L×C] -> [1×C].
template <typename S>
Array2<S> sum_rows(const Array2<S>& a) {
  return a.colwise().sum();
}

/// [1×C] -> [L×C].
template <typename S>
Array2<S> broadcast_rows(const Array2<S>& a, Index rows) {
  if (a.rows() != 1) throw DimensionError("broadcast_rows: " + shape_str(a));
  return a.replicate(rows, 1);
}

/// Row sums: [L×C] -> [L×1].
template <typename S>
Array2<S> sum_cols(const Array2<S>& a) {
  return a.rowwise().sum();
}

/// [L×1] -> [L×C].
template <typename S>
Array2<S> broadcast_cols(const Array2<S>& a, Index cols) {
  if (a.cols() != 1) throw DimensionError("broadcast_cols: " + shape_str(a));
  return a.replicate(1, cols);
}

template <typename S>
Array2<S> sum(const Array2<S>& a) {
  Array2<S> out(1, 1);
  out(0, 0) = a.sum();
  return out;
}

/// [1×1] -> [rows×cols].
template <typename S>
Array2<S> expand(const Array2<S>& a, Index rows, Index cols) {
  if (a.rows() != 1 || a.cols() != 1) throw DimensionError("expand: " + shape_str(a));
  return Array2<S>::Constant(rows, cols, a(0, 0));
}

/// Centered zero-padded windows: out(l, k*C + c) = x(l + k - (K-1)/2, c),
/// zero outside [0, L).
template <typename S>
Array2<S> unfold(const Array2<S>& x, int kernel) {
  if (kernel < 1 || kernel % 2 == 0)
    throw DimensionError("unfold: kernel width must be odd, got " + std::to_string(kernel));
  const Index L = x.rows(), C = x.cols();
  const Index half = (kernel - 1) / 2;
  Array2<S> out = Array2<S>::Zero(L, kernel * C);
  for (Index l = 0; l < L; ++l)
    for (int k = 0; k < kernel; ++k) {
      const Index src = l + k - half;
      if (src < 0 || src >= L) continue;
      out.block(l, k * C, 1, C) = x.row(src);
    }
  return out;
}

/// Adjoint of unfold: scatters window columns back onto their source rows.
template <typename S>
Array2<S> fold(const Array2<S>& g, int kernel, Index channels) {
  if (kernel < 1 || kernel % 2 == 0 || g.cols() != kernel * channels)
    throw DimensionError("fold: " + shape_str(g) + " with kernel " + std::to_string(kernel));
  const Index L = g.rows();
  const Index half = (kernel - 1) / 2;
  Array2<S> out = Array2<S>::Zero(L, channels);
  for (Index l = 0; l < L; ++l)
    for (int k = 0; k < kernel; ++k) {
      const Index dst = l + k - half;
      if (dst < 0 || dst >= L) continue;
      out.row(dst) += g.block(l, k * channels, 1, channels);
    }
  return out;
}

/// Non-causal 1-D convolution with centered zero padding.
/// kernel is [K·Cin × Cout] with row index k·Cin + c; bias is [1 × Cout].
template <typename S>
Array2<S> conv1d(const Array2<S>& x, const Array2<S>& kernel, const Array2<S>& bias) {
  const Index cin = x.cols();
  if (cin == 0 || kernel.rows() % cin != 0)
    throw DimensionError("conv1d: input " + shape_str(x) + " kernel " + shape_str(kernel));
  const int width = static_cast<int>(kernel.rows() / cin);
  return add_rowvec(matmul(unfold(x, width), kernel), bias);
}

template <typename S>
Array2<S> leaky_relu(const Array2<S>& a, S slope) {
  return a.unaryExpr([slope](S v) { return v > S(0) ? v : slope * v; });
}

template <typename S>
Array2<S> sigmoid(const Array2<S>& a) {
  return a.unaryExpr([](S v) {
    if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
    const S e = std::exp(v);
    return e / (S(1) + e);
  });
}

template <typename S>
Array2<S> softmax_rows(const Array2<S>& logits) {
  Array2<S> out(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const S mx = logits.row(r).maxCoeff();
    S total = 0;
    for (Index c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) - mx);
      total += out(r, c);
    }
    out.row(r) /= total;
  }
  return out;
}

template <typename S>
Array2<S> log_softmax_rows(const Array2<S>& logits) {
  Array2<S> out(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const S mx = logits.row(r).maxCoeff();
    S total = 0;
    for (Index c = 0; c < logits.cols(); ++c) total += std::exp(logits(r, c) - mx);
    const S lse = mx + std::log(total);
    for (Index c = 0; c < logits.cols(); ++c) out(r, c) = logits(r, c) - lse;
  }
  return out;
}

template <typename S>
Array2<S> exp(const Array2<S>& a) {
  return a.array().exp().matrix();
}

template <typename S>
Array2<S> log(const Array2<S>& a) {
  return a.array().log().matrix();
}

template <typename S>
Array2<S> reciprocal(const Array2<S>& a) {
  return a.array().inverse().matrix();
}

template <typename S>
Array2<S> sqrt(const Array2<S>& a) {
  return a.array().sqrt().matrix();
}

template <typename S>
Array2<S> rsqrt(const Array2<S>& a) {
  return a.array().rsqrt().matrix();
}

template <typename S>
Array2<S> clamp(const Array2<S>& a, S lo, S hi) {
  return a.cwiseMax(lo).cwiseMin(hi);
}

template <typename S>
Array2<S> slice_rows(const Array2<S>& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw DimensionError("slice_rows: " + shape_str(a));
  return a.middleRows(start, count);
}

template <typename S>
Array2<S> pad_rows(const Array2<S>& a, Index start, Index total) {
  if (start < 0 || start + a.rows() > total) throw DimensionError("pad_rows: " + shape_str(a));
  Array2<S> out = Array2<S>::Zero(total, a.cols());
  out.middleRows(start, a.rows()) = a;
  return out;
}

template <typename S>
Array2<S> slice_cols(const Array2<S>& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw DimensionError("slice_cols: " + shape_str(a));
  return a.middleCols(start, count);
}

template <typename S>
Array2<S> pad_cols(const Array2<S>& a, Index start, Index total) {
  if (start < 0 || start + a.cols() > total) throw DimensionError("pad_cols: " + shape_str(a));
  Array2<S> out = Array2<S>::Zero(a.rows(), total);
  out.middleCols(start, a.cols()) = a;
  return out;
}

template <typename S>
Array2<S> concat_cols(const std::vector<Array2<S>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != parts.front().rows()) throw DimensionError("concat_cols: row mismatch");
    cols += p.cols();
  }
  Array2<S> out(parts.front().rows(), cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p;
    at += p.cols();
  }
  return out;
}

template <typename S>
Array2<S> gather_rows(const Array2<S>& table, std::span<const int> ids) {
  Array2<S> out(static_cast<Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows())
      throw InputError("gather_rows: id " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(table.rows()));
    out.row(static_cast<Index>(i)) = table.row(ids[i]);
  }
  return out;
}

/// Adjoint of gather_rows.
template <typename S>
Array2<S> scatter_rows(const Array2<S>& rows, std::span<const int> ids, Index table_rows) {
  if (rows.rows() != static_cast<Index>(ids.size()))
    throw DimensionError("scatter_rows: " + shape_str(rows));
  Array2<S> out = Array2<S>::Zero(table_rows, rows.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(ids[i]) += rows.row(static_cast<Index>(i));
  return out;
}

/// Frobenius norm as a 1×1 matrix.
template <typename S>
Array2<S> l2_norm(const Array2<S>& a) {
  Array2<S> out(1, 1);
  out(0, 0) = a.norm();
  return out;
}

/// Mean over rows: [L×C] -> [1×C].
template <typename S>
Array2<S> mean_rows(const Array2<S>& a) {
  return scale(sum_rows(a), S(1) / static_cast<S>(a.rows()));
}

/// Binary cross entropy with the prediction clamped to [eps, 1 - eps].
template <typename S>
S bce(S prediction, int target, S eps = S(kBceEpsilon)) {
  const S p = std::clamp(prediction, eps, S(1) - eps);
  return target == 1 ? -std::log(p) : -std::log(S(1) - p);
}

}  // namespace dgu
