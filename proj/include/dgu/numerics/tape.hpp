// include/dgu/numerics/tape.hpp

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

#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dgu/numerics/common.hpp"
#include "dgu/numerics/param_store.hpp"

namespace dgu {

class Tape;

/// Handle to a matrix-valued node recorded on a Tape.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;
  int id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Maps the gradient of a node's output to gradients of its parents, in
/// parent order. Rules are written with Var operations so that running them
/// while the tape records yields a differentiable graph of the gradient
/// itself (needed for penalties on input gradients).
using BackwardFn = std::function<std::vector<Var>(const Var& out, const Var& grad)>;

/// Append-only record of primitive operations. Node ids are assigned in
/// creation order, which is a topological order of the graph.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var leaf(Matrix value);
  /// Leaf bound to a store entry; repeated calls return the same node.
  Var param(ParamStore& store, const std::string& name);

  Var record(Matrix value, std::vector<Var> parents, BackwardFn backward);

  /// Reverse sweep from a scalar node. Returns d(out)/d(w) for each w. With
  /// create_graph the returned gradients are themselves differentiable nodes.
  std::vector<Var> grad(const Var& out, std::span<const Var> wrt, bool create_graph = false);

  /// Accumulates d(loss)/d(param) into store.grad for every entry of store
  /// bound on this tape.
  void backward(const Var& loss, ParamStore& store);

  std::size_t size() const { return nodes_.size(); }
  bool recording() const { return recording_; }

 private:
  friend class Var;
  struct Node {
    Matrix value;
    std::vector<int> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  bool recording_ = true;
  std::map<std::pair<const ParamStore*, std::string>, int> bound_;
};

// Differentiable counterparts of the eager kernels in ops.hpp.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add_rowvec(const Var& a, const Var& b);
Var sum_rows(const Var& a);
Var broadcast_rows(const Var& a, Index rows);
Var sum_cols(const Var& a);
Var broadcast_cols(const Var& a, Index cols);
Var sum(const Var& a);
Var expand(const Var& a, Index rows, Index cols);
Var unfold(const Var& x, int kernel);
Var fold(const Var& g, int kernel, Index channels);
Var conv1d(const Var& x, const Var& kernel, const Var& bias);
Var leaky_relu(const Var& a, double slope);
Var sigmoid(const Var& a);
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var reciprocal(const Var& a);
Var sqrt(const Var& a);
Var rsqrt(const Var& a);
Var clamp(const Var& a, double lo, double hi);
Var slice_rows(const Var& a, Index start, Index count);
Var pad_rows(const Var& a, Index start, Index total);
Var slice_cols(const Var& a, Index start, Index count);
Var pad_cols(const Var& a, Index start, Index total);
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(const Var& table, std::span<const int> ids);
Var scatter_rows(const Var& rows, std::span<const int> ids, Index table_rows);
Var l2_norm(const Var& a);
Var mean_rows(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, double c) { return scale(a, c); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

/// Clamped binary cross entropy of a 1×1 probability node.
Var bce(const Var& prediction, int target, double eps = 1e-7);

}  // namespace dgu
