// src/numerics/tape.cpp

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

#include "dgu/numerics/tape.hpp"

#include "dgu/numerics/ops.hpp"

namespace dgu {

namespace {

class RecordingScope {
 public:
  RecordingScope(bool& flag, bool value) : flag_(flag), saved_(flag) { flag_ = value; }
  ~RecordingScope() { flag_ = saved_; }
  RecordingScope(const RecordingScope&) = delete;
  RecordingScope& operator=(const RecordingScope&) = delete;

 private:
  bool& flag_;
  bool saved_;
};

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw ContractError("operation on an empty Var");
  return a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  if (&tape_of(b) != &t) throw ContractError("operands recorded on different tapes");
  return t;
}

}  // namespace

const Matrix& Var::value() const {
  if (!valid()) throw ContractError("value() on an empty Var");
  return tape_->nodes_[static_cast<std::size_t>(id_)].value;
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ContractError("scalar() on " + shape_str(v));
  return v(0, 0);
}

bool Var::requires_grad() const {
  return valid() && tape_->nodes_[static_cast<std::size_t>(id_)].requires_grad;
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::param(ParamStore& store, const std::string& name) {
  const auto key = std::make_pair(static_cast<const ParamStore*>(&store), name);
  if (auto it = bound_.find(key); it != bound_.end()) return Var(this, it->second);
  Var v = leaf(store.value(name));
  bound_.emplace(key, v.id());
  return v;
}

Var Tape::record(Matrix value, std::vector<Var> parents, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  if (recording_) {
    for (const Var& p : parents)
      if (p.requires_grad()) n.requires_grad = true;
    if (n.requires_grad) {
      n.parents.reserve(parents.size());
      for (const Var& p : parents) n.parents.push_back(p.id());
      n.backward = std::move(backward);
    }
  }
  return push(std::move(n));
}

std::vector<Var> Tape::grad(const Var& out, std::span<const Var> wrt, bool create_graph) {
  if (!out.valid() || &out.tape() != this) throw ContractError("grad: output not on this tape");
  if (out.rows() != 1 || out.cols() != 1)
    throw ContractError("grad: output must be scalar, got " + shape_str(out.value()));

  const auto n = static_cast<std::size_t>(out.id()) + 1;
  std::vector<char> is_wrt(n, 0);
  for (const Var& w : wrt) {
    if (&w.tape() != this) throw ContractError("grad: wrt node not on this tape");
    if (static_cast<std::size_t>(w.id()) < n) is_wrt[static_cast<std::size_t>(w.id())] = 1;
  }
  // A node matters only if some wrt node feeds it.
  std::vector<char> relevant(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_wrt[i]) {
      relevant[i] = 1;
      continue;
    }
    const Node& node = nodes_[i];
    if (!node.requires_grad) continue;
    for (int p : node.parents)
      if (relevant[static_cast<std::size_t>(p)]) {
        relevant[i] = 1;
        break;
      }
  }

  std::vector<Var> grads(n);
  {
    RecordingScope scope(recording_, create_graph);
    grads[n - 1] = constant(Matrix::Ones(1, 1));
    for (std::size_t i = n; i-- > 0;) {
      if (!relevant[i] || !grads[i].valid()) continue;
      const Node& node = nodes_[i];
      if (!node.backward) continue;
      const std::vector<Var> pg = node.backward(Var(this, static_cast<int>(i)), grads[i]);
      for (std::size_t k = 0; k < node.parents.size(); ++k) {
        const auto p = static_cast<std::size_t>(node.parents[k]);
        if (!relevant[p] || k >= pg.size() || !pg[k].valid()) continue;
        grads[p] = grads[p].valid() ? add(grads[p], pg[k]) : pg[k];
      }
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    const auto id = static_cast<std::size_t>(w.id());
    if (id < n && grads[id].valid())
      result.push_back(grads[id]);
    else
      result.push_back(constant(Matrix::Zero(w.rows(), w.cols())));
  }
  return result;
}

void Tape::backward(const Var& loss, ParamStore& store) {
  std::vector<std::string> names;
  std::vector<Var> wrt;
  for (const auto& [key, id] : bound_) {
    if (key.first != &store) continue;
    names.push_back(key.second);
    wrt.push_back(Var(this, id));
  }
  const std::vector<Var> grads = grad(loss, wrt, false);
  for (std::size_t i = 0; i < names.size(); ++i) store.at(names[i]).grad += grads[i].value();
}

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  return t.record(dgu::add(a.value(), b.value()), {a, b},
                  [](const Var&, const Var& g) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  return t.record(dgu::sub(a.value(), b.value()), {a, b},
                  [](const Var&, const Var& g) { return std::vector<Var>{g, scale(g, -1.0)}; });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  return t.record(dgu::mul(a.value(), b.value()), {a, b}, [a, b](const Var&, const Var& g) {
    return std::vector<Var>{mul(g, b), mul(g, a)};
  });
}

Var scale(const Var& a, double c) {
  return tape_of(a).record(dgu::scale(a.value(), c), {a}, [c](const Var&, const Var& g) {
    return std::vector<Var>{scale(g, c)};
  });
}

Var add_scalar(const Var& a, double c) {
  return tape_of(a).record(dgu::add_scalar(a.value(), c), {a},
                           [](const Var&, const Var& g) { return std::vector<Var>{g}; });
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  return t.record(dgu::matmul(a.value(), b.value()), {a, b}, [a, b](const Var&, const Var& g) {
    return std::vector<Var>{matmul(g, transpose(b)), matmul(transpose(a), g)};
  });
}

Var transpose(const Var& a) {
  return tape_of(a).record(dgu::transpose(a.value()), {a}, [](const Var&, const Var& g) {
    return std::vector<Var>{transpose(g)};
  });
}

Var add_rowvec(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  return t.record(dgu::add_rowvec(a.value(), b.value()), {a, b}, [](const Var&, const Var& g) {
    return std::vector<Var>{g, sum_rows(g)};
  });
}

Var sum_rows(const Var& a) {
  const Index rows = a.rows();
  return tape_of(a).record(dgu::sum_rows(a.value()), {a}, [rows](const Var&, const Var& g) {
    return std::vector<Var>{broadcast_rows(g, rows)};
  });
}

Var broadcast_rows(const Var& a, Index rows) {
  return tape_of(a).record(dgu::broadcast_rows(a.value(), rows), {a},
                           [](const Var&, const Var& g) { return std::vector<Var>{sum_rows(g)}; });
}

Var sum_cols(const Var& a) {
  const Index cols = a.cols();
  return tape_of(a).record(dgu::sum_cols(a.value()), {a}, [cols](const Var&, const Var& g) {
    return std::vector<Var>{broadcast_cols(g, cols)};
  });
}

Var broadcast_cols(const Var& a, Index cols) {
  return tape_of(a).record(dgu::broadcast_cols(a.value(), cols), {a},
                           [](const Var&, const Var& g) { return std::vector<Var>{sum_cols(g)}; });
}

Var sum(const Var& a) {
  const Index rows = a.rows(), cols = a.cols();
  return tape_of(a).record(dgu::sum(a.value()), {a}, [rows, cols](const Var&, const Var& g) {
    return std::vector<Var>{expand(g, rows, cols)};
  });
}

Var expand(const Var& a, Index rows, Index cols) {
  return tape_of(a).record(dgu::expand(a.value(), rows, cols), {a},
                           [](const Var&, const Var& g) { return std::vector<Var>{sum(g)}; });
}

Var unfold(const Var& x, int kernel) {
  const Index channels = x.cols();
  return tape_of(x).record(dgu::unfold(x.value(), kernel), {x},
                           [kernel, channels](const Var&, const Var& g) {
                             return std::vector<Var>{fold(g, kernel, channels)};
                           });
}

Var fold(const Var& g, int kernel, Index channels) {
  return tape_of(g).record(dgu::fold(g.value(), kernel, channels), {g},
                           [kernel](const Var&, const Var& gg) {
                             return std::vector<Var>{unfold(gg, kernel)};
                           });
}

Var conv1d(const Var& x, const Var& kernel, const Var& bias) {
  const Index cin = x.cols();
  if (cin == 0 || kernel.rows() % cin != 0)
    throw DimensionError("conv1d: input " + shape_str(x.value()) + " kernel " +
                         shape_str(kernel.value()));
  const int width = static_cast<int>(kernel.rows() / cin);
  return add_rowvec(matmul(unfold(x, width), kernel), bias);
}

Var leaky_relu(const Var& a, double slope) {
  Tape& t = tape_of(a);
  Matrix mask = a.value().unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
  return t.record(dgu::leaky_relu(a.value(), slope), {a},
                  [mask = std::move(mask)](const Var& out, const Var& g) {
                    return std::vector<Var>{mul(g, out.tape().constant(mask))};
                  });
}

Var sigmoid(const Var& a) {
  return tape_of(a).record(dgu::sigmoid(a.value()), {a}, [](const Var& out, const Var& g) {
    return std::vector<Var>{mul(g, mul(out, add_scalar(scale(out, -1.0), 1.0)))};
  });
}

Var softmax_rows(const Var& a) {
  const Index cols = a.cols();
  return tape_of(a).record(dgu::softmax_rows(a.value()), {a}, [cols](const Var& s, const Var& g) {
    return std::vector<Var>{mul(s, sub(g, broadcast_cols(sum_cols(mul(g, s)), cols)))};
  });
}

Var log_softmax_rows(const Var& a) {
  const Index cols = a.cols();
  return tape_of(a).record(dgu::log_softmax_rows(a.value()), {a},
                           [cols](const Var& out, const Var& g) {
                             return std::vector<Var>{
                                 sub(g, mul(exp(out), broadcast_cols(sum_cols(g), cols)))};
                           });
}

Var exp(const Var& a) {
  return tape_of(a).record(dgu::exp(a.value()), {a}, [](const Var& out, const Var& g) {
    return std::vector<Var>{mul(g, out)};
  });
}

Var log(const Var& a) {
  return tape_of(a).record(dgu::log(a.value()), {a}, [a](const Var&, const Var& g) {
    return std::vector<Var>{mul(g, reciprocal(a))};
  });
}

Var reciprocal(const Var& a) {
  return tape_of(a).record(dgu::reciprocal(a.value()), {a}, [](const Var& out, const Var& g) {
    return std::vector<Var>{scale(mul(g, mul(out, out)), -1.0)};
  });
}

Var sqrt(const Var& a) {
  return tape_of(a).record(dgu::sqrt(a.value()), {a}, [](const Var& out, const Var& g) {
    return std::vector<Var>{mul(g, scale(reciprocal(out), 0.5))};
  });
}

Var rsqrt(const Var& a) {
  return tape_of(a).record(dgu::rsqrt(a.value()), {a}, [](const Var& out, const Var& g) {
    return std::vector<Var>{mul(g, scale(mul(out, mul(out, out)), -0.5))};
  });
}

Var clamp(const Var& a, double lo, double hi) {
  Tape& t = tape_of(a);
  Matrix mask = a.value().unaryExpr([lo, hi](double v) { return v >= lo && v <= hi ? 1.0 : 0.0; });
  return t.record(dgu::clamp(a.value(), lo, hi), {a},
                  [mask = std::move(mask)](const Var& out, const Var& g) {
                    return std::vector<Var>{mul(g, out.tape().constant(mask))};
                  });
}

Var slice_rows(const Var& a, Index start, Index count) {
  const Index total = a.rows();
  return tape_of(a).record(dgu::slice_rows(a.value(), start, count), {a},
                           [start, total](const Var&, const Var& g) {
                             return std::vector<Var>{pad_rows(g, start, total)};
                           });
}

Var pad_rows(const Var& a, Index start, Index total) {
  const Index count = a.rows();
  return tape_of(a).record(dgu::pad_rows(a.value(), start, total), {a},
                           [start, count](const Var&, const Var& g) {
                             return std::vector<Var>{slice_rows(g, start, count)};
                           });
}

Var slice_cols(const Var& a, Index start, Index count) {
  const Index total = a.cols();
  return tape_of(a).record(dgu::slice_cols(a.value(), start, count), {a},
                           [start, total](const Var&, const Var& g) {
                             return std::vector<Var>{pad_cols(g, start, total)};
                           });
}

Var pad_cols(const Var& a, Index start, Index total) {
  const Index count = a.cols();
  return tape_of(a).record(dgu::pad_cols(a.value(), start, total), {a},
                           [start, count](const Var&, const Var& g) {
                             return std::vector<Var>{slice_cols(g, start, count)};
                           });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Tape& t = tape_of(parts.front());
  std::vector<Matrix> values;
  std::vector<Index> offsets;
  Index at = 0;
  for (const Var& p : parts) {
    tape_of(p, parts.front());
    values.push_back(p.value());
    offsets.push_back(at);
    at += p.cols();
  }
  std::vector<Index> widths;
  for (const Var& p : parts) widths.push_back(p.cols());
  return t.record(dgu::concat_cols(values), parts,
                  [offsets, widths](const Var&, const Var& g) {
                    std::vector<Var> out;
                    for (std::size_t i = 0; i < offsets.size(); ++i)
                      out.push_back(slice_cols(g, offsets[i], widths[i]));
                    return out;
                  });
}

Var gather_rows(const Var& table, std::span<const int> ids) {
  std::vector<int> idv(ids.begin(), ids.end());
  const Index table_rows = table.rows();
  return tape_of(table).record(dgu::gather_rows(table.value(), ids), {table},
                               [idv, table_rows](const Var&, const Var& g) {
                                 return std::vector<Var>{scatter_rows(g, idv, table_rows)};
                               });
}

Var scatter_rows(const Var& rows, std::span<const int> ids, Index table_rows) {
  std::vector<int> idv(ids.begin(), ids.end());
  return tape_of(rows).record(dgu::scatter_rows(rows.value(), ids, table_rows), {rows},
                              [idv](const Var&, const Var& g) {
                                return std::vector<Var>{gather_rows(g, idv)};
                              });
}

Var l2_norm(const Var& a) {
  const Index rows = a.rows(), cols = a.cols();
  return tape_of(a).record(dgu::l2_norm(a.value()), {a},
                           [a, rows, cols](const Var& out, const Var& g) {
                             // Subgradient 0 at the origin.
                             if (out.scalar() == 0.0)
                               return std::vector<Var>{out.tape().constant(Matrix::Zero(rows, cols))};
                             return std::vector<Var>{
                                 mul(a, expand(mul(g, reciprocal(out)), rows, cols))};
                           });
}

Var mean_rows(const Var& a) { return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows())); }

Var bce(const Var& prediction, int target, double eps) {
  if (prediction.rows() != 1 || prediction.cols() != 1)
    throw DimensionError("bce: prediction must be 1x1, got " + shape_str(prediction.value()));
  const Var p = clamp(prediction, eps, 1.0 - eps);
  if (target == 1) return scale(log(p), -1.0);
  return scale(log(add_scalar(scale(p, -1.0), 1.0)), -1.0);
}

}  // namespace dgu
