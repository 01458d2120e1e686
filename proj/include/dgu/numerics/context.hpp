// include/dgu/numerics/context.hpp

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

#include <map>
#include <string>

#include "dgu/numerics/ops.hpp"
#include "dgu/numerics/param_store.hpp"
#include "dgu/numerics/tape.hpp"

// Network forward passes are written once, as templates over a context that
// supplies parameters and constants either as plain matrices (inference) or
// as tape nodes (training).

namespace dgu {

class EagerContext {
 public:
  using Value = Matrix;

  explicit EagerContext(const ParamStore& store) : store_(store) {}

  const Matrix& param(const std::string& name) const { return store_.value(name); }
  Matrix constant(Matrix m) const { return m; }
  const Matrix& input(const Matrix& m) const { return m; }

 private:
  const ParamStore& store_;
};

class TapeContext {
 public:
  using Value = Var;

  /// With trainable = false the store's values enter the tape as constants
  /// and receive no gradient.
  TapeContext(Tape& tape, ParamStore& store, bool trainable)
      : tape_(tape), store_(store), trainable_(trainable) {}

  Var param(const std::string& name) {
    if (trainable_) return tape_.param(store_, name);
    auto it = frozen_.find(name);
    if (it != frozen_.end()) return it->second;
    Var v = tape_.constant(store_.value(name));
    frozen_.emplace(name, v);
    return v;
  }
  Var constant(Matrix m) { return tape_.constant(std::move(m)); }
  Var input(const Var& v) const { return v; }

  Tape& tape() { return tape_; }
  ParamStore& store() { return store_; }
  bool trainable() const { return trainable_; }

 private:
  Tape& tape_;
  ParamStore& store_;
  bool trainable_;
  std::map<std::string, Var> frozen_;
};

}  // namespace dgu
