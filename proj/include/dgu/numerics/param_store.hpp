// include/dgu/numerics/param_store.hpp

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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dgu/numerics/common.hpp"

namespace dgu {

struct ParamEntry {
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
};

/// Named trainable arrays with their gradients and Adam moments.
/// Iteration order is by name, which keeps updates and hashes deterministic.
class ParamStore {
 public:
  /// Registers a new entry; gradient and moments start at zero.
  Matrix& add(const std::string& name, Matrix init);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  ParamEntry& at(const std::string& name);
  const ParamEntry& at(const std::string& name) const;
  const Matrix& value(const std::string& name) const { return at(name).value; }

  const std::map<std::string, ParamEntry>& entries() const { return entries_; }
  std::map<std::string, ParamEntry>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t num_scalars() const;

  std::uint64_t step_count() const { return step_count_; }
  void set_step_count(std::uint64_t n) { step_count_ = n; }

  void zero_grad();
  /// Hash of names and value bits only.
  std::uint64_t value_hash() const;
  bool grads_finite() const;

  /// Copies values (not gradients or moments) from another store with the same layout.
  void copy_values_from(const ParamStore& other);

 private:
  std::map<std::string, ParamEntry> entries_;
  std::uint64_t step_count_ = 0;
};

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.5;
  double beta2 = 0.98;
  double eps = 1e-8;
};

/// Bias-corrected Adam update of every entry, then zeroes the gradients.
void adam_step(ParamStore& store, const AdamOptions& opt);

using NamedMatrices = std::vector<std::pair<std::string, Matrix>>;

/// "DGUW" container: little-endian, version u32, entry count u32, then per
/// entry name length u32, UTF-8 name, rows u32, cols u32, float32 data.
void save_named_matrices(const std::filesystem::path& path, const NamedMatrices& entries);
NamedMatrices load_named_matrices(const std::filesystem::path& path);

void save_weights(const std::filesystem::path& path, const ParamStore& store);
/// Loads values into a store, creating entries as needed.
ParamStore load_weights(const std::filesystem::path& path);

}  // namespace dgu
