// src/numerics/param_store.cpp

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

#include "dgu/numerics/param_store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "dgu/numerics/binary_io.hpp"

namespace dgu {

Matrix& ParamStore::add(const std::string& name, Matrix init) {
  if (contains(name)) throw InputError("duplicate parameter name: " + name);
  ParamEntry e;
  e.grad = Matrix::Zero(init.rows(), init.cols());
  e.adam_m = e.grad;
  e.adam_v = e.grad;
  e.value = std::move(init);
  return entries_.emplace(name, std::move(e)).first->second.value;
}

ParamEntry& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InputError("unknown parameter: " + name);
  return it->second;
}

const ParamEntry& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InputError("unknown parameter: " + name);
  return it->second;
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, e] : entries_) e.grad.setZero();
}

std::uint64_t ParamStore::value_hash() const {
  std::uint64_t h = fnv1a("");
  for (const auto& [name, e] : entries_) {
    h = fnv1a(name, h);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(e.value.data()),
                               static_cast<std::size_t>(e.value.size()) * sizeof(double)),
              h);
  }
  return h;
}

bool ParamStore::grads_finite() const {
  for (const auto& [_, e] : entries_)
    if (!e.grad.allFinite()) return false;
  return true;
}

void ParamStore::copy_values_from(const ParamStore& other) {
  for (auto& [name, e] : entries_) {
    const Matrix& src = other.value(name);
    if (src.rows() != e.value.rows() || src.cols() != e.value.cols())
      throw DimensionError("copy_values_from: " + name);
    e.value = src;
  }
}

void adam_step(ParamStore& store, const AdamOptions& opt) {
  const std::uint64_t t = store.step_count() + 1;
  store.set_step_count(t);
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
  for (auto& [_, e] : store.entries()) {
    e.adam_m = opt.beta1 * e.adam_m + (1.0 - opt.beta1) * e.grad;
    e.adam_v = opt.beta2 * e.adam_v + (1.0 - opt.beta2) * e.grad.cwiseProduct(e.grad);
    for (Index i = 0; i < e.value.size(); ++i) {
      const double mhat = e.adam_m.data()[i] / c1;
      const double vhat = e.adam_v.data()[i] / c2;
      e.value.data()[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
    e.grad.setZero();
  }
}

void save_named_matrices(const std::filesystem::path& path, const NamedMatrices& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  io::write_magic(out, "DGUW");
  io::write_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, m] : entries) {
    io::write_string(out, name);
    io::write_matrix(out, m);
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

NamedMatrices load_named_matrices(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  io::expect_header(in, "DGUW", path.string());
  const std::uint32_t n = io::read_u32(in);
  NamedMatrices out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = io::read_string(in);
    Matrix m = io::read_matrix(in);
    out.emplace_back(std::move(name), std::move(m));
  }
  return out;
}

void save_weights(const std::filesystem::path& path, const ParamStore& store) {
  NamedMatrices entries;
  for (const auto& [name, e] : store.entries()) entries.emplace_back(name, e.value);
  save_named_matrices(path, entries);
}

ParamStore load_weights(const std::filesystem::path& path) {
  ParamStore store;
  for (auto& [name, m] : load_named_matrices(path)) store.add(name, std::move(m));
  return store;
}

}  // namespace dgu
