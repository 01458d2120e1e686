// include/dgu/numerics/common.hpp

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
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dgu {

/// Dense row-major matrix. Every sequence-shaped quantity in the library
/// (frames, segments, phoneme distributions, activations) is one of these,
/// with one row per time step.
template <typename Scalar>
using Array2 = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = Array2<double>;
using RowVector = RowVec<double>;
using Index = Eigen::Index;

using FeatureMatrix = Matrix;
/// Rows on the V-simplex.
using PhonemeDistSeq = Matrix;
using PhonemeIds = std::vector<int>;

using Rng = std::mt19937_64;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};
struct ProvisioningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string shape_str(Index rows, Index cols);

template <typename Derived>
std::string shape_str(const Eigen::MatrixBase<Derived>& m) {
  return shape_str(m.rows(), m.cols());
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Derives an independent stream from a base seed and a label, so that
/// per-utterance and per-purpose streams do not depend on processing order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
Rng make_rng(std::uint64_t seed, std::string_view label);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL);

Matrix standard_normal(Index rows, Index cols, Rng& rng);

}  // namespace dgu
