// include/dgu/numerics/binary_io.hpp

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
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "dgu/numerics/common.hpp"

// Little-endian primitives shared by every binary artifact. A matrix block is
// rows u32, cols u32, then rows*cols float32 values in row-major order.

namespace dgu::io {

inline constexpr std::uint32_t kFormatVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v);
std::uint32_t read_u32(std::istream& in);

void write_string(std::ostream& out, std::string_view s);
std::string read_string(std::istream& in);

void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);

void write_magic(std::ostream& out, std::string_view magic);
/// Reads and checks a 4-byte magic followed by the version word.
void expect_header(std::istream& in, std::string_view magic, std::string_view what);

}  // namespace dgu::io
