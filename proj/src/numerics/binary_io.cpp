// src/numerics/binary_io.cpp

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

#include "dgu/numerics/binary_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <vector>

namespace dgu::io {

static_assert(std::endian::native == std::endian::little,
              "binary artifacts assume a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("truncated u32");
  return v;
}

void write_string(std::ostream& out, std::string_view s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  if (n > (1u << 24)) throw FormatError("string length " + std::to_string(n) + " is implausible");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw FormatError("truncated string");
  return s;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  std::vector<float> buf(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.size(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

Matrix read_matrix(std::istream& in) {
  const std::uint32_t rows = read_u32(in);
  const std::uint32_t cols = read_u32(in);
  const std::uint64_t n = std::uint64_t{rows} * cols;
  if (n > (1ull << 28)) throw FormatError("matrix " + shape_str(rows, cols) + " is implausible");
  std::vector<float> buf(n);
  if (n > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float))))
    throw FormatError("truncated matrix data");
  Matrix m(rows, cols);
  for (std::uint64_t i = 0; i < n; ++i) m.data()[i] = buf[i];
  return m;
}

void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
  write_u32(out, kFormatVersion);
}

void expect_header(std::istream& in, std::string_view magic, std::string_view what) {
  std::array<char, 4> got{};
  if (!in.read(got.data(), 4) || std::memcmp(got.data(), magic.data(), 4) != 0)
    throw FormatError(std::string(what) + ": bad magic, expected " + std::string(magic));
  const std::uint32_t version = read_u32(in);
  if (version != kFormatVersion)
    throw FormatError(std::string(what) + ": unsupported version " + std::to_string(version));
}

}  // namespace dgu::io
