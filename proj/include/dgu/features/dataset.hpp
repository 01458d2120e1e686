// include/dgu/features/dataset.hpp

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
#include <vector>

#include "dgu/features/features.hpp"

namespace dgu::features {

/// Phoneme symbol table. SIL is always present and is the last id.
class Inventory {
 public:
  Inventory() = default;
  explicit Inventory(std::vector<std::string> symbols);
  /// First n symbols of a fixed ARPAbet-style list, plus SIL.
  static Inventory standard(int num_phonemes);

  int size() const { return static_cast<int>(symbols_.size()); }
  /// Inventory size without SIL.
  int num_phonemes() const { return size() - 1; }
  int sil() const { return size() - 1; }
  const std::string& symbol(int id) const;
  int id_of(const std::string& symbol) const;
  const std::vector<std::string>& symbols() const { return symbols_; }

  std::string to_string(const PhonemeIds& ids) const;
  PhonemeIds parse(const std::string& text) const;

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, int> index_;
};

inline constexpr const char* kSilence = "SIL";

struct ManifestRecord {
  std::string split;
  std::string file;
  std::string id;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::string config_hash;
  Inventory inventory;
  std::vector<ManifestRecord> records;
  std::string text_file;
};

/// Split file "DGUD": version, record count, then per utterance its id,
/// the hidden phonemes as space-separated symbols, and its frame matrix.
void write_split(const std::filesystem::path& path, std::span<const Utterance> utts, const Inventory& inv);
std::vector<Utterance> read_split(const std::filesystem::path& path, const Inventory& inv);

/// Segment file "DGUS": version, count, then per utterance id and segment matrix.
void write_segments(const std::filesystem::path& path, std::span<const SegmentSequence> segs);
std::vector<SegmentSequence> read_segments(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace dgu::features
