// src/features/dataset.cpp

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

#include "dgu/features/dataset.hpp"

#include <fstream>
#include <sstream>

#include "dgu/numerics/binary_io.hpp"

namespace dgu::features {

namespace {

const std::vector<std::string>& arpabet() {
  static const std::vector<std::string> symbols{
      "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH", "ER", "EY",
      "F",  "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",  "N",  "NG", "OW", "OY",
      "P",  "R",  "S",  "SH", "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"};
  return symbols;
}

}  // namespace

Inventory::Inventory(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty() || symbols_.back() != kSilence)
    throw InputError("inventory must end with " + std::string(kSilence));
  for (std::size_t i = 0; i < symbols_.size(); ++i)
    if (!index_.emplace(symbols_[i], static_cast<int>(i)).second)
      throw InputError("duplicate inventory symbol " + symbols_[i]);
}

Inventory Inventory::standard(int num_phonemes) {
  const auto& base = arpabet();
  if (num_phonemes < 1 || num_phonemes > static_cast<int>(base.size()))
    throw ConfigError("phoneme count must be in [1, " + std::to_string(base.size()) + "]");
  std::vector<std::string> s(base.begin(), base.begin() + num_phonemes);
  s.emplace_back(kSilence);
  return Inventory(std::move(s));
}

const std::string& Inventory::symbol(int id) const {
  if (id < 0 || id >= size()) throw InputError("phoneme id " + std::to_string(id) + " out of range");
  return symbols_[static_cast<std::size_t>(id)];
}

int Inventory::id_of(const std::string& symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) throw InputError("unknown phoneme symbol " + symbol);
  return it->second;
}

std::string Inventory::to_string(const PhonemeIds& ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += symbol(ids[i]);
  }
  return out;
}

PhonemeIds Inventory::parse(const std::string& text) const {
  PhonemeIds ids;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) ids.push_back(id_of(tok));
  return ids;
}

void write_split(const std::filesystem::path& path, std::span<const Utterance> utts, const Inventory& inv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  io::write_magic(out, "DGUD");
  io::write_u32(out, static_cast<std::uint32_t>(utts.size()));
  for (const auto& u : utts) {
    io::write_string(out, u.id);
    io::write_string(out, inv.to_string(u.hidden_phonemes));
    io::write_matrix(out, u.frames);
  }
}

std::vector<Utterance> read_split(const std::filesystem::path& path, const Inventory& inv) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  io::expect_header(in, "DGUD", path.string());
  const std::uint32_t n = io::read_u32(in);
  std::vector<Utterance> out(n);
  for (auto& u : out) {
    u.id = io::read_string(in);
    u.hidden_phonemes = inv.parse(io::read_string(in));
    u.frames = io::read_matrix(in);
  }
  return out;
}

void write_segments(const std::filesystem::path& path, std::span<const SegmentSequence> segs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  io::write_magic(out, "DGUS");
  io::write_u32(out, static_cast<std::uint32_t>(segs.size()));
  for (const auto& s : segs) {
    io::write_string(out, s.source_id);
    io::write_matrix(out, s.segments);
  }
}

std::vector<SegmentSequence> read_segments(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  io::expect_header(in, "DGUS", path.string());
  const std::uint32_t n = io::read_u32(in);
  std::vector<SegmentSequence> out(n);
  for (auto& s : out) {
    s.source_id = io::read_string(in);
    s.segments = io::read_matrix(in);
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "# dgu dataset manifest\n";
  out << "seed " << m.seed << "\n";
  out << "config_hash " << m.config_hash << "\n";
  out << "text " << m.text_file << "\n";
  out << "inventory " << m.inventory.size() << "\n";
  for (const auto& s : m.inventory.symbols()) out << s << "\n";
  out << "records " << m.records.size() << "\n";
  for (const auto& r : m.records) out << r.split << ' ' << r.file << ' ' << r.id << "\n";
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  Manifest m;
  std::string line;
  auto fail = [&](const std::string& why) { throw FormatError(path.string() + ": " + why); };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "seed") {
      ls >> m.seed;
    } else if (key == "config_hash") {
      ls >> m.config_hash;
    } else if (key == "text") {
      ls >> m.text_file;
    } else if (key == "inventory") {
      std::size_t n = 0;
      ls >> n;
      std::vector<std::string> symbols;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) fail("truncated inventory");
        symbols.push_back(line);
      }
      m.inventory = Inventory(std::move(symbols));
    } else if (key == "records") {
      std::size_t n = 0;
      ls >> n;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) fail("truncated record list");
        std::istringstream rs(line);
        ManifestRecord r;
        if (!(rs >> r.split >> r.file >> r.id)) fail("bad record line: " + line);
        m.records.push_back(std::move(r));
      }
    } else {
      fail("unknown key " + key);
    }
  }
  if (m.inventory.size() == 0) fail("missing inventory");
  return m;
}

}  // namespace dgu::features
