// Copyright 2026 The cubeeval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Search-side tables: the compact search node, pattern databases over cube
// projections, and the exact BFS ball around solved. Both tables persist to
// cache files with a 16-byte little-endian header:
//
//   bytes 0-3   magic ("CEPD" pattern database, "CEBL" ball)
//   bytes 4-7   format version
//   bytes 8-11  parameters (pattern descriptor or ball radius)
//   bytes 12-15 entry count
//
// followed by one byte per pattern entry, or by sorted 17-byte ball records
// (corner key u64, edge key u64, depth u8).

#ifndef CUBEEVAL_PDB_HPP_
#define CUBEEVAL_PDB_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cubeeval/cubie.hpp"

namespace cubeeval {

inline constexpr std::uint32_t kCacheFormatVersion = 1;

// Search node: corner coordinates plus the twelve edge slots packed as
// edge | flip << 4.
struct SearchNode {
  std::uint16_t corner_perm = 0;
  std::uint16_t corner_ori = 0;
  std::array<std::uint8_t, kEdges> edges{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};

  friend bool operator==(const SearchNode&, const SearchNode&) = default;

  bool is_solved() const { return *this == SearchNode{}; }
  std::uint32_t corner_index() const {
    return static_cast<std::uint32_t>(corner_perm) * kCornerOriCount + corner_ori;
  }
};

SearchNode make_node(const CubieCube& cube);
CubieCube node_to_cubie(const SearchNode& node);
SearchNode apply_move(const SearchNode& node, int move_index);

// Exact identity of a state, used by the BFS ball.
struct StateKey {
  std::uint64_t corners = 0;
  std::uint64_t edges = 0;
  friend auto operator<=>(const StateKey&, const StateKey&) = default;
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const noexcept {
    return static_cast<std::size_t>(k.corners * 0x9e3779b97f4a7c15ULL ^
                                    (k.edges + 0x632be59bd9b4e019ULL + (k.edges >> 29)));
  }
};

StateKey state_key(const SearchNode& node);
SearchNode node_from_key(const StateKey& key);

// Admissible lower-bound table over one projection of the cube.
class PatternDatabase {
 public:
  enum class Kind : std::uint8_t { kCorners = 1, kEdges = 2 };

  struct Pattern {
    Kind kind = Kind::kCorners;
    int edge_count = 0;  // edges only: how many edges are tracked
    int first_edge = 0;  // edges only: tracked edges are first..first+count-1

    static Pattern corners() { return {Kind::kCorners, 0, 0}; }
    static Pattern edges(int count, int first) { return {Kind::kEdges, count, first}; }

    std::uint32_t descriptor() const;
    std::uint64_t entry_count() const;
    std::string name() const;
    friend bool operator==(const Pattern&, const Pattern&) = default;
  };

  // Breadth-first fill from the solved projection.
  static PatternDatabase build(const Pattern& pattern);
  // Throws Error(kCacheFormat) on a header mismatch, Error(kIoError) if the
  // file cannot be read.
  static PatternDatabase load(const std::filesystem::path& path, const Pattern& pattern);
  static PatternDatabase load_or_build(const std::filesystem::path& cache_dir,
                                       const Pattern& pattern, bool persist);
  void save(const std::filesystem::path& path) const;

  // File name inside a cache directory; embeds a hash of the format so a
  // layout change never reads stale bytes.
  static std::string file_name(const Pattern& pattern);

  const Pattern& pattern() const { return pattern_; }
  std::uint64_t size() const { return table_.size(); }
  std::uint8_t at(std::uint64_t index) const { return table_[index]; }
  std::uint64_t index_of(const SearchNode& node) const;
  std::uint8_t lookup(const SearchNode& node) const { return table_[index_of(node)]; }

 private:
  Pattern pattern_;
  std::vector<std::uint8_t> table_;
};

// Every state within `radius` moves of solved with its exact distance.
class DistanceBall {
 public:
  struct Entry {
    StateKey key;
    std::uint8_t depth;
  };

  static DistanceBall build(int radius);
  static DistanceBall load(const std::filesystem::path& path, int radius);
  static DistanceBall load_or_build(const std::filesystem::path& cache_dir, int radius,
                                    bool persist);
  void save(const std::filesystem::path& path) const;
  static std::string file_name(int radius);

  int radius() const { return radius_; }
  std::size_t size() const { return entries_.size(); }
  // Sorted by key.
  const std::vector<Entry>& entries() const { return entries_; }
  std::optional<int> find(const StateKey& key) const;

 private:
  void index();

  int radius_ = 0;
  std::vector<Entry> entries_;
  std::unordered_map<StateKey, std::uint8_t, StateKeyHash> lookup_;
};

}  // namespace cubeeval

#endif  // CUBEEVAL_PDB_HPP_
