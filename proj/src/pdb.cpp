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

#include "cubeeval/pdb.hpp"

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <unordered_set>

#include "cubeeval/error.hpp"
#include "cubeeval/rng.hpp"

namespace cubeeval {
namespace {

constexpr std::uint8_t kUnvisited = 0xFF;
constexpr char kPdbMagic[4] = {'C', 'E', 'P', 'D'};
constexpr char kBallMagic[4] = {'C', 'E', 'B', 'L'};

// dest[m][s]: slot that the edge in slot s moves to under move m.
struct EdgeDest {
  std::array<std::array<std::uint8_t, kEdges>, Move::kCount> slot;
  std::array<std::array<std::uint8_t, kEdges>, Move::kCount> flip;
};

const EdgeDest& edge_dest() {
  static const EdgeDest table = [] {
    EdgeDest t{};
    const auto& em = edge_moves();
    for (int m = 0; m < Move::kCount; ++m)
      for (int i = 0; i < kEdges; ++i) {
        t.slot[m][em[m].source[i]] = static_cast<std::uint8_t>(i);
        t.flip[m][em[m].source[i]] = em[m].flip[i];
      }
    return t;
  }();
  return table;
}

std::uint64_t falling_factorial(int n, int k) {
  std::uint64_t out = 1;
  for (int i = 0; i < k; ++i) out *= static_cast<std::uint64_t>(n - i);
  return out;
}

// Rank of k tracked edges given their slots and flips.
std::uint64_t rank_edges(const std::uint8_t* slots, const std::uint8_t* flips, int k) {
  std::uint64_t idx = 0;
  std::uint32_t used = 0;
  for (int j = 0; j < k; ++j) {
    const std::uint32_t below = ((1u << slots[j]) - 1u) & ~used;
    idx = idx * static_cast<std::uint64_t>(kEdges - j) +
          static_cast<std::uint64_t>(std::popcount(below));
    used |= 1u << slots[j];
  }
  std::uint64_t ori = 0;
  for (int j = 0; j < k; ++j) ori |= static_cast<std::uint64_t>(flips[j]) << j;
  return (idx << k) | ori;
}

void unrank_edges(std::uint64_t index, int k, std::uint8_t* slots, std::uint8_t* flips) {
  for (int j = 0; j < k; ++j) flips[j] = static_cast<std::uint8_t>((index >> j) & 1u);
  std::uint64_t p = index >> k;
  std::array<int, kEdges> digits{};
  for (int j = k - 1; j >= 0; --j) {
    const auto base = static_cast<std::uint64_t>(kEdges - j);
    digits[j] = static_cast<int>(p % base);
    p /= base;
  }
  std::uint32_t used = 0;
  for (int j = 0; j < k; ++j) {
    int r = digits[j];
    for (int s = 0; s < kEdges; ++s) {
      if (used & (1u << s)) continue;
      if (r-- == 0) {
        slots[j] = static_cast<std::uint8_t>(s);
        used |= 1u << s;
        break;
      }
    }
  }
}

// Depth-synchronous BFS over an implicit index graph. Expands forward while
// the frontier is small, then switches to scanning unvisited entries for a
// neighbor on the frontier, which touches far fewer edges late in the fill.
template <typename Neighbors>
void bfs_fill(std::vector<std::uint8_t>& table, std::uint64_t start, Neighbors neighbors) {
  std::fill(table.begin(), table.end(), kUnvisited);
  table[start] = 0;
  std::uint64_t filled = 1, frontier = 1;
  const std::uint64_t total = table.size();
  for (std::uint8_t depth = 0; frontier > 0; ++depth) {
    const std::uint8_t next = static_cast<std::uint8_t>(depth + 1);
    const bool backward = frontier * Move::kCount > total - filled;
    frontier = 0;
    if (!backward) {
      for (std::uint64_t i = 0; i < total; ++i) {
        if (table[i] != depth) continue;
        neighbors(i, [&](std::uint64_t j) {
          if (table[j] == kUnvisited) {
            table[j] = next;
            ++frontier;
          }
          return false;
        });
      }
    } else {
      for (std::uint64_t i = 0; i < total; ++i) {
        if (table[i] != kUnvisited) continue;
        neighbors(i, [&](std::uint64_t j) {
          if (table[j] != depth) return false;
          table[i] = next;
          ++frontier;
          return true;
        });
      }
    }
    filled += frontier;
  }
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint64_t get_u64(const unsigned char* p) {
  return static_cast<std::uint64_t>(get_u32(p)) |
         static_cast<std::uint64_t>(get_u32(p + 4)) << 32;
}

struct Header {
  char magic[4];
  std::uint32_t version, params, count;
};

Header read_header(std::istream& in, const std::filesystem::path& path) {
  unsigned char raw[16];
  if (!in.read(reinterpret_cast<char*>(raw), 16))
    throw Error(ErrorCode::kCacheFormat, "truncated header in " + path.string());
  Header h{};
  std::copy(raw, raw + 4, h.magic);
  h.version = get_u32(raw + 4);
  h.params = get_u32(raw + 8);
  h.count = get_u32(raw + 12);
  return h;
}

void write_header(std::ostream& out, const char* magic, std::uint32_t params,
                  std::uint32_t count) {
  out.write(magic, 4);
  put_u32(out, kCacheFormatVersion);
  put_u32(out, params);
  put_u32(out, count);
}

// Writes through a temporary sibling and renames it into place so concurrent
// readers never observe a partial file.
template <typename Body>
void atomic_write(const std::filesystem::path& path, Body body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string hex8(std::uint64_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(v & 0xFFFFFFFFu));
  return buf;
}

}  // namespace

SearchNode make_node(const CubieCube& cube) {
  SearchNode n;
  n.corner_perm = static_cast<std::uint16_t>(corner_perm_coord(cube));
  n.corner_ori = static_cast<std::uint16_t>(corner_ori_coord(cube));
  for (int i = 0; i < kEdges; ++i)
    n.edges[i] = static_cast<std::uint8_t>(cube.ep[i] | (cube.eo[i] << 4));
  return n;
}

CubieCube node_to_cubie(const SearchNode& node) {
  CubieCube c;
  set_corner_perm_coord(c, node.corner_perm);
  set_corner_ori_coord(c, node.corner_ori);
  for (int i = 0; i < kEdges; ++i) {
    c.ep[i] = node.edges[i] & 0x0F;
    c.eo[i] = static_cast<std::uint8_t>(node.edges[i] >> 4);
  }
  return c;
}

SearchNode apply_move(const SearchNode& node, int m) {
  static const auto& pm = corner_perm_moves();
  static const auto& om = corner_ori_moves();
  static const auto& em = edge_moves();
  SearchNode out;
  out.corner_perm = pm[static_cast<std::size_t>(node.corner_perm) * Move::kCount + m];
  out.corner_ori = om[static_cast<std::size_t>(node.corner_ori) * Move::kCount + m];
  const EdgeMove& e = em[m];
  for (int i = 0; i < kEdges; ++i)
    out.edges[i] = static_cast<std::uint8_t>(node.edges[e.source[i]] ^ (e.flip[i] << 4));
  return out;
}

StateKey state_key(const SearchNode& node) {
  StateKey k;
  k.corners = node.corner_index();
  for (int i = 0; i < kEdges; ++i)
    k.edges |= static_cast<std::uint64_t>(node.edges[i] & 0x1F) << (5 * i);
  return k;
}

SearchNode node_from_key(const StateKey& key) {
  SearchNode n;
  n.corner_perm = static_cast<std::uint16_t>(key.corners / kCornerOriCount);
  n.corner_ori = static_cast<std::uint16_t>(key.corners % kCornerOriCount);
  for (int i = 0; i < kEdges; ++i)
    n.edges[i] = static_cast<std::uint8_t>((key.edges >> (5 * i)) & 0x1F);
  return n;
}

// ---------------------------------------------------------------------------
// PatternDatabase

std::uint32_t PatternDatabase::Pattern::descriptor() const {
  return static_cast<std::uint32_t>(kind) | static_cast<std::uint32_t>(edge_count) << 8 |
         static_cast<std::uint32_t>(first_edge) << 16;
}

std::uint64_t PatternDatabase::Pattern::entry_count() const {
  if (kind == Kind::kCorners) return kCornerIndexCount;
  return falling_factorial(kEdges, edge_count) << edge_count;
}

std::string PatternDatabase::Pattern::name() const {
  if (kind == Kind::kCorners) return "corners";
  return "edges" + std::to_string(edge_count) + "from" + std::to_string(first_edge);
}

std::string PatternDatabase::file_name(const Pattern& pattern) {
  const std::string layout =
      pattern.kind == Kind::kCorners
          ? "corner cp*2187+co lehmer/base3 u8"
          : "edge partial-perm rank << k | flips u8";
  const std::uint64_t h = fnv1a64("cubeeval-pdb|" + std::to_string(kCacheFormatVersion) + "|" +
                                  std::to_string(pattern.descriptor()) + "|" + layout);
  return pattern.name() + "-v" + std::to_string(kCacheFormatVersion) + "-" + hex8(h) + ".pdb";
}

std::uint64_t PatternDatabase::index_of(const SearchNode& node) const {
  if (pattern_.kind == Kind::kCorners) return node.corner_index();
  std::uint8_t slots[kEdges], flips[kEdges];
  for (int s = 0; s < kEdges; ++s) {
    const int e = (node.edges[s] & 0x0F) - pattern_.first_edge;
    if (e >= 0 && e < pattern_.edge_count) {
      slots[e] = static_cast<std::uint8_t>(s);
      flips[e] = static_cast<std::uint8_t>(node.edges[s] >> 4);
    }
  }
  return rank_edges(slots, flips, pattern_.edge_count);
}

PatternDatabase PatternDatabase::build(const Pattern& pattern) {
  if (pattern.kind == Kind::kEdges &&
      (pattern.edge_count < 1 || pattern.edge_count > 7 || pattern.first_edge < 0 ||
       pattern.first_edge + pattern.edge_count > kEdges))
    throw Error(ErrorCode::kConfigError, "edge pattern must track 1..7 consecutive edges");
  PatternDatabase db;
  db.pattern_ = pattern;
  db.table_.resize(pattern.entry_count());
  const SearchNode solved;
  if (pattern.kind == Kind::kCorners) {
    const auto& pm = corner_perm_moves();
    const auto& om = corner_ori_moves();
    bfs_fill(db.table_, db.index_of(solved), [&](std::uint64_t i, auto&& visit) {
      const std::size_t cp = i / kCornerOriCount, co = i % kCornerOriCount;
      for (int m = 0; m < Move::kCount; ++m) {
        const std::uint64_t j =
            static_cast<std::uint64_t>(pm[cp * Move::kCount + m]) * kCornerOriCount +
            om[co * Move::kCount + m];
        if (visit(j)) return;
      }
    });
  } else {
    const int k = pattern.edge_count;
    const EdgeDest& dest = edge_dest();
    bfs_fill(db.table_, db.index_of(solved), [&](std::uint64_t i, auto&& visit) {
      std::uint8_t slots[kEdges], flips[kEdges], ns[kEdges], nf[kEdges];
      unrank_edges(i, k, slots, flips);
      for (int m = 0; m < Move::kCount; ++m) {
        for (int j = 0; j < k; ++j) {
          ns[j] = dest.slot[m][slots[j]];
          nf[j] = flips[j] ^ dest.flip[m][slots[j]];
        }
        if (visit(rank_edges(ns, nf, k))) return;
      }
    });
  }
  return db;
}

void PatternDatabase::save(const std::filesystem::path& path) const {
  atomic_write(path, [&](std::ostream& out) {
    write_header(out, kPdbMagic, pattern_.descriptor(), static_cast<std::uint32_t>(size()));
    out.write(reinterpret_cast<const char*>(table_.data()),
              static_cast<std::streamsize>(table_.size()));
  });
}

PatternDatabase PatternDatabase::load(const std::filesystem::path& path,
                                      const Pattern& pattern) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  const Header h = read_header(in, path);
  if (!std::equal(h.magic, h.magic + 4, kPdbMagic) || h.version != kCacheFormatVersion ||
      h.params != pattern.descriptor() || h.count != pattern.entry_count())
    throw Error(ErrorCode::kCacheFormat, "header mismatch in " + path.string());
  PatternDatabase db;
  db.pattern_ = pattern;
  db.table_.resize(h.count);
  if (!in.read(reinterpret_cast<char*>(db.table_.data()),
               static_cast<std::streamsize>(db.table_.size())))
    throw Error(ErrorCode::kCacheFormat, "truncated table in " + path.string());
  return db;
}

PatternDatabase PatternDatabase::load_or_build(const std::filesystem::path& cache_dir,
                                               const Pattern& pattern, bool persist) {
  const auto path = cache_dir / file_name(pattern);
  if (persist && std::filesystem::exists(path)) {
    try {
      return load(path, pattern);
    } catch (const Error& e) {
      std::cerr << "cubeeval: rebuilding " << path.string() << " (" << e.what() << ")\n";
    }
  }
  PatternDatabase db = build(pattern);
  if (persist) db.save(path);
  return db;
}

// ---------------------------------------------------------------------------
// DistanceBall

std::string DistanceBall::file_name(int radius) {
  const std::uint64_t h = fnv1a64("cubeeval-ball|" + std::to_string(kCacheFormatVersion) +
                                  "|" + std::to_string(radius) + "|key cp*2187+co, 12x5 edges");
  return "ball-r" + std::to_string(radius) + "-v" + std::to_string(kCacheFormatVersion) + "-" +
         hex8(h) + ".bin";
}

void DistanceBall::index() {
  lookup_.clear();
  lookup_.reserve(entries_.size());
  for (const Entry& e : entries_) lookup_.emplace(e.key, e.depth);
}

std::optional<int> DistanceBall::find(const StateKey& key) const {
  auto it = lookup_.find(key);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

DistanceBall DistanceBall::build(int radius) {
  if (radius < 0 || radius > 7)
    throw Error(ErrorCode::kConfigError, "ball radius must be in 0..7");
  DistanceBall ball;
  ball.radius_ = radius;
  std::unordered_set<StateKey, StateKeyHash> seen;
  std::vector<SearchNode> frontier{SearchNode{}};
  seen.insert(state_key(SearchNode{}));
  ball.entries_.push_back({state_key(SearchNode{}), 0});
  for (int depth = 1; depth <= radius; ++depth) {
    std::vector<SearchNode> next;
    for (const SearchNode& n : frontier)
      for (int m = 0; m < Move::kCount; ++m) {
        SearchNode c = apply_move(n, m);
        StateKey k = state_key(c);
        if (seen.insert(k).second) {
          ball.entries_.push_back({k, static_cast<std::uint8_t>(depth)});
          next.push_back(c);
        }
      }
    frontier = std::move(next);
  }
  std::sort(ball.entries_.begin(), ball.entries_.end(),
            [](const Entry& a, const Entry& b) { return a.key < b.key; });
  ball.index();
  return ball;
}

void DistanceBall::save(const std::filesystem::path& path) const {
  atomic_write(path, [&](std::ostream& out) {
    write_header(out, kBallMagic, static_cast<std::uint32_t>(radius_),
                 static_cast<std::uint32_t>(entries_.size()));
    for (const Entry& e : entries_) {
      put_u64(out, e.key.corners);
      put_u64(out, e.key.edges);
      out.put(static_cast<char>(e.depth));
    }
  });
}

DistanceBall DistanceBall::load(const std::filesystem::path& path, int radius) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  const Header h = read_header(in, path);
  if (!std::equal(h.magic, h.magic + 4, kBallMagic) || h.version != kCacheFormatVersion ||
      h.params != static_cast<std::uint32_t>(radius))
    throw Error(ErrorCode::kCacheFormat, "header mismatch in " + path.string());
  std::vector<unsigned char> raw(static_cast<std::size_t>(h.count) * 17);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw Error(ErrorCode::kCacheFormat, "truncated ball in " + path.string());
  DistanceBall ball;
  ball.radius_ = radius;
  ball.entries_.resize(h.count);
  for (std::size_t i = 0; i < h.count; ++i) {
    const unsigned char* p = raw.data() + i * 17;
    ball.entries_[i] = {{get_u64(p), get_u64(p + 8)}, p[16]};
  }
  ball.index();
  return ball;
}

DistanceBall DistanceBall::load_or_build(const std::filesystem::path& cache_dir, int radius,
                                         bool persist) {
  const auto path = cache_dir / file_name(radius);
  if (persist && std::filesystem::exists(path)) {
    try {
      return load(path, radius);
    } catch (const Error& e) {
      std::cerr << "cubeeval: rebuilding " << path.string() << " (" << e.what() << ")\n";
    }
  }
  DistanceBall ball = build(radius);
  if (persist) ball.save(path);
  return ball;
}

}  // namespace cubeeval
