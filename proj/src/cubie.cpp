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

#include "cubeeval/cubie.hpp"

#include <memory>
#include <string>

#include "cubeeval/error.hpp"

namespace cubeeval {
namespace {

using F = Face;

// Sticker indices of each corner slot, U/D sticker first, then clockwise.
constexpr int kCornerFacelet[kCorners][3] = {
    {8, 9, 20},   {6, 18, 38},  {0, 36, 47},  {2, 45, 11},
    {29, 26, 15}, {27, 44, 24}, {33, 53, 42}, {35, 17, 51}};

constexpr F kCornerFaces[kCorners][3] = {
    {F::kU, F::kR, F::kF}, {F::kU, F::kF, F::kL}, {F::kU, F::kL, F::kB},
    {F::kU, F::kB, F::kR}, {F::kD, F::kF, F::kR}, {F::kD, F::kL, F::kF},
    {F::kD, F::kB, F::kL}, {F::kD, F::kR, F::kB}};

constexpr int kEdgeFacelet[kEdges][2] = {
    {5, 10},  {7, 19},  {3, 37},  {1, 46},  {32, 16}, {28, 25},
    {30, 43}, {34, 52}, {23, 12}, {21, 41}, {50, 39}, {48, 14}};

constexpr F kEdgeFaces[kEdges][2] = {
    {F::kU, F::kR}, {F::kU, F::kF}, {F::kU, F::kL}, {F::kU, F::kB},
    {F::kD, F::kR}, {F::kD, F::kF}, {F::kD, F::kL}, {F::kD, F::kB},
    {F::kF, F::kR}, {F::kF, F::kL}, {F::kB, F::kL}, {F::kB, F::kR}};

template <std::size_t N>
int parity(const std::array<std::uint8_t, N>& p) {
  int inversions = 0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j)
      if (p[i] > p[j]) ++inversions;
  return inversions % 2;
}

}  // namespace

CubieCube multiply(const CubieCube& a, const CubieCube& b) {
  CubieCube out;
  for (int i = 0; i < kCorners; ++i) {
    out.cp[i] = a.cp[b.cp[i]];
    out.co[i] = static_cast<std::uint8_t>((a.co[b.cp[i]] + b.co[i]) % 3);
  }
  for (int i = 0; i < kEdges; ++i) {
    out.ep[i] = a.ep[b.ep[i]];
    out.eo[i] = static_cast<std::uint8_t>((a.eo[b.ep[i]] + b.eo[i]) % 2);
  }
  return out;
}

CubieCube to_cubie(const CubeState& state) {
  auto face_at = [&](int idx) { return face_of_color(state.at(idx)); };
  CubieCube out;
  std::array<bool, kCorners> seen_corner{};
  for (int i = 0; i < kCorners; ++i) {
    int ori = 0;
    for (; ori < 3; ++ori) {
      F f = face_at(kCornerFacelet[i][ori]);
      if (f == F::kU || f == F::kD) break;
    }
    if (ori == 3)
      throw Error(ErrorCode::kInvalidState,
                  "corner slot " + std::to_string(i) + " has no U/D sticker");
    F f1 = face_at(kCornerFacelet[i][(ori + 1) % 3]);
    F f2 = face_at(kCornerFacelet[i][(ori + 2) % 3]);
    int found = -1;
    for (int j = 0; j < kCorners; ++j)
      if (kCornerFaces[j][1] == f1 && kCornerFaces[j][2] == f2 &&
          kCornerFaces[j][0] == face_at(kCornerFacelet[i][ori]))
        found = j;
    if (found < 0 || seen_corner[found])
      throw Error(ErrorCode::kInvalidState,
                  "corner slot " + std::to_string(i) + " holds no valid corner");
    seen_corner[found] = true;
    out.cp[i] = static_cast<std::uint8_t>(found);
    out.co[i] = static_cast<std::uint8_t>(ori);
  }
  std::array<bool, kEdges> seen_edge{};
  for (int i = 0; i < kEdges; ++i) {
    F a = face_at(kEdgeFacelet[i][0]);
    F b = face_at(kEdgeFacelet[i][1]);
    int found = -1, flip = 0;
    for (int j = 0; j < kEdges; ++j) {
      if (kEdgeFaces[j][0] == a && kEdgeFaces[j][1] == b) { found = j; flip = 0; }
      if (kEdgeFaces[j][0] == b && kEdgeFaces[j][1] == a) { found = j; flip = 1; }
    }
    if (found < 0 || seen_edge[found])
      throw Error(ErrorCode::kInvalidState,
                  "edge slot " + std::to_string(i) + " holds no valid edge");
    seen_edge[found] = true;
    out.ep[i] = static_cast<std::uint8_t>(found);
    out.eo[i] = static_cast<std::uint8_t>(flip);
  }
  int twist = 0, flips = 0;
  for (auto v : out.co) twist += v;
  for (auto v : out.eo) flips += v;
  if (twist % 3 != 0) throw Error(ErrorCode::kInvalidState, "corner twist sum is not 0 mod 3");
  if (flips % 2 != 0) throw Error(ErrorCode::kInvalidState, "edge flip sum is odd");
  if (parity(out.cp) != parity(out.ep))
    throw Error(ErrorCode::kInvalidState, "corner and edge permutation parities differ");
  return out;
}

CubeState to_facelets(const CubieCube& cube) {
  CubeState::Stickers st{};
  for (Face f : kAllFaces) st[sticker_index(f, 1, 1)] = face_color(f);
  for (int i = 0; i < kCorners; ++i) {
    const int j = cube.cp[i], ori = cube.co[i];
    for (int n = 0; n < 3; ++n)
      st[kCornerFacelet[i][(n + ori) % 3]] = face_color(kCornerFaces[j][n]);
  }
  for (int i = 0; i < kEdges; ++i) {
    const int j = cube.ep[i], ori = cube.eo[i];
    for (int n = 0; n < 2; ++n)
      st[kEdgeFacelet[i][(n + ori) % 2]] = face_color(kEdgeFaces[j][n]);
  }
  return CubeState::from_stickers(st);
}

const CubieCube& move_cubie(Move m) {
  static const auto table = [] {
    std::array<CubieCube, Move::kCount> t{};
    for (int i = 0; i < Move::kCount; ++i)
      t[i] = to_cubie(CubeState::solved().apply(Move::from_index(i)));
    return t;
  }();
  return table[m.index()];
}

int corner_perm_coord(const CubieCube& c) {
  int coord = 0;
  for (int i = 0; i < kCorners; ++i) {
    int smaller = 0;
    for (int j = i + 1; j < kCorners; ++j)
      if (c.cp[j] < c.cp[i]) ++smaller;
    coord = coord * (kCorners - i) + smaller;
  }
  return coord;
}

void set_corner_perm_coord(CubieCube& c, int coord) {
  std::array<int, kCorners> digits{};
  for (int i = kCorners - 1; i >= 0; --i) {
    digits[i] = coord % (kCorners - i);
    coord /= (kCorners - i);
  }
  std::array<bool, kCorners> used{};
  for (int i = 0; i < kCorners; ++i) {
    int k = digits[i];
    for (int v = 0; v < kCorners; ++v) {
      if (used[v]) continue;
      if (k-- == 0) {
        c.cp[i] = static_cast<std::uint8_t>(v);
        used[v] = true;
        break;
      }
    }
  }
}

int corner_ori_coord(const CubieCube& c) {
  int coord = 0;
  for (int i = 0; i < kCorners - 1; ++i) coord = coord * 3 + c.co[i];
  return coord;
}

void set_corner_ori_coord(CubieCube& c, int coord) {
  int sum = 0;
  for (int i = kCorners - 2; i >= 0; --i) {
    c.co[i] = static_cast<std::uint8_t>(coord % 3);
    sum += c.co[i];
    coord /= 3;
  }
  c.co[kCorners - 1] = static_cast<std::uint8_t>((3 - sum % 3) % 3);
}

const std::array<std::uint16_t, kCornerPermCount * Move::kCount>& corner_perm_moves() {
  static const auto table = [] {
    auto t = std::make_unique<std::array<std::uint16_t, kCornerPermCount * Move::kCount>>();
    CubieCube c;
    for (int coord = 0; coord < kCornerPermCount; ++coord) {
      set_corner_perm_coord(c, coord);
      for (int m = 0; m < Move::kCount; ++m)
        (*t)[coord * Move::kCount + m] = static_cast<std::uint16_t>(
            corner_perm_coord(multiply(c, move_cubie(Move::from_index(m)))));
    }
    return t;
  }();
  return *table;
}

const std::array<std::uint16_t, kCornerOriCount * Move::kCount>& corner_ori_moves() {
  static const auto table = [] {
    std::array<std::uint16_t, kCornerOriCount * Move::kCount> t{};
    CubieCube c;
    for (int coord = 0; coord < kCornerOriCount; ++coord) {
      set_corner_ori_coord(c, coord);
      for (int m = 0; m < Move::kCount; ++m)
        t[coord * Move::kCount + m] = static_cast<std::uint16_t>(
            corner_ori_coord(multiply(c, move_cubie(Move::from_index(m)))));
    }
    return t;
  }();
  return table;
}

const std::array<EdgeMove, Move::kCount>& edge_moves() {
  static const auto table = [] {
    std::array<EdgeMove, Move::kCount> t{};
    for (int m = 0; m < Move::kCount; ++m) {
      const CubieCube& mc = move_cubie(Move::from_index(m));
      t[m].source = mc.ep;
      t[m].flip = mc.eo;
    }
    return t;
  }();
  return table;
}

}  // namespace cubeeval
