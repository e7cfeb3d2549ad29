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

// Cubie-level encoding (corner/edge permutation + orientation) used by the
// search. Converted to and from facelets by a bijective codec.

#ifndef CUBEEVAL_CUBIE_HPP_
#define CUBEEVAL_CUBIE_HPP_

#include <array>
#include <cstdint>

#include "cubeeval/cube.hpp"

namespace cubeeval {

inline constexpr int kCorners = 8;
inline constexpr int kEdges = 12;
inline constexpr int kCornerPermCount = 40320;  // 8!
inline constexpr int kCornerOriCount = 2187;    // 3^7
inline constexpr std::uint32_t kCornerIndexCount =
    static_cast<std::uint32_t>(kCornerPermCount) * kCornerOriCount;

// Corners URF UFL ULB UBR DFR DLF DBL DRB; edges UR UF UL UB DR DF DL DB FR FL
// BL BR. cp[i] is the corner sitting in slot i, co[i] its twist.
struct CubieCube {
  std::array<std::uint8_t, kCorners> cp{0, 1, 2, 3, 4, 5, 6, 7};
  std::array<std::uint8_t, kCorners> co{};
  std::array<std::uint8_t, kEdges> ep{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  std::array<std::uint8_t, kEdges> eo{};

  friend bool operator==(const CubieCube&, const CubieCube&) = default;

  bool is_solved() const { return *this == CubieCube{}; }
};

// Applies `b` after `a`.
CubieCube multiply(const CubieCube& a, const CubieCube& b);

// Throws Error(kInvalidState) if the stickers do not describe a legal cube
// (unknown cubie, twist/flip sum or permutation parity violation).
CubieCube to_cubie(const CubeState& state);
CubeState to_facelets(const CubieCube& cube);

const CubieCube& move_cubie(Move m);

// Coordinates.
int corner_perm_coord(const CubieCube& c);  // 0..40319
int corner_ori_coord(const CubieCube& c);   // 0..2186
void set_corner_perm_coord(CubieCube& c, int coord);
void set_corner_ori_coord(CubieCube& c, int coord);

// Move tables over the corner coordinates, indexed [coord * 18 + move].
const std::array<std::uint16_t, kCornerPermCount * Move::kCount>& corner_perm_moves();
const std::array<std::uint16_t, kCornerOriCount * Move::kCount>& corner_ori_moves();

// Edge slot contents as ep | eo << 4 with per-move slot sources and flips.
struct EdgeMove {
  std::array<std::uint8_t, kEdges> source;
  std::array<std::uint8_t, kEdges> flip;
};
const std::array<EdgeMove, Move::kCount>& edge_moves();

}  // namespace cubeeval

#endif  // CUBEEVAL_CUBIE_HPP_
