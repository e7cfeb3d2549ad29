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

// Facelet-level cube model: colors, faces, the 18 face-turn-metric moves,
// Singmaster notation and seeded scrambles.

#ifndef CUBEEVAL_CUBE_HPP_
#define CUBEEVAL_CUBE_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cubeeval {

enum class Color : std::uint8_t { kWhite, kYellow, kRed, kOrange, kGreen, kBlue };

inline constexpr std::array<Color, 6> kAllColors = {
    Color::kWhite, Color::kYellow, Color::kRed,
    Color::kOrange, Color::kGreen, Color::kBlue};

struct Rgb {
  std::uint8_t r, g, b;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

char color_token(Color c);             // w y r o g b
std::string_view color_name(Color c);  // White, Yellow, ...
Rgb color_rgb(Color c);
std::optional<Color> color_from_token(char token);
// Case-insensitive full color word.
std::optional<Color> color_from_name(std::string_view name);

// Face identity is fixed by the center sticker.
enum class Face : std::uint8_t { kU, kR, kF, kD, kL, kB };

inline constexpr std::array<Face, 6> kAllFaces = {
    Face::kU, Face::kR, Face::kF, Face::kD, Face::kL, Face::kB};

char face_letter(Face f);
Color face_color(Face f);  // U=White R=Red F=Green D=Yellow L=Orange B=Blue
Face face_of_color(Color c);
std::optional<Face> face_from_letter(char letter);
constexpr Face opposite(Face f) {
  return static_cast<Face>((static_cast<int>(f) + 3) % 6);
}

enum class Turn : std::uint8_t { kClockwise, kCounterClockwise, kHalf };

struct Move {
  Face face = Face::kU;
  Turn turn = Turn::kClockwise;

  static constexpr int kCount = 18;

  constexpr int index() const {
    return static_cast<int>(face) * 3 + static_cast<int>(turn);
  }
  static constexpr Move from_index(int i) {
    return Move{static_cast<Face>(i / 3), static_cast<Turn>(i % 3)};
  }
  constexpr Move inverse() const {
    switch (turn) {
      case Turn::kClockwise: return Move{face, Turn::kCounterClockwise};
      case Turn::kCounterClockwise: return Move{face, Turn::kClockwise};
      case Turn::kHalf: return *this;
    }
    return *this;
  }
  std::string token() const;

  friend constexpr auto operator<=>(const Move& a, const Move& b) {
    return a.index() <=> b.index();
  }
  friend constexpr bool operator==(const Move& a, const Move& b) {
    return a.index() == b.index();
  }
};

// The 18 moves in index order U U' U2 R R' R2 F ... B2.
const std::array<Move, Move::kCount>& all_moves();

using MoveSeq = std::vector<Move>;

// Singmaster token: X, X' or X2 for X in URFDLB. Throws Error(kInvalidToken)
// for slice, wide and rotation moves and anything else.
Move parse_move(std::string_view token);
// Whitespace separated tokens; empty string is the empty sequence.
MoveSeq parse_moves(std::string_view text);
std::string format_moves(std::span<const Move> moves);
// Reversed order, each move inverted.
MoveSeq invert(std::span<const Move> moves);

inline constexpr int kStickerCount = 54;

// Sticker index of (face, row, col); face blocks ordered U R F D L B, each
// row-major with rows top to bottom and cells left to right as seen in the
// unfolded net.
constexpr int sticker_index(Face f, int row, int col) {
  return static_cast<int>(f) * 9 + row * 3 + col;
}

using FaceGrid = std::array<Color, 9>;

class CubeState {
 public:
  using Stickers = std::array<Color, kStickerCount>;

  // Solved cube.
  CubeState();

  static CubeState solved() { return CubeState(); }
  // Validates the nine-of-each count and the fixed centers; throws
  // Error(kInvalidState). Reachability is not checked here.
  static CubeState from_stickers(const Stickers& stickers);

  const Stickers& stickers() const { return stickers_; }
  Color at(int index) const { return stickers_[static_cast<std::size_t>(index)]; }
  Color at(Face f, int row, int col) const { return at(sticker_index(f, row, col)); }
  FaceGrid face(Face f) const;

  CubeState apply(Move m) const;
  CubeState apply(std::span<const Move> moves) const;
  bool is_solved() const;

  friend bool operator==(const CubeState&, const CubeState&) = default;
  friend auto operator<=>(const CubeState&, const CubeState&) = default;

 private:
  Stickers stickers_;
};

inline CubeState apply_move(const CubeState& s, Move m) { return s.apply(m); }
inline bool is_solved(const CubeState& s) { return s.is_solved(); }

// Destination-indexed sticker permutation of a move:
// after.at(i) == before.at(move_permutation(m)[i]).
const std::array<std::uint8_t, kStickerCount>& move_permutation(Move m);

struct Scramble {
  CubeState state;
  MoveSeq scramble;
  MoveSeq teacher_plan;
  int attempt = 0;  // sub-seed index that produced the exact depth
};

using DistanceFn = std::function<int(const CubeState&)>;

// Diameter of the cube group in the face-turn metric.
inline constexpr int kMaxDistance = 20;

// Seeded random walk of `depth` moves with no two consecutive turns of the
// same face, retried with sub-seeds until distance(state) == depth.
// Throws Error(kDepthUnachievable) once max_attempts walks have failed or
// when depth lies outside [0, kMaxDistance].
Scramble scramble(int depth, std::uint64_t seed, const DistanceFn& distance,
                  int max_attempts = 10000);

// The walk for one (depth, seed, attempt) triple, without the distance check.
MoveSeq scramble_walk(int depth, std::uint64_t seed, int attempt);

}  // namespace cubeeval

template <>
struct std::hash<cubeeval::CubeState> {
  std::size_t operator()(const cubeeval::CubeState& s) const noexcept;
};

#endif  // CUBEEVAL_CUBE_HPP_
