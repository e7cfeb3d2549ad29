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

#include "cubeeval/cube.hpp"

#include <algorithm>
#include <cctype>
#include <string_view>

#include "cubeeval/error.hpp"
#include "cubeeval/rng.hpp"

namespace cubeeval {
namespace {

struct Vec3 {
  int x, y, z;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator*(int k, Vec3 a) { return {k * a.x, k * a.y, k * a.z}; }
int dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Outward normal of each face, in U R F D L B order. x points right, y up,
// z toward the viewer of the front face.
constexpr std::array<Vec3, 6> kNormals = {{
    {0, 1, 0}, {1, 0, 0}, {0, 0, 1}, {0, -1, 0}, {-1, 0, 0}, {0, 0, -1}}};

struct StickerGeom {
  Vec3 pos;     // cubie position in {-1,0,1}^3
  Vec3 normal;  // face the sticker points at
};

// Net orientation: U above F with its bottom row touching F, D below F with
// its top row touching F, L R B to the right of each other around the belt.
StickerGeom geometry(Face f, int r, int c) {
  switch (f) {
    case Face::kU: return {{c - 1, 1, r - 1}, kNormals[0]};
    case Face::kR: return {{1, 1 - r, 1 - c}, kNormals[1]};
    case Face::kF: return {{c - 1, 1 - r, 1}, kNormals[2]};
    case Face::kD: return {{c - 1, -1, 1 - r}, kNormals[3]};
    case Face::kL: return {{-1, 1 - r, c - 1}, kNormals[4]};
    case Face::kB: return {{1 - c, 1 - r, -1}, kNormals[5]};
  }
  return {};
}

// Rotation about unit axis `a`: sin/cos in {-1,0,1}.
Vec3 rotate(Vec3 v, Vec3 a, int s, int c) {
  return c * v + s * cross(a, v) + ((1 - c) * dot(a, v)) * a;
}

using Perm = std::array<std::uint8_t, kStickerCount>;

std::array<Perm, Move::kCount> build_move_table() {
  std::array<StickerGeom, kStickerCount> geom{};
  for (Face f : kAllFaces)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) geom[sticker_index(f, r, c)] = geometry(f, r, c);

  auto locate = [&](const StickerGeom& g) {
    for (int i = 0; i < kStickerCount; ++i)
      if (geom[i].pos == g.pos && geom[i].normal == g.normal) return i;
    return -1;
  };

  std::array<Perm, Move::kCount> table{};
  for (int mi = 0; mi < Move::kCount; ++mi) {
    const Move m = Move::from_index(mi);
    const Vec3 axis = kNormals[static_cast<int>(m.face)];
    // Clockwise as seen from outside the face is a negative rotation about
    // the outward normal.
    int s = 0, c = 0;
    switch (m.turn) {
      case Turn::kClockwise: s = -1; c = 0; break;
      case Turn::kCounterClockwise: s = 1; c = 0; break;
      case Turn::kHalf: s = 0; c = -1; break;
    }
    Perm& p = table[mi];
    for (int i = 0; i < kStickerCount; ++i) p[i] = static_cast<std::uint8_t>(i);
    for (int i = 0; i < kStickerCount; ++i) {
      if (dot(geom[i].pos, axis) != 1) continue;
      StickerGeom moved{rotate(geom[i].pos, axis, s, c),
                        rotate(geom[i].normal, axis, s, c)};
      p[locate(moved)] = static_cast<std::uint8_t>(i);
    }
  }
  return table;
}

const std::array<Perm, Move::kCount>& move_table() {
  static const auto table = build_move_table();
  return table;
}

constexpr std::string_view kFaceLetters = "URFDLB";

}  // namespace

char color_token(Color c) {
  static constexpr char kTokens[] = {'w', 'y', 'r', 'o', 'g', 'b'};
  return kTokens[static_cast<int>(c)];
}

std::string_view color_name(Color c) {
  static constexpr std::string_view kNames[] = {"White", "Yellow", "Red",
                                                "Orange", "Green", "Blue"};
  return kNames[static_cast<int>(c)];
}

Rgb color_rgb(Color c) {
  static constexpr Rgb kRgb[] = {{255, 255, 255}, {255, 255, 0}, {255, 0, 0},
                                 {255, 128, 0},   {0, 255, 0},   {0, 0, 255}};
  return kRgb[static_cast<int>(c)];
}

std::optional<Color> color_from_token(char token) {
  for (Color c : kAllColors)
    if (color_token(c) == token) return c;
  return std::nullopt;
}

std::optional<Color> color_from_name(std::string_view name) {
  for (Color c : kAllColors) {
    std::string_view want = color_name(c);
    if (want.size() != name.size()) continue;
    bool same = std::equal(want.begin(), want.end(), name.begin(), [](char a, char b) {
      return std::tolower(static_cast<unsigned char>(a)) ==
             std::tolower(static_cast<unsigned char>(b));
    });
    if (same) return c;
  }
  return std::nullopt;
}

char face_letter(Face f) { return kFaceLetters[static_cast<int>(f)]; }

Color face_color(Face f) {
  static constexpr Color kScheme[] = {Color::kWhite, Color::kRed,    Color::kGreen,
                                      Color::kYellow, Color::kOrange, Color::kBlue};
  return kScheme[static_cast<int>(f)];
}

Face face_of_color(Color c) {
  for (Face f : kAllFaces)
    if (face_color(f) == c) return f;
  return Face::kU;
}

std::optional<Face> face_from_letter(char letter) {
  auto pos = kFaceLetters.find(letter);
  if (pos == std::string_view::npos) return std::nullopt;
  return static_cast<Face>(pos);
}

std::string Move::token() const {
  std::string out(1, face_letter(face));
  if (turn == Turn::kCounterClockwise) out += '\'';
  if (turn == Turn::kHalf) out += '2';
  return out;
}

const std::array<Move, Move::kCount>& all_moves() {
  static const auto moves = [] {
    std::array<Move, Move::kCount> out{};
    for (int i = 0; i < Move::kCount; ++i) out[i] = Move::from_index(i);
    return out;
  }();
  return moves;
}

Move parse_move(std::string_view token) {
  if (token.empty() || token.size() > 2)
    throw Error(ErrorCode::kInvalidToken, "invalid move token '" + std::string(token) + "'");
  auto face = face_from_letter(token[0]);
  if (!face)
    throw Error(ErrorCode::kInvalidToken, "invalid move token '" + std::string(token) + "'");
  if (token.size() == 1) return Move{*face, Turn::kClockwise};
  if (token[1] == '\'') return Move{*face, Turn::kCounterClockwise};
  if (token[1] == '2') return Move{*face, Turn::kHalf};
  throw Error(ErrorCode::kInvalidToken, "invalid move token '" + std::string(token) + "'");
}

MoveSeq parse_moves(std::string_view text) {
  MoveSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(parse_move(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

std::string format_moves(std::span<const Move> moves) {
  std::string out;
  for (const Move& m : moves) {
    if (!out.empty()) out += ' ';
    out += m.token();
  }
  return out;
}

MoveSeq invert(std::span<const Move> moves) {
  MoveSeq out;
  out.reserve(moves.size());
  for (auto it = moves.rbegin(); it != moves.rend(); ++it) out.push_back(it->inverse());
  return out;
}

CubeState::CubeState() {
  for (Face f : kAllFaces)
    for (int k = 0; k < 9; ++k) stickers_[static_cast<int>(f) * 9 + k] = face_color(f);
}

CubeState CubeState::from_stickers(const Stickers& stickers) {
  std::array<int, 6> counts{};
  for (Color c : stickers) {
    if (static_cast<int>(c) >= 6) throw Error(ErrorCode::kInvalidState, "unknown color value");
    ++counts[static_cast<int>(c)];
  }
  for (Color c : kAllColors)
    if (counts[static_cast<int>(c)] != 9)
      throw Error(ErrorCode::kInvalidState,
                  std::string(color_name(c)) + " appears " +
                      std::to_string(counts[static_cast<int>(c)]) + " times, expected 9");
  for (Face f : kAllFaces)
    if (stickers[sticker_index(f, 1, 1)] != face_color(f))
      throw Error(ErrorCode::kInvalidState,
                  std::string("center of face ") + face_letter(f) + " is not " +
                      std::string(color_name(face_color(f))));
  CubeState s;
  s.stickers_ = stickers;
  return s;
}

FaceGrid CubeState::face(Face f) const {
  FaceGrid g{};
  for (int k = 0; k < 9; ++k) g[k] = stickers_[static_cast<int>(f) * 9 + k];
  return g;
}

CubeState CubeState::apply(Move m) const {
  const Perm& p = move_table()[m.index()];
  CubeState out;
  for (int i = 0; i < kStickerCount; ++i) out.stickers_[i] = stickers_[p[i]];
  return out;
}

CubeState CubeState::apply(std::span<const Move> moves) const {
  CubeState s = *this;
  for (const Move& m : moves) s = s.apply(m);
  return s;
}

bool CubeState::is_solved() const {
  for (Face f : kAllFaces) {
    const Color center = at(f, 1, 1);
    for (int k = 0; k < 9; ++k)
      if (stickers_[static_cast<int>(f) * 9 + k] != center) return false;
  }
  return true;
}

const std::array<std::uint8_t, kStickerCount>& move_permutation(Move m) {
  return move_table()[m.index()];
}

MoveSeq scramble_walk(int depth, std::uint64_t seed, int attempt) {
  Rng rng(seed, "scramble",
          {static_cast<std::uint64_t>(depth), static_cast<std::uint64_t>(attempt)});
  MoveSeq walk;
  walk.reserve(static_cast<std::size_t>(depth));
  for (int k = 0; k < depth; ++k) {
    std::vector<Move> allowed;
    for (const Move& m : all_moves())
      if (walk.empty() || m.face != walk.back().face) allowed.push_back(m);
    walk.push_back(allowed[rng.uniform(allowed.size())]);
  }
  return walk;
}

Scramble scramble(int depth, std::uint64_t seed, const DistanceFn& distance,
                  int max_attempts) {
  if (depth < 0 || depth > kMaxDistance)
    throw Error(ErrorCode::kDepthUnachievable, "depth " + std::to_string(depth) + " out of range");
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    MoveSeq walk = scramble_walk(depth, seed, attempt);
    CubeState state = CubeState::solved().apply(walk);
    if (distance(state) == depth) {
      MoveSeq plan = invert(walk);
      return Scramble{state, std::move(walk), std::move(plan), attempt};
    }
  }
  throw Error(ErrorCode::kDepthUnachievable,
              "no walk of length " + std::to_string(depth) + " reached distance " +
                  std::to_string(depth) + " within " + std::to_string(max_attempts) +
                  " attempts");
}

}  // namespace cubeeval

std::size_t std::hash<cubeeval::CubeState>::operator()(
    const cubeeval::CubeState& s) const noexcept {
  const auto& st = s.stickers();
  return static_cast<std::size_t>(cubeeval::fnv1a64(
      std::string_view(reinterpret_cast<const char*>(st.data()), st.size())));
}
