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

#include <map>

#include "cubeeval/cube.hpp"
#include "cubeeval/cubie.hpp"
#include "cubeeval/error.hpp"
#include "cubeeval/rng.hpp"
#include "doctest.h"

namespace cubeeval {
namespace {

std::string letters(const CubeState& s) {
  std::string out;
  for (Color c : s.stickers()) out += face_letter(face_of_color(c));
  return out;
}

MoveSeq random_walk(Rng& rng, int length) {
  MoveSeq seq;
  for (int i = 0; i < length; ++i)
    seq.push_back(Move::from_index(static_cast<int>(rng.uniform(Move::kCount))));
  return seq;
}

TEST_CASE("R on solved matches the reference facelet string") {
  CHECK(letters(CubeState::solved().apply(parse_move("R"))) ==
        "UUFUUFUUFRRRRRRRRRFFDFFDFFDDDBDDBDDBLLLLLLLLLUBBUBBUBB");
}

TEST_CASE("each face turn cycles exactly 20 stickers and never moves centers") {
  for (const Move& m : all_moves()) {
    const auto& perm = move_permutation(m);
    int moved = 0;
    for (int i = 0; i < kStickerCount; ++i) moved += perm[i] != i;
    CHECK(moved == 20);
    for (Face f : kAllFaces) CHECK(perm[sticker_index(f, 1, 1)] == sticker_index(f, 1, 1));
  }
}

TEST_CASE("parse_move accepts Singmaster tokens and rejects the rest") {
  CHECK(parse_move("R") == Move{Face::kR, Turn::kClockwise});
  CHECK(parse_move("U2") == Move{Face::kU, Turn::kHalf});
  CHECK(parse_move("F'") == Move{Face::kF, Turn::kCounterClockwise});
  for (const char* bad : {"M", "E", "S", "x", "Rw", "r", "R3", "", "U2'", "R''"})
    CHECK_THROWS_AS(parse_move(bad), Error);
  for (const Move& m : all_moves()) CHECK(parse_move(m.token()) == m);
}

TEST_CASE("sequences round-trip through text and invert") {
  CHECK(format_moves(invert(parse_moves("R U"))) == "U' R'");
  CHECK(format_moves(invert(parse_moves("U2"))) == "U2");
  CHECK(invert(parse_moves("")).empty());
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    MoveSeq seq = random_walk(rng, 1 + static_cast<int>(rng.uniform(20)));
    CHECK(parse_moves(format_moves(seq)) == seq);
    CubeState s = CubeState::solved().apply(random_walk(rng, 15));
    CHECK(s.apply(seq).apply(invert(seq)) == s);
    CHECK(s.apply(invert(seq)).apply(seq) == s);
  }
}

TEST_CASE("group laws") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    CubeState s = CubeState::solved().apply(random_walk(rng, 25));
    for (const Move& m : all_moves()) {
      CHECK(s.apply(m).apply(m.inverse()) == s);
      CubeState q = s;
      for (int k = 0; k < 4; ++k) q = q.apply(m);
      CHECK(q == s);
    }
    for (Face f : kAllFaces)
      CHECK(s.apply(Move{f, Turn::kHalf}) ==
            s.apply(Move{f, Turn::kClockwise}).apply(Move{f, Turn::kClockwise}));
    MoveSeq a = random_walk(rng, 7), b = random_walk(rng, 7);
    MoveSeq ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    CHECK(s.apply(ab) == s.apply(a).apply(b));
  }
}

TEST_CASE("color counts are conserved") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    CubeState s = CubeState::solved().apply(random_walk(rng, 30));
    std::map<Color, int> count;
    for (Color c : s.stickers()) ++count[c];
    for (Color c : kAllColors) CHECK(count[c] == 9);
  }
}

TEST_CASE("is_solved") {
  CHECK(CubeState::solved().is_solved());
  CHECK_FALSE(CubeState::solved().apply(parse_move("F")).is_solved());
  CHECK(CubeState::solved().apply(parse_moves("F F'")).is_solved());
}

TEST_CASE("from_stickers validates counts and centers") {
  auto st = CubeState::solved().stickers();
  std::swap(st[0], st[sticker_index(Face::kR, 1, 1)]);
  CHECK_THROWS_AS(CubeState::from_stickers(st), Error);
  st = CubeState::solved().stickers();
  st[0] = Color::kBlue;
  CHECK_THROWS_AS(CubeState::from_stickers(st), Error);
}

TEST_CASE("color tables") {
  CHECK(color_rgb(Color::kOrange) == Rgb{255, 128, 0});
  CHECK(color_rgb(Color::kGreen) == Rgb{0, 255, 0});
  for (Color c : kAllColors) {
    CHECK(color_from_token(color_token(c)) == c);
    CHECK(color_from_name(color_name(c)) == c);
  }
  CHECK(face_color(Face::kF) == Color::kGreen);
}

TEST_CASE("cubie codec round-trips and agrees with facelet moves") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    CubeState s = CubeState::solved().apply(random_walk(rng, 20));
    CubieCube c = to_cubie(s);
    CHECK(to_facelets(c) == s);
    for (const Move& m : all_moves()) CHECK(to_cubie(s.apply(m)) == multiply(c, move_cubie(m)));
    CubieCube coords;
    set_corner_perm_coord(coords, corner_perm_coord(c));
    set_corner_ori_coord(coords, corner_ori_coord(c));
    CHECK(coords.cp == c.cp);
    CHECK(coords.co == c.co);
  }
}

TEST_CASE("cubie codec rejects unreachable layouts") {
  auto st = CubeState::solved().stickers();
  // Twist one corner in place.
  std::swap(st[8], st[9]);
  std::swap(st[8], st[20]);
  CHECK_THROWS_AS(to_cubie(CubeState::from_stickers(st)), Error);
  st = CubeState::solved().stickers();
  // Flip one edge.
  std::swap(st[5], st[10]);
  CHECK_THROWS_AS(to_cubie(CubeState::from_stickers(st)), Error);
}

TEST_CASE("scramble walks are deterministic and avoid repeated faces") {
  for (int depth = 1; depth <= 8; ++depth)
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      MoveSeq w = scramble_walk(depth, seed, 0);
      CHECK(w.size() == static_cast<std::size_t>(depth));
      CHECK(w == scramble_walk(depth, seed, 0));
      for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i].face != w[i - 1].face);
    }
  Scramble zero = scramble(0, 5, [](const CubeState& s) { return s.is_solved() ? 0 : 1; });
  CHECK(zero.state.is_solved());
  CHECK(zero.scramble.empty());
  CHECK(zero.teacher_plan.empty());
}

TEST_CASE("scramble reports an unachievable depth") {
  CHECK_THROWS_AS(scramble(3, 0, [](const CubeState&) { return 99; }, 5), Error);
}

}  // namespace
}  // namespace cubeeval
