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

#include "cubeeval/error.hpp"
#include "cubeeval/rng.hpp"
#include "cubeeval/textgen.hpp"
#include "doctest.h"

namespace cubeeval {
namespace {

CubeState random_state(Rng& rng) {
  CubeState s;
  for (int i = 0; i < 25; ++i) s = s.apply(Move::from_index(static_cast<int>(rng.uniform(18))));
  return s;
}

TEST_CASE("solved serializations") {
  const CubeState s;
  CHECK(to_facelet_string(s) == "UUUUUUUUURRRRRRRRRFFFFFFFFFDDDDDDDDDLLLLLLLLLBBBBBBBBB");
  CHECK(to_net_text(s) ==
        "        Top\n"
        "        w w w\n"
        "        w w w\n"
        "        w w w\n"
        "Left    Front   Right   Back\n"
        "o o o   g g g   r r r   b b b\n"
        "o o o   g g g   r r r   b b b\n"
        "o o o   g g g   r r r   b b b\n"
        "        Down\n"
        "        y y y\n"
        "        y y y\n"
        "        y y y");
  for (Color c : front_face_grid(s)) CHECK(c == Color::kGreen);
  CHECK(format_front_grid(front_face_grid(s)) ==
        "Row 1: [Green, Green, Green]\nRow 2: [Green, Green, Green]\nRow 3: [Green, Green, Green]");
}

TEST_CASE("round trips on 1000 seeded states") {
  Rng rng(1000);
  for (int i = 0; i < 1000; ++i) {
    const CubeState s = random_state(rng);
    CHECK(parse_net_text(to_net_text(s)) == s);
    CHECK(parse_facelet_string(to_facelet_string(s)) == s);
    CHECK(parse_front_grid(format_front_grid(front_face_grid(s))) == front_face_grid(s));
  }
}

TEST_CASE("serializations agree sticker by sticker") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const CubeState s = random_state(rng);
    const std::string letters = to_facelet_string(s);
    const std::string net = to_net_text(s);
    // Single-character words are the color tokens; labels are longer.
    std::string tokens;
    for (std::size_t i = 0; i < net.size(); ++i) {
      const bool starts = i == 0 || net[i - 1] == ' ' || net[i - 1] == '\n';
      const bool ends = i + 1 == net.size() || net[i + 1] == ' ' || net[i + 1] == '\n';
      if (net[i] != ' ' && net[i] != '\n' && starts && ends) tokens += net[i];
    }
    // Net order: U rows, then L F R B interleaved per row, then D rows.
    std::string expected;
    for (int k = 0; k < 9; ++k) expected += color_token(s.at(k));
    for (int r = 0; r < 3; ++r)
      for (Face f : {Face::kL, Face::kF, Face::kR, Face::kB})
        for (int c = 0; c < 3; ++c) expected += color_token(s.at(f, r, c));
    for (int k = 0; k < 9; ++k) expected += color_token(s.at(Face::kD, k / 3, k % 3));
    CHECK(tokens == expected);
    for (int k = 0; k < kStickerCount; ++k)
      CHECK(letters[k] == face_letter(face_of_color(s.at(k))));
    for (int k = 0; k < 9; ++k) CHECK(front_face_grid(s)[k] == s.at(Face::kF, k / 3, k % 3));
    for (char ch : letters) CHECK(std::string_view("URFDLB").find(ch) != std::string_view::npos);
  }
}

TEST_CASE("parsers report the offending position") {
  std::string net = to_net_text(CubeState());
  const std::size_t bad = net.find("g g g");
  net[bad] = 'x';
  try {
    parse_net_text(net);
    FAIL("expected MalformedText");
  } catch (const MalformedText& e) {
    CHECK(e.position() == bad);
  }
  try {
    parse_facelet_string("UUUUUUUUURRRRRRRRRFFFFFFFFFDDDDDDDDDLLLLLLLLLBBBBBBBBQ");
    FAIL("expected MalformedText");
  } catch (const MalformedText& e) {
    CHECK(e.position() == 53);
  }
  CHECK_THROWS_AS(parse_facelet_string("UUU"), MalformedText);
  CHECK_THROWS_AS(parse_net_text(to_net_text(CubeState()) + " w"), MalformedText);
  CHECK_THROWS_AS(parse_net_text(""), MalformedText);
  // Right tokens, wrong counts.
  std::string swapped = to_net_text(CubeState());
  swapped[swapped.find("g g g")] = 'w';
  CHECK_THROWS_AS(parse_net_text(swapped), MalformedText);
  CHECK_THROWS_AS(parse_front_grid("Row 1: [Green, Green]"), MalformedText);
  CHECK_THROWS_AS(parse_front_grid("Row 1: [Green, Green, Cyan]\nRow 2: [Green, Green, Green]\n"
                                   "Row 3: [Green, Green, Green]"),
                  MalformedText);
}

}  // namespace
}  // namespace cubeeval
