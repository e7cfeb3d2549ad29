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

// Text serializations of a cube state. All three are wire formats: prompts
// and episode files embed them byte for byte.
//
// Net text (tokens w y r o g b, no trailing spaces, no final newline):
//
//           Top
//           w w w
//           w w w
//           w w w
//   Left    Front   Right   Back
//   o o o   g g g   r r r   b b b
//   o o o   g g g   r r r   b b b
//   o o o   g g g   r r r   b b b
//           Down
//           y y y
//           y y y
//           y y y
//
// Facelet string: 54 letters U R F D L B naming the face whose center has
// each sticker's color, in sticker order.
//
// Front grid: three lines "Row k: [Color, Color, Color]" with full color
// words.

#ifndef CUBEEVAL_TEXTGEN_HPP_
#define CUBEEVAL_TEXTGEN_HPP_

#include <string>
#include <string_view>

#include "cubeeval/cube.hpp"

namespace cubeeval {

enum class StateFormat { kNet, kFacelets };

std::string_view state_format_name(StateFormat f);  // "net" or "facelets"
StateFormat state_format_from_name(std::string_view name);

std::string to_net_text(const CubeState& s);
std::string to_facelet_string(const CubeState& s);
std::string to_state_text(const CubeState& s, StateFormat format);

FaceGrid front_face_grid(const CubeState& s);
std::string format_front_grid(const FaceGrid& grid);

// Inverse parsers. Each throws MalformedText carrying the offset of the first
// offending token. Layouts that pass the token check but break the
// nine-per-color or center rule are reported at offset 0.
CubeState parse_net_text(std::string_view text);
CubeState parse_facelet_string(std::string_view text);
FaceGrid parse_front_grid(std::string_view text);

}  // namespace cubeeval

#endif  // CUBEEVAL_TEXTGEN_HPP_
