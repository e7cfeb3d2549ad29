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

#include "cubeeval/textgen.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <vector>

#include "cubeeval/error.hpp"

namespace cubeeval {
namespace {

constexpr int kColumn = 8;

struct Token {
  std::string_view text;
  std::size_t offset;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back({text.substr(start, i - start), start});
  }
  return out;
}

std::string face_row(const CubeState& s, Face f, int row) {
  std::string out;
  for (int c = 0; c < 3; ++c) {
    if (c) out += ' ';
    out += color_token(s.at(f, row, c));
  }
  return out;
}

std::string pad(std::string text) {
  text.resize(kColumn, ' ');
  return text;
}

void rstrip(std::string& line) {
  while (!line.empty() && line.back() == ' ') line.pop_back();
}

CubeState checked_state(const CubeState::Stickers& st) {
  try {
    return CubeState::from_stickers(st);
  } catch (const Error& e) {
    throw MalformedText(0, e.what());
  }
}

}  // namespace

std::string_view state_format_name(StateFormat f) {
  return f == StateFormat::kNet ? "net" : "facelets";
}

StateFormat state_format_from_name(std::string_view name) {
  if (name == "net") return StateFormat::kNet;
  if (name == "facelets") return StateFormat::kFacelets;
  throw Error(ErrorCode::kConfigError, "unknown state format '" + std::string(name) + "'");
}

std::string to_net_text(const CubeState& s) {
  const std::string indent(kColumn, ' ');
  std::vector<std::string> lines;
  lines.push_back(indent + "Top");
  for (int r = 0; r < 3; ++r) lines.push_back(indent + face_row(s, Face::kU, r));
  lines.push_back(pad("Left") + pad("Front") + pad("Right") + "Back");
  for (int r = 0; r < 3; ++r)
    lines.push_back(pad(face_row(s, Face::kL, r)) + pad(face_row(s, Face::kF, r)) +
                    pad(face_row(s, Face::kR, r)) + face_row(s, Face::kB, r));
  lines.push_back(indent + "Down");
  for (int r = 0; r < 3; ++r) lines.push_back(indent + face_row(s, Face::kD, r));
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    rstrip(lines[i]);
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

std::string to_facelet_string(const CubeState& s) {
  std::string out;
  out.reserve(kStickerCount);
  for (Color c : s.stickers()) out += face_letter(face_of_color(c));
  return out;
}

std::string to_state_text(const CubeState& s, StateFormat format) {
  return format == StateFormat::kNet ? to_net_text(s) : to_facelet_string(s);
}

FaceGrid front_face_grid(const CubeState& s) { return s.face(Face::kF); }

std::string format_front_grid(const FaceGrid& grid) {
  std::string out;
  for (int r = 0; r < 3; ++r) {
    if (r) out += '\n';
    out += "Row " + std::to_string(r + 1) + ": [";
    for (int c = 0; c < 3; ++c) {
      if (c) out += ", ";
      out += color_name(grid[r * 3 + c]);
    }
    out += ']';
  }
  return out;
}

CubeState parse_net_text(std::string_view text) {
  const std::vector<Token> tokens = tokenize(text);
  std::size_t next = 0;
  auto take = [&](std::string_view what) -> const Token& {
    if (next >= tokens.size()) throw MalformedText(text.size(), "expected " + std::string(what));
    return tokens[next++];
  };
  auto expect_label = [&](std::string_view label) {
    const Token& t = take(label);
    if (t.text != label)
      throw MalformedText(t.offset, "expected label '" + std::string(label) + "'");
  };
  CubeState::Stickers st{};
  auto read_cell = [&](Face f, int r, int c) {
    const Token& t = take("color token");
    std::optional<Color> color;
    if (t.text.size() == 1) color = color_from_token(t.text[0]);
    if (!color) throw MalformedText(t.offset, "unknown color token '" + std::string(t.text) + "'");
    st[sticker_index(f, r, c)] = *color;
  };
  expect_label("Top");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) read_cell(Face::kU, r, c);
  for (std::string_view label : {"Left", "Front", "Right", "Back"}) expect_label(label);
  for (int r = 0; r < 3; ++r)
    for (Face f : {Face::kL, Face::kF, Face::kR, Face::kB})
      for (int c = 0; c < 3; ++c) read_cell(f, r, c);
  expect_label("Down");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) read_cell(Face::kD, r, c);
  if (next < tokens.size()) throw MalformedText(tokens[next].offset, "trailing text after net");
  return checked_state(st);
}

CubeState parse_facelet_string(std::string_view text) {
  CubeState::Stickers st{};
  for (std::size_t i = 0; i < text.size() && i < kStickerCount; ++i) {
    auto face = face_from_letter(text[i]);
    if (!face) throw MalformedText(i, "unknown facelet letter");
    st[i] = face_color(*face);
  }
  if (text.size() != kStickerCount)
    throw MalformedText(std::min<std::size_t>(text.size(), kStickerCount),
                        "facelet string must have 54 letters");
  return checked_state(st);
}

FaceGrid parse_front_grid(std::string_view text) {
  FaceGrid grid{};
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) { throw MalformedText(pos, why); };
  auto literal = [&](std::string_view lit) {
    if (text.substr(pos, lit.size()) != lit) fail("expected '" + std::string(lit) + "'");
    pos += lit.size();
  };
  for (int r = 0; r < 3; ++r) {
    if (r) literal("\n");
    literal("Row " + std::to_string(r + 1) + ": [");
    for (int c = 0; c < 3; ++c) {
      if (c) literal(", ");
      std::size_t end = pos;
      while (end < text.size() && std::isalpha(static_cast<unsigned char>(text[end]))) ++end;
      const std::string_view word = text.substr(pos, end - pos);
      auto color = color_from_name(word);
      if (!color || color_name(*color) != word) fail("unknown color word");
      grid[r * 3 + c] = *color;
      pos = end;
    }
    literal("]");
  }
  if (pos != text.size()) fail("trailing text after grid");
  return grid;
}

}  // namespace cubeeval
