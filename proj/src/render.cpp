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

#include "cubeeval/render.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <csetjmp>
#include <cstring>

#include "cubeeval/error.hpp"

namespace cubeeval {
namespace {

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;
constexpr Rgb kInk{0, 0, 0};

struct Glyph {
  char ch;
  std::array<const char*, kGlyphH> rows;
};

// Only the letters of the six face labels.
constexpr Glyph kFont[] = {
    {'B', {"11110", "10001", "10001", "11110", "10001", "10001", "11110"}},
    {'D', {"11100", "10010", "10001", "10001", "10001", "10010", "11100"}},
    {'F', {"11111", "10000", "10000", "11110", "10000", "10000", "10000"}},
    {'L', {"10000", "10000", "10000", "10000", "10000", "10000", "11111"}},
    {'R', {"11110", "10001", "10001", "11110", "10100", "10010", "10001"}},
    {'T', {"11111", "00100", "00100", "00100", "00100", "00100", "00100"}},
    {'a', {"00000", "00000", "01110", "00001", "01111", "10001", "01111"}},
    {'c', {"00000", "00000", "01110", "10000", "10000", "10001", "01110"}},
    {'e', {"00000", "00000", "01110", "10001", "11111", "10000", "01110"}},
    {'f', {"00110", "01001", "01000", "11100", "01000", "01000", "01000"}},
    {'g', {"00000", "01111", "10001", "10001", "01111", "00001", "01110"}},
    {'h', {"10000", "10000", "10110", "11001", "10001", "10001", "10001"}},
    {'i', {"00100", "00000", "01100", "00100", "00100", "00100", "01110"}},
    {'k', {"10000", "10000", "10010", "10100", "11000", "10100", "10010"}},
    {'n', {"00000", "00000", "10110", "11001", "10001", "10001", "10001"}},
    {'o', {"00000", "00000", "01110", "10001", "10001", "10001", "01110"}},
    {'p', {"00000", "00000", "11110", "10001", "11110", "10000", "10000"}},
    {'r', {"00000", "00000", "10110", "11001", "10000", "10000", "10000"}},
    {'t', {"01000", "01000", "11100", "01000", "01000", "01001", "00110"}},
    {'w', {"00000", "00000", "10001", "10001", "10101", "10101", "01010"}},
};

const Glyph& glyph(char ch) {
  for (const Glyph& g : kFont)
    if (g.ch == ch) return g;
  throw Error(ErrorCode::kConfigError, std::string("no glyph for '") + ch + "'");
}

// Clipped to the image.
void fill(Image& img, int x0, int y0, int w, int h, Rgb color) {
  for (int y = std::max(y0, 0); y < std::min(y0 + h, img.height); ++y)
    for (int x = std::max(x0, 0); x < std::min(x0 + w, img.width); ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * img.width + x) * 3;
      img.rgb[i] = color.r;
      img.rgb[i + 1] = color.g;
      img.rgb[i + 2] = color.b;
    }
}

void draw_text(Image& img, int x0, int y0, int scale, std::string_view text) {
  int x = x0;
  for (char ch : text) {
    const Glyph& g = glyph(ch);
    for (int r = 0; r < kGlyphH; ++r)
      for (int c = 0; c < kGlyphW; ++c)
        if (g.rows[r][c] == '1') fill(img, x + c * scale, y0 + r * scale, scale, scale, kInk);
    x += (kGlyphW + 1) * scale;
  }
}

struct PngWriteState {
  std::string* out;
};

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* state = static_cast<PngWriteState*>(png_get_io_ptr(png));
  state->out->append(reinterpret_cast<const char*>(data), length);
}

void png_flush_noop(png_structp) {}

}  // namespace

std::pair<int, int> NetGeometry::slot(Face f) {
  switch (f) {
    case Face::kU: return {1, 0};
    case Face::kL: return {0, 1};
    case Face::kF: return {1, 1};
    case Face::kR: return {2, 1};
    case Face::kB: return {3, 1};
    case Face::kD: return {1, 2};
  }
  return {0, 0};
}

std::pair<int, int> NetGeometry::label_origin(Face f) const {
  const auto [col, row] = slot(f);
  return {col * slot_w + 2 * gap, row * slot_h};
}

std::pair<int, int> NetGeometry::cell_origin(Face f, int r, int c) const {
  const auto [col, row] = slot(f);
  const int x0 = col * slot_w + 2 * gap;
  const int y0 = row * slot_h + label + 2 * gap;
  return {x0 + c * (cell + gap), y0 + r * (cell + gap)};
}

NetGeometry net_geometry(const RenderConfig& cfg) {
  if (cfg.cell_px <= 0 || cfg.gap_px < 0 || cfg.label_height_px < kGlyphH)
    throw Error(ErrorCode::kConfigError,
                "render sizes must be positive and the label box at least 7 px tall");
  NetGeometry g{};
  g.cell = cfg.cell_px;
  g.gap = cfg.gap_px;
  g.label = cfg.label_height_px;
  g.face_size = 3 * g.cell + 2 * g.gap;
  g.slot_w = g.face_size + 4 * g.gap;
  g.slot_h = g.label + g.face_size + 4 * g.gap;
  g.width = 4 * g.slot_w;
  g.height = 3 * g.slot_h;
  return g;
}

std::string_view face_label(Face f) {
  switch (f) {
    case Face::kU: return "Top";
    case Face::kR: return "Right";
    case Face::kF: return "Front";
    case Face::kD: return "Down";
    case Face::kL: return "Left";
    case Face::kB: return "Back";
  }
  return "";
}

Image render_net_image(const CubeState& s, const RenderConfig& cfg) {
  const NetGeometry g = net_geometry(cfg);
  Image img;
  img.width = g.width;
  img.height = g.height;
  img.rgb.resize(static_cast<std::size_t>(g.width) * g.height * 3);
  fill(img, 0, 0, g.width, g.height, cfg.background);
  const int scale = std::max(1, g.label / 10);
  for (Face f : kAllFaces) {
    const auto [lx, ly] = g.label_origin(f);
    draw_text(img, lx, ly + (g.label - kGlyphH * scale) / 2, scale, face_label(f));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        const auto [x, y] = g.cell_origin(f, r, c);
        fill(img, x, y, g.cell, g.cell, color_rgb(s.at(f, r, c)));
      }
  }
  return img;
}

std::string render_net(const CubeState& s, const RenderConfig& cfg) {
  return encode_png(render_net_image(s, cfg));
}

std::string encode_png(const Image& image) {
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::kIoError, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIoError, "PNG encoding failed");
  }
  PngWriteState state{&out};
  png_set_write_fn(png, &state, png_append, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_UP);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    png_write_row(png, const_cast<png_bytep>(image.rgb.data() +
                                             static_cast<std::size_t>(y) * image.width * 3));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_png(std::string_view bytes) {
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&pi, bytes.data(), bytes.size()))
    throw Error(ErrorCode::kIoError, std::string("PNG decode failed: ") + pi.message);
  pi.format = PNG_FORMAT_RGB;
  Image img;
  img.width = static_cast<int>(pi.width);
  img.height = static_cast<int>(pi.height);
  img.rgb.resize(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&pi);
    throw Error(ErrorCode::kIoError, std::string("PNG decode failed: ") + pi.message);
  }
  return img;
}

}  // namespace cubeeval
