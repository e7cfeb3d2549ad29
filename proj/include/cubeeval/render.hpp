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

// Flat cube-net rendering. Faces sit in a 4x3 grid of slots laid out like
// the net text (Top above Front; Left, Front, Right, Back across; Down
// below), each with its name drawn above it in a fixed bitmap font.
//
//   face_size = 3 * cell + 2 * gap
//   slot_w    = face_size + 4 * gap
//   slot_h    = label + face_size + 4 * gap
//   image     = 4 * slot_w by 3 * slot_h
//
// Nothing but sticker cells and label glyphs is drawn over the background.

#ifndef CUBEEVAL_RENDER_HPP_
#define CUBEEVAL_RENDER_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cubeeval/cube.hpp"

namespace cubeeval {

struct RenderConfig {
  int cell_px = 40;
  int gap_px = 2;
  int label_height_px = 24;
  Rgb background{128, 128, 128};
};

inline constexpr int kRendererVersion = 1;

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Rgb pixel(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
};

struct NetGeometry {
  int cell, gap, label;
  int face_size, slot_w, slot_h, width, height;

  // Slot (column, row) of a face within the 4x3 grid.
  static std::pair<int, int> slot(Face f);
  // Top-left pixel of a sticker cell.
  std::pair<int, int> cell_origin(Face f, int row, int col) const;
  // Top-left pixel of a face's label box.
  std::pair<int, int> label_origin(Face f) const;
};

// Throws Error(kConfigError) for non-positive sizes or a label box shorter
// than the 7-pixel font.
NetGeometry net_geometry(const RenderConfig& cfg);

std::string_view face_label(Face f);  // Top Right Front Down Left Back

Image render_net_image(const CubeState& s, const RenderConfig& cfg = {});
// PNG bytes for the rendered net.
std::string render_net(const CubeState& s, const RenderConfig& cfg = {});

std::string encode_png(const Image& image);
// Throws Error(kIoError) on bytes that are not a readable PNG.
Image decode_png(std::string_view bytes);

}  // namespace cubeeval

#endif  // CUBEEVAL_RENDER_HPP_
