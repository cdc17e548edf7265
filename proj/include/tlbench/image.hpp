/**
 * Copyright 2026 The tlbench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef TLBENCH_IMAGE_HPP_
#define TLBENCH_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

namespace tlbench::augment {

// Interleaved HWC image with 8-bit samples; 1 or 3 channels.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<uint8_t> pixels;

  Image() = default;
  Image(int h, int w, int c, uint8_t fill = 0)
      : height(h), width(w), channels(c), pixels(static_cast<size_t>(h) * w * c, fill) {}

  bool valid() const {
    return height >= 1 && width >= 1 && (channels == 1 || channels == 3) &&
           pixels.size() == static_cast<size_t>(height) * width * channels;
  }
  uint8_t &at(int y, int x, int c) { return pixels[(static_cast<size_t>(y) * width + x) * channels + c]; }
  uint8_t at(int y, int x, int c) const { return pixels[(static_cast<size_t>(y) * width + x) * channels + c]; }

  bool operator==(const Image &) const = default;
};

// Binary PNM (P5 grayscale / P6 RGB, maxval 255).
Image read_pnm(const std::filesystem::path &path);
void write_pnm(const std::filesystem::path &path, const Image &image);

// Bilinear resize with half-pixel centres; identity when the size matches.
Image resize_bilinear(const Image &image, int height, int width);

}  // namespace tlbench::augment

#endif  // TLBENCH_IMAGE_HPP_
