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
#include "tlbench/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "tlbench/error.hpp"

namespace tlbench::augment {

namespace {

int read_header_int(std::istream &in) {
  int value = 0;
  while (true) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  if (!(in >> value)) throw_parse("malformed PNM header");
  return value;
}

}  // namespace

Image read_pnm(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open image '" + path.string() + "'");
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw_parse("'" + path.string() + "' is not a binary PGM/PPM file");
  }
  const int width = read_header_int(in);
  const int height = read_header_int(in);
  const int maxval = read_header_int(in);
  if (width < 1 || height < 1 || maxval != 255) throw_parse("unsupported PNM geometry in '" + path.string() + "'");
  in.get();
  Image img(height, width, channels);
  in.read(reinterpret_cast<char *>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw_parse("truncated pixel data in '" + path.string() + "'");
  return img;
}

void write_pnm(const std::filesystem::path &path, const Image &image) {
  if (!image.valid()) throw_validation("cannot write an invalid image");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write image '" + path.string() + "'");
  out << (image.channels == 1 ? "P5" : "P6") << '\n' << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char *>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

Image resize_bilinear(const Image &image, int height, int width) {
  if (height < 1 || width < 1) throw_validation("resize target must be positive");
  if (image.height == height && image.width == width) return image;
  Image out(height, width, image.channels);
  const double sy = static_cast<double>(image.height) / height;
  const double sx = static_cast<double>(image.width) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(image.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(image.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < image.channels; ++c) {
        const double top = image.at(y0, x0, c) * (1 - wx) + image.at(y0, x1, c) * wx;
        const double bottom = image.at(y1, x0, c) * (1 - wx) + image.at(y1, x1, c) * wx;
        const double v = top * (1 - wy) + bottom * wy;
        out.at(y, x, c) = static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace tlbench::augment
