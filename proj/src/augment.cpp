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
#include "tlbench/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>

#include "tlbench/error.hpp"

namespace tlbench::augment {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<OpKind, std::string_view>, 12> kKindNames{{
    {OpKind::kRotate, "rotate"},
    {OpKind::kFlipH, "flip_h"},
    {OpKind::kFlipV, "flip_v"},
    {OpKind::kRandomCrop, "random_crop"},
    {OpKind::kGaussianBlur, "gaussian_blur"},
    {OpKind::kMotionBlur, "motion_blur"},
    {OpKind::kMedianBlur, "median_blur"},
    {OpKind::kGridDistortion, "grid_distortion"},
    {OpKind::kOpticalDistortion, "optical_distortion"},
    {OpKind::kSharpen, "sharpen"},
    {OpKind::kCoarseDropout, "coarse_dropout"},
    {OpKind::kAffine, "affine"},
}};

constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

inline int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

inline uint8_t to_u8(double v) { return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

// Inverse-mapped warp: `source(x, y, sx, sy)` yields the source coordinate
// for output pixel (x, y). Bilinear sampling, reflect-101 border.
Image warp(const Image &img, const std::function<void(double, double, double &, double &)> &source) {
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double sx = 0;
      double sy = 0;
      source(x, y, sx, sy);
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      const double wx = sx - fx;
      const double wy = sy - fy;
      const int x0 = reflect101(static_cast<int>(fx), img.width);
      const int x1 = reflect101(static_cast<int>(fx) + 1, img.width);
      const int y0 = reflect101(static_cast<int>(fy), img.height);
      const int y1 = reflect101(static_cast<int>(fy) + 1, img.height);
      for (int c = 0; c < img.channels; ++c) {
        double v = img.at(y0, x0, c) * (1 - wx) * (1 - wy);
        if (wx != 0.0) v += img.at(y0, x1, c) * wx * (1 - wy);
        if (wy != 0.0) v += img.at(y1, x0, c) * (1 - wx) * wy;
        if (wx != 0.0 && wy != 0.0) v += img.at(y1, x1, c) * wx * wy;
        out.at(y, x, c) = to_u8(v);
      }
    }
  }
  return out;
}

// Applies a square kernel (row-major, odd side) with reflect-101 border.
Image convolve(const Image &img, const std::vector<double> &kernel, int side) {
  const int r = side / 2;
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0;
        for (int ky = -r; ky <= r; ++ky) {
          const int yy = reflect101(y + ky, img.height);
          for (int kx = -r; kx <= r; ++kx) {
            const double w = kernel[static_cast<size_t>((ky + r) * side + (kx + r))];
            if (w != 0.0) acc += w * img.at(yy, reflect101(x + kx, img.width), c);
          }
        }
        out.at(y, x, c) = to_u8(acc);
      }
    }
  }
  return out;
}

int draw_odd(const Range &range, RngStream &rng) {
  std::vector<int> odd;
  for (int k = static_cast<int>(std::ceil(range.lo)); k <= static_cast<int>(std::floor(range.hi)); ++k)
    if (k % 2 == 1) odd.push_back(k);
  if (odd.empty()) return 1;
  return odd[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(odd.size()) - 1))];
}

Image rotate(const Image &img, const AugParams &p, RngStream &rng) {
  const double theta = deg2rad(rng.uniform(p.angle_deg.lo, p.angle_deg.hi));
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cx = (img.width - 1) / 2.0;
  const double cy = (img.height - 1) / 2.0;
  return warp(img, [&](double x, double y, double &sx, double &sy) {
    const double dx = x - cx;
    const double dy = y - cy;
    sx = cs * dx + sn * dy + cx;
    sy = -sn * dx + cs * dy + cy;
  });
}

Image flip(const Image &img, bool horizontal) {
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = horizontal ? img.at(y, img.width - 1 - x, c) : img.at(img.height - 1 - y, x, c);
  return out;
}

Image random_crop(const Image &img, const AugParams &p, RngStream &rng) {
  const double side = std::sqrt(rng.uniform(p.crop_area.lo, p.crop_area.hi));
  const int ch = std::clamp(static_cast<int>(std::lround(img.height * side)), 1, img.height);
  const int cw = std::clamp(static_cast<int>(std::lround(img.width * side)), 1, img.width);
  const int oy = static_cast<int>(rng.uniform_int(0, img.height - ch));
  const int ox = static_cast<int>(rng.uniform_int(0, img.width - cw));
  Image crop(ch, cw, img.channels);
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x)
      for (int c = 0; c < img.channels; ++c) crop.at(y, x, c) = img.at(oy + y, ox + x, c);
  return resize_bilinear(crop, img.height, img.width);
}

Image gaussian_blur(const Image &img, const AugParams &p, RngStream &rng) {
  const int k = draw_odd(p.kernel, rng);
  const double sigma = 0.3 * ((k - 1) * 0.5 - 1) + 0.8;
  std::vector<double> g(static_cast<size_t>(k));
  double total = 0;
  for (int i = 0; i < k; ++i) {
    const double d = i - k / 2;
    g[static_cast<size_t>(i)] = std::exp(-d * d / (2 * sigma * sigma));
    total += g[static_cast<size_t>(i)];
  }
  std::vector<double> kernel(static_cast<size_t>(k * k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      kernel[static_cast<size_t>(i * k + j)] = g[static_cast<size_t>(i)] * g[static_cast<size_t>(j)] / (total * total);
  return convolve(img, kernel, k);
}

Image motion_blur(const Image &img, const AugParams &p, RngStream &rng) {
  const int k = std::max(3, draw_odd(p.kernel, rng));
  const double angle = rng.uniform(0.0, std::numbers::pi);
  std::vector<double> kernel(static_cast<size_t>(k * k), 0.0);
  const int r = k / 2;
  for (int t = -4 * r; t <= 4 * r; ++t) {
    const double s = t / 4.0;
    const int x = static_cast<int>(std::lround(r + s * std::cos(angle)));
    const int y = static_cast<int>(std::lround(r + s * std::sin(angle)));
    kernel[static_cast<size_t>(std::clamp(y, 0, k - 1) * k + std::clamp(x, 0, k - 1))] = 1.0;
  }
  double total = 0;
  for (double w : kernel) total += w;
  for (double &w : kernel) w /= total;
  return convolve(img, kernel, k);
}

Image median_blur(const Image &img, const AugParams &p, RngStream &rng) {
  const int k = draw_odd(p.kernel, rng);
  const int r = k / 2;
  Image out(img.height, img.width, img.channels);
  std::vector<uint8_t> window(static_cast<size_t>(k * k));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        size_t n = 0;
        for (int ky = -r; ky <= r; ++ky)
          for (int kx = -r; kx <= r; ++kx)
            window[n++] = img.at(reflect101(y + ky, img.height), reflect101(x + kx, img.width), c);
        std::nth_element(window.begin(), window.begin() + static_cast<long>(n / 2), window.begin() + static_cast<long>(n));
        out.at(y, x, c) = window[n / 2];
      }
    }
  }
  return out;
}

// Piecewise-linear remap of one axis: grid cells of equal output width map to
// source cells whose widths are scaled by (1 + d_i), renormalised to the axis.
std::vector<double> grid_axis_map(int n, int steps, double limit, RngStream &rng) {
  std::vector<double> src_edges(static_cast<size_t>(steps) + 1, 0.0);
  for (int i = 0; i < steps; ++i)
    src_edges[static_cast<size_t>(i) + 1] = src_edges[static_cast<size_t>(i)] + 1.0 + rng.uniform(-limit, limit);
  const double total = src_edges.back();
  std::vector<double> map(static_cast<size_t>(n));
  const double extent = n - 1;
  for (int x = 0; x < n; ++x) {
    const double u = extent > 0 ? x / extent * steps : 0.0;
    const int cell = std::min(static_cast<int>(u), steps - 1);
    const double frac = u - cell;
    const double s = src_edges[static_cast<size_t>(cell)] +
                     frac * (src_edges[static_cast<size_t>(cell) + 1] - src_edges[static_cast<size_t>(cell)]);
    map[static_cast<size_t>(x)] = s / total * extent;
  }
  return map;
}

Image grid_distortion(const Image &img, const AugParams &p, RngStream &rng) {
  const auto mx = grid_axis_map(img.width, p.grid_steps, p.distort_limit, rng);
  const auto my = grid_axis_map(img.height, p.grid_steps, p.distort_limit, rng);
  return warp(img, [&](double x, double y, double &sx, double &sy) {
    sx = mx[static_cast<size_t>(x)];
    sy = my[static_cast<size_t>(y)];
  });
}

Image optical_distortion(const Image &img, const AugParams &p, RngStream &rng) {
  const double k = rng.uniform(-p.distort_limit, p.distort_limit);
  const double cx = (img.width - 1) / 2.0;
  const double cy = (img.height - 1) / 2.0;
  const double norm = std::max({cx, cy, 1.0});
  return warp(img, [&](double x, double y, double &sx, double &sy) {
    const double dx = (x - cx) / norm;
    const double dy = (y - cy) / norm;
    const double f = 1.0 + k * (dx * dx + dy * dy);
    sx = cx + dx * f * norm;
    sy = cy + dy * f * norm;
  });
}

Image sharpen(const Image &img, const AugParams &p, RngStream &rng) {
  const double alpha = rng.uniform(p.sharpen_alpha.lo, p.sharpen_alpha.hi);
  const double lightness = rng.uniform(p.sharpen_lightness.lo, p.sharpen_lightness.hi);
  std::vector<double> kernel(9, -1.0 * alpha);
  kernel[4] = (1.0 - alpha) + alpha * (8.0 + lightness);
  return convolve(img, kernel, 3);
}

Image coarse_dropout(const Image &img, const AugParams &p, RngStream &rng) {
  Image out = img;
  const int holes = static_cast<int>(rng.uniform_int(p.min_holes, p.max_holes));
  const int max_h = std::max(1, static_cast<int>(img.height * p.max_hole_fraction));
  const int max_w = std::max(1, static_cast<int>(img.width * p.max_hole_fraction));
  const auto fill = static_cast<uint8_t>(p.fill_value);
  for (int i = 0; i < holes; ++i) {
    const int hh = static_cast<int>(rng.uniform_int(1, max_h));
    const int hw = static_cast<int>(rng.uniform_int(1, max_w));
    const int y0 = static_cast<int>(rng.uniform_int(0, img.height - hh));
    const int x0 = static_cast<int>(rng.uniform_int(0, img.width - hw));
    for (int y = y0; y < y0 + hh; ++y)
      for (int x = x0; x < x0 + hw; ++x)
        for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = fill;
  }
  return out;
}

Image affine(const Image &img, const AugParams &p, RngStream &rng) {
  const double tx = rng.uniform(-p.translate_fraction, p.translate_fraction) * img.width;
  const double ty = rng.uniform(-p.translate_fraction, p.translate_fraction) * img.height;
  const double shear = std::tan(deg2rad(rng.uniform(-p.shear_deg, p.shear_deg)));
  const double cy = (img.height - 1) / 2.0;
  // Forward map: x' = x + shear * (y - cy) + tx, y' = y + ty.
  return warp(img, [&](double x, double y, double &sx, double &sy) {
    sy = y - ty;
    sx = x - tx - shear * (sy - cy);
  });
}

}  // namespace

std::string_view to_string(OpKind kind) {
  for (const auto &[k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

OpKind op_kind_from_string(std::string_view name) {
  for (const auto &[k, n] : kKindNames)
    if (n == name) return k;
  throw_validation("unknown augmentation operator '" + std::string(name) + "'");
}

void AugOp::validate() const {
  const std::string who(to_string(kind));
  if (!(p >= 0.0 && p <= 1.0)) throw_validation(who + ": probability must lie in [0, 1]");
  auto check_range = [&](const Range &r, const char *what) {
    if (!(r.lo <= r.hi)) throw_validation(who + ": " + what + " range is inverted");
  };
  const auto &q = params;
  switch (kind) {
    case OpKind::kRotate:
      check_range(q.angle_deg, "angle");
      break;
    case OpKind::kRandomCrop:
      check_range(q.crop_area, "crop area");
      if (!(q.crop_area.lo > 0.0 && q.crop_area.hi <= 1.0)) throw_validation(who + ": crop area must lie in (0, 1]");
      break;
    case OpKind::kGaussianBlur:
    case OpKind::kMotionBlur:
    case OpKind::kMedianBlur:
      check_range(q.kernel, "kernel");
      if (q.kernel.lo < 1.0) throw_validation(who + ": kernel sizes must be >= 1");
      break;
    case OpKind::kGridDistortion:
      if (q.grid_steps < 1) throw_validation(who + ": grid_steps must be >= 1");
      [[fallthrough]];
    case OpKind::kOpticalDistortion:
      if (!(q.distort_limit >= 0.0 && q.distort_limit < 1.0)) throw_validation(who + ": distort_limit must lie in [0, 1)");
      break;
    case OpKind::kSharpen:
      check_range(q.sharpen_alpha, "alpha");
      check_range(q.sharpen_lightness, "lightness");
      if (q.sharpen_alpha.lo < 0.0 || q.sharpen_alpha.hi > 1.0) throw_validation(who + ": alpha must lie in [0, 1]");
      break;
    case OpKind::kCoarseDropout:
      if (q.min_holes < 0 || q.max_holes < std::max(1, q.min_holes))
        throw_validation(who + ": hole counts must satisfy 0 <= min <= max, max >= 1");
      if (!(q.max_hole_fraction > 0.0 && q.max_hole_fraction <= 1.0))
        throw_validation(who + ": max_hole_fraction must lie in (0, 1]");
      if (q.fill_value < 0 || q.fill_value > 255) throw_validation(who + ": fill_value must lie in [0, 255]");
      break;
    case OpKind::kAffine:
      if (!(q.translate_fraction >= 0.0 && q.translate_fraction < 1.0))
        throw_validation(who + ": translate_fraction must lie in [0, 1)");
      if (!(q.shear_deg >= 0.0 && q.shear_deg < 89.0)) throw_validation(who + ": shear_deg must lie in [0, 89)");
      break;
    case OpKind::kFlipH:
    case OpKind::kFlipV:
      break;
  }
}

void AugPipeline::validate() const {
  if (resize_height < 1 || resize_width < 1) throw_validation("resize target must be positive");
  for (const auto &op : ops) op.validate();
}

RngStream AugPipeline::stream_for(uint64_t sample_index, uint64_t epoch) const {
  return RngStream(derive_seed(seed, sample_index, epoch));
}

std::vector<OpKind> AugPipeline::kinds() const {
  std::vector<OpKind> out;
  for (const auto &op : ops) out.push_back(op.kind);
  return out;
}

Image apply_op(const Image &image, const AugOp &op, RngStream &stream) {
  if (!image.valid()) throw_validation("apply_op: invalid image");
  switch (op.kind) {
    case OpKind::kRotate:
      return rotate(image, op.params, stream);
    case OpKind::kFlipH:
      return flip(image, true);
    case OpKind::kFlipV:
      return flip(image, false);
    case OpKind::kRandomCrop:
      return random_crop(image, op.params, stream);
    case OpKind::kGaussianBlur:
      return gaussian_blur(image, op.params, stream);
    case OpKind::kMotionBlur:
      return motion_blur(image, op.params, stream);
    case OpKind::kMedianBlur:
      return median_blur(image, op.params, stream);
    case OpKind::kGridDistortion:
      return grid_distortion(image, op.params, stream);
    case OpKind::kOpticalDistortion:
      return optical_distortion(image, op.params, stream);
    case OpKind::kSharpen:
      return sharpen(image, op.params, stream);
    case OpKind::kCoarseDropout:
      return coarse_dropout(image, op.params, stream);
    case OpKind::kAffine:
      return affine(image, op.params, stream);
  }
  return image;
}

Image resize_only(const Image &image, const AugPipeline &pipeline) {
  return resize_bilinear(image, pipeline.resize_height, pipeline.resize_width);
}

Image apply_pipeline(const Image &image, const AugPipeline &pipeline, RngStream &stream) {
  if (!image.valid()) throw_validation("apply_pipeline: invalid image");
  Image out = resize_only(image, pipeline);
  for (const auto &op : pipeline.ops) {
    const double u = stream.uniform();
    if (u < op.p) out = apply_op(out, op, stream);
  }
  return out;
}

AugPipeline norm_aug_policy(int img_h, int img_w, uint64_t seed) {
  if (img_h < 1 || img_w < 1) throw_validation("policy dimensions must be positive");
  AugPipeline p;
  p.resize_height = img_h;
  p.resize_width = img_w;
  p.seed = seed;
  p.ops = {
      {OpKind::kRandomCrop, 0.5, {}},
      {OpKind::kRotate, 0.5, {}},
      {OpKind::kFlipH, 0.5, {}},
      {OpKind::kFlipV, 0.5, {}},
      {OpKind::kGaussianBlur, 0.3, {}},
  };
  return p;
}

AugPipeline extra_aug_policy(int img_h, int img_w, uint64_t seed) {
  AugPipeline p = norm_aug_policy(img_h, img_w, seed);
  const std::vector<AugOp> extra = {
      {OpKind::kMotionBlur, 0.2, {}},     {OpKind::kMedianBlur, 0.2, {}},
      {OpKind::kGridDistortion, 0.3, {}}, {OpKind::kOpticalDistortion, 0.3, {}},
      {OpKind::kSharpen, 0.3, {}},        {OpKind::kCoarseDropout, 0.3, {}},
      {OpKind::kAffine, 0.3, {}},
  };
  p.ops.insert(p.ops.end(), extra.begin(), extra.end());
  return p;
}

AugPipeline policy_by_name(std::string_view name, int img_h, int img_w, uint64_t seed) {
  if (name == "norm_aug") return norm_aug_policy(img_h, img_w, seed);
  if (name == "extra_aug") return extra_aug_policy(img_h, img_w, seed);
  throw_validation("unknown augmentation policy '" + std::string(name) + "'");
}

namespace {

json range_json(const Range &r) { return json::array({r.lo, r.hi}); }

Range range_from(const json &j, const char *key, Range fallback) {
  if (!j.contains(key)) return fallback;
  const auto &a = j.at(key);
  if (!a.is_array() || a.size() != 2) throw_parse(std::string("'") + key + "' must be a [lo, hi] pair");
  return {a[0].get<double>(), a[1].get<double>()};
}

}  // namespace

json to_json(const AugPipeline &pipeline) {
  json ops = json::array();
  for (const auto &op : pipeline.ops) {
    json o = {{"kind", std::string(to_string(op.kind))}, {"p", op.p}};
    const auto &q = op.params;
    switch (op.kind) {
      case OpKind::kRotate:
        o["angle_deg"] = range_json(q.angle_deg);
        break;
      case OpKind::kRandomCrop:
        o["crop_area"] = range_json(q.crop_area);
        break;
      case OpKind::kGaussianBlur:
      case OpKind::kMotionBlur:
      case OpKind::kMedianBlur:
        o["kernel"] = range_json(q.kernel);
        break;
      case OpKind::kGridDistortion:
        o["grid_steps"] = q.grid_steps;
        o["distort_limit"] = q.distort_limit;
        break;
      case OpKind::kOpticalDistortion:
        o["distort_limit"] = q.distort_limit;
        break;
      case OpKind::kSharpen:
        o["alpha"] = range_json(q.sharpen_alpha);
        o["lightness"] = range_json(q.sharpen_lightness);
        break;
      case OpKind::kCoarseDropout:
        o["min_holes"] = q.min_holes;
        o["max_holes"] = q.max_holes;
        o["max_hole_fraction"] = q.max_hole_fraction;
        o["fill_value"] = q.fill_value;
        break;
      case OpKind::kAffine:
        o["translate_fraction"] = q.translate_fraction;
        o["shear_deg"] = q.shear_deg;
        break;
      case OpKind::kFlipH:
      case OpKind::kFlipV:
        break;
    }
    ops.push_back(std::move(o));
  }
  return {{"resize", {pipeline.resize_height, pipeline.resize_width}}, {"seed", pipeline.seed}, {"ops", ops}};
}

AugPipeline pipeline_from_json(const json &j) {
  AugPipeline p;
  try {
    const auto &resize = j.at("resize");
    p.resize_height = resize.at(0).get<int>();
    p.resize_width = resize.at(1).get<int>();
    p.seed = j.value("seed", uint64_t{0});
    for (const auto &o : j.at("ops")) {
      AugOp op;
      op.kind = op_kind_from_string(o.at("kind").get<std::string>());
      op.p = o.at("p").get<double>();
      auto &q = op.params;
      const AugParams d;
      q.angle_deg = range_from(o, "angle_deg", d.angle_deg);
      q.crop_area = range_from(o, "crop_area", d.crop_area);
      q.kernel = range_from(o, "kernel", d.kernel);
      q.grid_steps = o.value("grid_steps", d.grid_steps);
      q.distort_limit = o.value("distort_limit", d.distort_limit);
      q.sharpen_alpha = range_from(o, "alpha", d.sharpen_alpha);
      q.sharpen_lightness = range_from(o, "lightness", d.sharpen_lightness);
      q.min_holes = o.value("min_holes", d.min_holes);
      q.max_holes = o.value("max_holes", d.max_holes);
      q.max_hole_fraction = o.value("max_hole_fraction", d.max_hole_fraction);
      q.fill_value = o.value("fill_value", d.fill_value);
      q.translate_fraction = o.value("translate_fraction", d.translate_fraction);
      q.shear_deg = o.value("shear_deg", d.shear_deg);
      p.ops.push_back(op);
    }
  } catch (const json::exception &e) {
    throw_parse(std::string("augmentation pipeline: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace tlbench::augment
