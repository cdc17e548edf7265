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
#ifndef TLBENCH_QUANT_HPP_
#define TLBENCH_QUANT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tlbench::quant {

enum class PrecisionScheme { kBaselineFp32, kPtqInt8, kQatInt8, kFp16 };

std::string_view to_string(PrecisionScheme scheme);
PrecisionScheme scheme_from_string(std::string_view name);

// Per-tensor asymmetric affine parameters: x ~ (q - zero_point) * scale.
struct QuantParams {
  double scale = 1.0;
  int32_t zero_point = 0;
  int bits = 8;
  bool is_signed = true;

  int32_t qmin() const { return is_signed ? -(1 << (bits - 1)) : 0; }
  int32_t qmax() const { return is_signed ? (1 << (bits - 1)) - 1 : (1 << bits) - 1; }
  void validate() const;
  bool operator==(const QuantParams &) const = default;
};

// Running min/max over observed values. Merging is associative and commutative.
struct CalibrationStats {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  uint64_t count = 0;

  void observe(double v) {
    min = std::min(min, v);
    max = std::max(max, v);
    ++count;
  }
  void observe(std::span<const float> values);
  void observe(std::span<const double> values);
  void merge(const CalibrationStats &other);
  bool empty() const { return count == 0; }
  // Throws when nothing has been observed.
  QuantParams params(int bits = 8, bool is_signed = true) const;
};

// Parameters for an observed [min, max]. The range is widened to contain 0 so
// that zero is exactly representable; a constant input yields scale 1 and
// zero_point 0.
QuantParams params_from_range(double min, double max, int bits = 8, bool is_signed = true);

QuantParams calibrate_minmax(const std::vector<std::vector<double>> &samples);

// Round-half-to-even under the default floating-point environment.
inline int32_t quantize_value(double x, const QuantParams &qp) {
  const double r = std::nearbyint(x / qp.scale) + qp.zero_point;
  return static_cast<int32_t>(std::clamp(r, static_cast<double>(qp.qmin()), static_cast<double>(qp.qmax())));
}
inline double dequantize_value(int32_t q, const QuantParams &qp) {
  return static_cast<double>(q - qp.zero_point) * qp.scale;
}
inline double fake_quant_value(double x, const QuantParams &qp) { return dequantize_value(quantize_value(x, qp), qp); }
// Straight-through gradient: 1 where x lands inside the unclamped range.
inline bool fake_quant_passes(double x, const QuantParams &qp) {
  const double r = std::nearbyint(x / qp.scale) + qp.zero_point;
  return r >= qp.qmin() && r <= qp.qmax();
}

std::vector<int32_t> quantize(std::span<const double> x, const QuantParams &qp);
std::vector<double> dequantize(std::span<const int32_t> q, const QuantParams &qp);
std::vector<double> fake_quant(std::span<const double> x, const QuantParams &qp);
std::vector<uint8_t> fake_quant_grad_mask(std::span<const double> x, const QuantParams &qp);

// Round-to-nearest-even to IEEE binary16; overflow goes to infinity.
double cast_fp16(double x);
std::vector<double> cast_fp16(std::span<const double> x);

struct QuantErrorReport {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  // Absent when the signal power is zero; +inf when the error power is zero.
  std::optional<double> sqnr_db;
};

QuantErrorReport quant_error_report(std::span<const double> x, const QuantParams &qp);

nlohmann::json to_json(const QuantParams &qp);
QuantParams quant_params_from_json(const nlohmann::json &j);

}  // namespace tlbench::quant

#endif  // TLBENCH_QUANT_HPP_
