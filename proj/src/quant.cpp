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
#include "tlbench/quant.hpp"

#include <algorithm>

#include "tlbench/error.hpp"

namespace tlbench::quant {

std::string_view to_string(PrecisionScheme scheme) {
  switch (scheme) {
    case PrecisionScheme::kBaselineFp32:
      return "baseline_fp32";
    case PrecisionScheme::kPtqInt8:
      return "ptq_int8";
    case PrecisionScheme::kQatInt8:
      return "qat_int8";
    case PrecisionScheme::kFp16:
      return "fp16";
  }
  return "unknown";
}

PrecisionScheme scheme_from_string(std::string_view name) {
  for (auto s : {PrecisionScheme::kBaselineFp32, PrecisionScheme::kPtqInt8, PrecisionScheme::kQatInt8,
                 PrecisionScheme::kFp16})
    if (to_string(s) == name) return s;
  throw_validation("unknown precision scheme '" + std::string(name) + "'");
}

void QuantParams::validate() const {
  if (bits < 2 || bits > 16) throw_validation("quantization bits must lie in [2, 16]");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw_validation("quantization scale must be positive and finite");
  if (zero_point < qmin() || zero_point > qmax()) throw_validation("zero_point outside the quantized range");
}

void CalibrationStats::observe(std::span<const float> values) {
  for (float v : values) observe(static_cast<double>(v));
}

void CalibrationStats::observe(std::span<const double> values) {
  for (double v : values) observe(v);
}

void CalibrationStats::merge(const CalibrationStats &other) {
  min = std::min(min, other.min);
  max = std::max(max, other.max);
  count += other.count;
}

QuantParams CalibrationStats::params(int bits, bool is_signed) const {
  if (empty()) throw_validation("calibration observed no values");
  return params_from_range(min, max, bits, is_signed);
}

QuantParams params_from_range(double min, double max, int bits, bool is_signed) {
  if (!(min <= max) || !std::isfinite(min) || !std::isfinite(max))
    throw_validation("calibration range must be finite with min <= max");
  QuantParams qp;
  qp.bits = bits;
  qp.is_signed = is_signed;
  if (min == max) {
    qp.scale = 1.0;
    qp.zero_point = 0;
    qp.validate();
    return qp;
  }
  min = std::min(min, 0.0);
  max = std::max(max, 0.0);
  qp.scale = (max - min) / static_cast<double>(qp.qmax() - qp.qmin());
  const double zp = qp.qmin() - std::nearbyint(min / qp.scale);
  qp.zero_point = static_cast<int32_t>(std::clamp(zp, static_cast<double>(qp.qmin()), static_cast<double>(qp.qmax())));
  qp.validate();
  return qp;
}

QuantParams calibrate_minmax(const std::vector<std::vector<double>> &samples) {
  CalibrationStats stats;
  for (const auto &s : samples) stats.observe(std::span<const double>(s));
  if (stats.empty()) throw_validation("calibrate_minmax: empty sample set");
  return stats.params();
}

std::vector<int32_t> quantize(std::span<const double> x, const QuantParams &qp) {
  qp.validate();
  std::vector<int32_t> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [&](double v) { return quantize_value(v, qp); });
  return out;
}

std::vector<double> dequantize(std::span<const int32_t> q, const QuantParams &qp) {
  qp.validate();
  std::vector<double> out(q.size());
  std::transform(q.begin(), q.end(), out.begin(), [&](int32_t v) { return dequantize_value(v, qp); });
  return out;
}

std::vector<double> fake_quant(std::span<const double> x, const QuantParams &qp) {
  qp.validate();
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [&](double v) { return fake_quant_value(v, qp); });
  return out;
}

std::vector<uint8_t> fake_quant_grad_mask(std::span<const double> x, const QuantParams &qp) {
  qp.validate();
  std::vector<uint8_t> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [&](double v) { return fake_quant_passes(v, qp) ? 1 : 0; });
  return out;
}

double cast_fp16(double x) {
  if (std::isnan(x) || std::isinf(x) || x == 0.0) return x;
  const double a = std::fabs(x);
  constexpr double kMinNormal = 0x1.0p-14;
  constexpr double kMaxFinite = 65504.0;
  double ulp;
  if (a < kMinNormal) {
    ulp = 0x1.0p-24;
  } else {
    int e = 0;
    std::frexp(a, &e);  // a = m * 2^e, m in [0.5, 1)
    ulp = std::ldexp(1.0, e - 11);
  }
  const double r = std::nearbyint(a / ulp) * ulp;
  const double out = r > kMaxFinite ? std::numeric_limits<double>::infinity() : r;
  return std::copysign(out, x);
}

std::vector<double> cast_fp16(std::span<const double> x) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return cast_fp16(v); });
  return out;
}

QuantErrorReport quant_error_report(std::span<const double> x, const QuantParams &qp) {
  qp.validate();
  QuantErrorReport r;
  if (x.empty()) return r;
  double signal = 0;
  double noise = 0;
  for (double v : x) {
    const double e = fake_quant_value(v, qp) - v;
    r.max_abs = std::max(r.max_abs, std::fabs(e));
    r.mean_abs += std::fabs(e);
    signal += v * v;
    noise += e * e;
  }
  r.mean_abs /= static_cast<double>(x.size());
  if (signal > 0.0)
    r.sqnr_db = noise > 0.0 ? 10.0 * std::log10(signal / noise) : std::numeric_limits<double>::infinity();
  return r;
}

nlohmann::json to_json(const QuantParams &qp) {
  return {{"scale", qp.scale}, {"zero_point", qp.zero_point}, {"bits", qp.bits}, {"signed", qp.is_signed}};
}

QuantParams quant_params_from_json(const nlohmann::json &j) {
  QuantParams qp;
  try {
    qp.scale = j.at("scale").get<double>();
    qp.zero_point = j.at("zero_point").get<int32_t>();
    qp.bits = j.value("bits", 8);
    qp.is_signed = j.value("signed", true);
  } catch (const nlohmann::json::exception &e) {
    throw_parse(std::string("quant params: ") + e.what());
  }
  qp.validate();
  return qp;
}

}  // namespace tlbench::quant
