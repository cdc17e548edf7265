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
#ifndef TLBENCH_METRICS_HPP_
#define TLBENCH_METRICS_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tlbench/results.hpp"

namespace tlbench::metrics {

struct ConfusionMatrix {
  std::vector<std::string> classes;
  // counts[true][predicted]
  std::vector<std::vector<uint64_t>> counts;

  size_t size() const { return classes.size(); }
  uint64_t total() const;
};

ConfusionMatrix confusion(const std::vector<std::string> &truth, const std::vector<std::string> &predicted,
                          const std::vector<std::string> &classes);
ConfusionMatrix confusion(const std::vector<int> &truth, const std::vector<int> &predicted,
                          const std::vector<std::string> &classes);

struct BalancedAccuracy {
  double value = 0.0;
  // Classes without support, excluded from the mean.
  std::vector<std::string> unsupported;
  bool warning() const { return !unsupported.empty(); }
};

BalancedAccuracy balanced_accuracy(const ConfusionMatrix &cm);

struct PairedSamples {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<std::string> keys;

  void validate() const;
  size_t size() const { return a.size(); }
  // b - a
  std::vector<double> differences() const;
};

enum class ZeroMethod {
  kDrop,          // discard zero differences before ranking
  kPratt,         // rank with zeros, then discard their ranks
  kZsplit,        // rank with zeros, split their ranks evenly between signs
  kConservative,  // rank with zeros, credit their ranks to the smaller sum
};
enum class TieMethod { kAverage, kMax, kMin, kOrdinal };
enum class PMethod { kAuto, kExact, kNormal };

std::string_view to_string(ZeroMethod m);
std::string_view to_string(TieMethod m);
ZeroMethod zero_method_from_string(std::string_view s);
TieMethod tie_method_from_string(std::string_view s);

struct WilcoxonOptions {
  ZeroMethod zero = ZeroMethod::kDrop;
  TieMethod ties = TieMethod::kAverage;
  PMethod p_method = PMethod::kAuto;
  bool continuity = true;
  // kAuto enumerates exactly up to this many ranked differences.
  size_t exact_max_n = 12;
};

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;      // two-sided
  double p_one_sided = 1.0;  // P(T <= statistic)
  double z = 0.0;
  size_t n_ranked = 0;
  size_t n_zero = 0;
  bool exact = false;
};

// Throws Error(kUndefinedTest) when every difference is zero.
WilcoxonResult wilcoxon_signed_rank(const PairedSamples &pairs, const WilcoxonOptions &options = {});

// Ranks of |values| (1-based) under a tie rule.
std::vector<double> rank_abs(const std::vector<double> &values, TieMethod ties);

enum class DConvention {
  kAverageVariance,  // mean(b - a) / sqrt((var a + var b) / 2)
  kDifferences,      // mean(b - a) / sd(b - a)
};

double cohens_d_paired(const PairedSamples &pairs, DConvention convention = DConvention::kAverageVariance);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

using PairStatistic = std::function<double(const std::vector<double> &a, const std::vector<double> &b)>;

// BCa interval. Resample r draws its indices from RngStream(seed, r).
Interval bootstrap_ci(const PairedSamples &pairs, const PairStatistic &statistic, int n_resamples, uint64_t seed,
                      double level = 0.95);

PairStatistic mean_difference_statistic();
PairStatistic cohens_d_statistic(DConvention convention);

struct StatResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double effect_size_d = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_resamples = 0;
  size_t n_pairs = 0;
  std::string factor;
  std::string level_a;
  std::string level_b;
  std::vector<std::string> holding;
  std::vector<std::string> pairing_keys;
  WilcoxonResult wilcoxon;
};

struct ComparisonOptions {
  WilcoxonOptions wilcoxon;
  DConvention d_convention = DConvention::kAverageVariance;
  int n_resamples = 5000;
  uint64_t seed = 0;
};

// Pairs rows differing only in `factor` (level_a vs level_b), keyed by the
// held factors, over rows admitted by `filter`. Failed rows are ignored.
PairedSamples build_pairs(const results::ResultTable &table, std::string_view factor, std::string_view level_a,
                          std::string_view level_b, const std::vector<std::string> &holding,
                          const results::RowFilter &filter = {});

StatResult paired_comparison(const results::ResultTable &table, std::string_view factor, std::string_view level_a,
                             std::string_view level_b, const std::vector<std::string> &holding,
                             const results::RowFilter &filter = {}, const ComparisonOptions &options = {});

nlohmann::json to_json(const StatResult &r);

}  // namespace tlbench::metrics

#endif  // TLBENCH_METRICS_HPP_
