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
#include "tlbench/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <map>
#include <numeric>

#include "tlbench/error.hpp"
#include "tlbench/rng.hpp"

namespace tlbench::metrics {

using nlohmann::json;

uint64_t ConfusionMatrix::total() const {
  uint64_t t = 0;
  for (const auto &row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

ConfusionMatrix confusion(const std::vector<int> &truth, const std::vector<int> &predicted,
                          const std::vector<std::string> &classes) {
  if (truth.size() != predicted.size()) throw_validation("confusion: label sequences differ in length");
  if (classes.size() < 2) throw_validation("confusion: at least two classes required");
  const auto k = static_cast<int>(classes.size());
  ConfusionMatrix cm{classes, std::vector<std::vector<uint64_t>>(classes.size(), std::vector<uint64_t>(classes.size()))};
  for (size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k)
      throw_validation("confusion: label index out of range");
    ++cm.counts[static_cast<size_t>(truth[i])][static_cast<size_t>(predicted[i])];
  }
  return cm;
}

ConfusionMatrix confusion(const std::vector<std::string> &truth, const std::vector<std::string> &predicted,
                          const std::vector<std::string> &classes) {
  std::map<std::string, int> index;
  for (size_t i = 0; i < classes.size(); ++i) index[classes[i]] = static_cast<int>(i);
  auto lookup = [&](const std::string &label) {
    const auto it = index.find(label);
    if (it == index.end()) throw_validation("confusion: unknown label '" + label + "'");
    return it->second;
  };
  std::vector<int> t;
  std::vector<int> p;
  for (const auto &s : truth) t.push_back(lookup(s));
  for (const auto &s : predicted) p.push_back(lookup(s));
  return confusion(t, p, classes);
}

BalancedAccuracy balanced_accuracy(const ConfusionMatrix &cm) {
  BalancedAccuracy out;
  double sum = 0.0;
  size_t supported = 0;
  for (size_t i = 0; i < cm.counts.size(); ++i) {
    const uint64_t support = std::accumulate(cm.counts[i].begin(), cm.counts[i].end(), uint64_t{0});
    if (support == 0) {
      out.unsupported.push_back(cm.classes[i]);
      continue;
    }
    sum += static_cast<double>(cm.counts[i][i]) / static_cast<double>(support);
    ++supported;
  }
  if (supported == 0) throw_validation("balanced_accuracy: no class has support");
  out.value = sum / static_cast<double>(supported);
  return out;
}

void PairedSamples::validate() const {
  if (a.empty() || a.size() != b.size()) throw_validation("paired samples must be non-empty and equal length");
  if (!keys.empty() && keys.size() != a.size()) throw_validation("one pairing key per pair required");
}

std::vector<double> PairedSamples::differences() const {
  std::vector<double> d(a.size());
  for (size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
  return d;
}

std::string_view to_string(ZeroMethod m) {
  switch (m) {
    case ZeroMethod::kDrop:
      return "drop";
    case ZeroMethod::kPratt:
      return "pratt";
    case ZeroMethod::kZsplit:
      return "zsplit";
    case ZeroMethod::kConservative:
      return "conservative";
  }
  return "unknown";
}

std::string_view to_string(TieMethod m) {
  switch (m) {
    case TieMethod::kAverage:
      return "average";
    case TieMethod::kMax:
      return "max";
    case TieMethod::kMin:
      return "min";
    case TieMethod::kOrdinal:
      return "ordinal";
  }
  return "unknown";
}

ZeroMethod zero_method_from_string(std::string_view s) {
  for (auto m : {ZeroMethod::kDrop, ZeroMethod::kPratt, ZeroMethod::kZsplit, ZeroMethod::kConservative})
    if (to_string(m) == s) return m;
  throw_validation("unknown zero method '" + std::string(s) + "'");
}

TieMethod tie_method_from_string(std::string_view s) {
  for (auto m : {TieMethod::kAverage, TieMethod::kMax, TieMethod::kMin, TieMethod::kOrdinal})
    if (to_string(m) == s) return m;
  throw_validation("unknown tie method '" + std::string(s) + "'");
}

std::vector<double> rank_abs(const std::vector<double> &values, TieMethod ties) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t i, size_t j) { return std::fabs(values[i]) < std::fabs(values[j]); });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && std::fabs(values[order[j + 1]]) == std::fabs(values[order[i]])) ++j;
    for (size_t t = i; t <= j; ++t) {
      double r = 0.0;
      switch (ties) {
        case TieMethod::kAverage:
          r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
          break;
        case TieMethod::kMax:
          r = static_cast<double>(j + 1);
          break;
        case TieMethod::kMin:
          r = static_cast<double>(i + 1);
          break;
        case TieMethod::kOrdinal:
          r = static_cast<double>(t + 1);
          break;
      }
      ranks[order[t]] = r;
    }
    i = j + 1;
  }
  return ranks;
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P(W+ <= w) under the null for the given ranks, by enumerating sign
// assignments through a distribution over doubled rank sums.
double exact_lower_tail(const std::vector<double> &ranks, double w) {
  std::vector<int64_t> doubled;
  int64_t total = 0;
  for (double r : ranks) {
    doubled.push_back(std::llround(2.0 * r));
    total += doubled.back();
  }
  std::vector<double> ways(static_cast<size_t>(total) + 1, 0.0);
  ways[0] = 1.0;
  int64_t reach = 0;
  for (int64_t r : doubled) {
    for (int64_t s = reach; s >= 0; --s)
      if (ways[static_cast<size_t>(s)] != 0.0) ways[static_cast<size_t>(s + r)] += ways[static_cast<size_t>(s)];
    reach += r;
  }
  const int64_t limit = std::llround(2.0 * w);
  double count = 0.0;
  for (int64_t s = 0; s <= std::min(limit, total); ++s) count += ways[static_cast<size_t>(s)];
  return count / std::ldexp(1.0, static_cast<int>(ranks.size()));
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const PairedSamples &pairs, const WilcoxonOptions &options) {
  pairs.validate();
  const auto diffs = pairs.differences();
  WilcoxonResult res;
  for (double d : diffs) res.n_zero += d == 0.0 ? 1 : 0;
  if (res.n_zero == diffs.size()) throw Error(ErrorCode::kUndefinedTest, "wilcoxon: all differences are zero");

  std::vector<double> ranked_values;
  if (options.zero == ZeroMethod::kDrop) {
    for (double d : diffs)
      if (d != 0.0) ranked_values.push_back(d);
  } else {
    ranked_values = diffs;
  }
  const auto ranks = rank_abs(ranked_values, options.ties);
  double zero_ranks = 0.0;
  std::vector<double> used_ranks;
  for (size_t i = 0; i < ranked_values.size(); ++i) {
    const double d = ranked_values[i];
    if (d > 0.0) res.w_plus += ranks[i];
    else if (d < 0.0) res.w_minus += ranks[i];
    else zero_ranks += ranks[i];
    if (d != 0.0 || options.zero == ZeroMethod::kZsplit || options.zero == ZeroMethod::kConservative)
      used_ranks.push_back(ranks[i]);
  }
  if (options.zero == ZeroMethod::kZsplit) {
    res.w_plus += zero_ranks / 2.0;
    res.w_minus += zero_ranks / 2.0;
  } else if (options.zero == ZeroMethod::kConservative) {
    (res.w_plus <= res.w_minus ? res.w_plus : res.w_minus) += zero_ranks;
  }
  res.statistic = std::min(res.w_plus, res.w_minus);
  res.n_ranked = used_ranks.size();

  const bool zeros_in_statistic =
      res.n_zero > 0 && (options.zero == ZeroMethod::kZsplit || options.zero == ZeroMethod::kConservative);
  bool exact = false;
  if (options.p_method == PMethod::kExact) {
    if (zeros_in_statistic) throw_validation("wilcoxon: exact p is unavailable when zero ranks enter the statistic");
    exact = true;
  } else if (options.p_method == PMethod::kAuto) {
    exact = !zeros_in_statistic && res.n_ranked <= options.exact_max_n;
  }

  double sum_sq = 0.0;
  double sum = 0.0;
  for (double r : used_ranks) {
    sum += r;
    sum_sq += r * r;
  }
  const double mean = sum / 2.0;
  const double sd = std::sqrt(sum_sq / 4.0);
  if (sd > 0.0) {
    double num = res.statistic - mean;
    if (options.continuity) num = std::min(0.0, num + 0.5);
    res.z = num / sd;
  }
  if (exact) {
    res.exact = true;
    res.p_one_sided = exact_lower_tail(used_ranks, res.statistic);
  } else {
    res.p_one_sided = sd > 0.0 ? normal_cdf(res.z) : 1.0;
  }
  res.p_value = std::min(1.0, 2.0 * res.p_one_sided);
  return res;
}

namespace {

double mean_of(const std::vector<double> &v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double> &v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double d_of(const std::vector<double> &a, const std::vector<double> &b, DConvention convention) {
  std::vector<double> diff(a.size());
  for (size_t i = 0; i < a.size(); ++i) diff[i] = b[i] - a[i];
  const double md = mean_of(diff);
  const double denom = convention == DConvention::kDifferences ? std::sqrt(sample_variance(diff))
                                                               : std::sqrt((sample_variance(a) + sample_variance(b)) / 2.0);
  if (!(denom > 0.0)) throw_validation("cohens_d: zero variance");
  return md / denom;
}

}  // namespace

double cohens_d_paired(const PairedSamples &pairs, DConvention convention) {
  pairs.validate();
  if (pairs.size() < 2) throw_validation("cohens_d: at least two pairs required");
  return d_of(pairs.a, pairs.b, convention);
}

PairStatistic mean_difference_statistic() {
  return [](const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += b[i] - a[i];
    return s / static_cast<double>(a.size());
  };
}

PairStatistic cohens_d_statistic(DConvention convention) {
  return [convention](const std::vector<double> &a, const std::vector<double> &b) {
    try {
      return d_of(a, b, convention);
    } catch (const Error &) {
      return std::nan("");
    }
  };
}

Interval bootstrap_ci(const PairedSamples &pairs, const PairStatistic &statistic, int n_resamples, uint64_t seed,
                      double level) {
  pairs.validate();
  if (n_resamples < 1) throw_validation("bootstrap: n_resamples must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw_validation("bootstrap: level must lie in (0, 1)");
  const size_t n = pairs.size();
  const double theta = statistic(pairs.a, pairs.b);

  std::vector<double> boot;
  boot.reserve(static_cast<size_t>(n_resamples));
  std::vector<double> ra(n);
  std::vector<double> rb(n);
  for (int r = 0; r < n_resamples; ++r) {
    RngStream rng(seed, static_cast<uint64_t>(r));
    for (size_t i = 0; i < n; ++i) {
      const auto j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(n) - 1));
      ra[i] = pairs.a[j];
      rb[i] = pairs.b[j];
    }
    const double v = statistic(ra, rb);
    if (std::isfinite(v)) boot.push_back(v);
  }
  if (boot.empty()) return {theta, theta};
  std::sort(boot.begin(), boot.end());
  if (boot.front() == boot.back()) return {boot.front(), boot.front()};

  const double m = static_cast<double>(boot.size());
  const auto below = static_cast<double>(std::lower_bound(boot.begin(), boot.end(), theta) - boot.begin());
  const double prop = std::clamp(below / m, 0.5 / m, 1.0 - 0.5 / m);
  const boost::math::normal standard;
  const double z0 = boost::math::quantile(standard, prop);

  // Jackknife acceleration.
  double accel = 0.0;
  if (n > 2) {
    std::vector<double> jack;
    std::vector<double> ja;
    std::vector<double> jb;
    for (size_t leave = 0; leave < n; ++leave) {
      ja.clear();
      jb.clear();
      for (size_t i = 0; i < n; ++i) {
        if (i == leave) continue;
        ja.push_back(pairs.a[i]);
        jb.push_back(pairs.b[i]);
      }
      const double v = statistic(ja, jb);
      if (std::isfinite(v)) jack.push_back(v);
    }
    if (!jack.empty()) {
      const double jm = mean_of(jack);
      double num = 0.0;
      double den = 0.0;
      for (double v : jack) {
        num += std::pow(jm - v, 3);
        den += std::pow(jm - v, 2);
      }
      if (den > 0.0) accel = num / (6.0 * std::pow(den, 1.5));
    }
  }

  auto percentile = [&](double alpha) {
    const double za = boost::math::quantile(standard, alpha);
    const double adj = normal_cdf(z0 + (z0 + za) / (1.0 - accel * (z0 + za)));
    const double pos = std::clamp(adj, 0.0, 1.0) * (m - 1.0);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, boot.size() - 1);
    return boot[lo] + (pos - static_cast<double>(lo)) * (boot[hi] - boot[lo]);
  };
  const double tail = (1.0 - level) / 2.0;
  return {percentile(tail), percentile(1.0 - tail)};
}

PairedSamples build_pairs(const results::ResultTable &table, std::string_view factor, std::string_view level_a,
                          std::string_view level_b, const std::vector<std::string> &holding,
                          const results::RowFilter &filter) {
  if (!results::is_factor(factor)) throw_validation("unknown factor '" + std::string(factor) + "'");
  for (const auto &h : holding) {
    if (!results::is_factor(h)) throw_validation("unknown held factor '" + h + "'");
    if (h == factor) throw_validation("the compared factor cannot also be held");
  }
  struct Cell {
    const results::ResultRow *a = nullptr;
    const results::ResultRow *b = nullptr;
  };
  std::map<std::vector<std::string>, Cell> cells;
  for (const auto &row : table.rows()) {
    if (!row.ok() || !results::matches(row, filter)) continue;
    const auto &level = row.key.get(factor);
    if (level != level_a && level != level_b) continue;
    std::vector<std::string> key;
    for (const auto &h : holding) key.push_back(row.key.get(h));
    auto &cell = cells[key];
    auto &slot = level == level_a ? cell.a : cell.b;
    if (slot != nullptr)
      throw_validation("pairing is ambiguous: " + row.key.to_string() + " and " + slot->key.to_string() +
                       " share held factors");
    slot = &row;
  }
  PairedSamples pairs;
  for (const auto &[key, cell] : cells) {
    std::string name;
    for (const auto &part : key) name += (name.empty() ? "" : "/") + part;
    if (cell.a == nullptr || cell.b == nullptr)
      throw_validation("missing cell for " + std::string(factor) + "=" +
                       std::string(cell.a == nullptr ? level_a : level_b) + " at " + name);
    pairs.a.push_back(cell.a->balanced_accuracy_percent);
    pairs.b.push_back(cell.b->balanced_accuracy_percent);
    pairs.keys.push_back(name);
  }
  if (pairs.a.empty()) throw_validation("no rows match the comparison");
  return pairs;
}

StatResult paired_comparison(const results::ResultTable &table, std::string_view factor, std::string_view level_a,
                             std::string_view level_b, const std::vector<std::string> &holding,
                             const results::RowFilter &filter, const ComparisonOptions &options) {
  const auto pairs = build_pairs(table, factor, level_a, level_b, holding, filter);
  StatResult r;
  r.factor = factor;
  r.level_a = level_a;
  r.level_b = level_b;
  r.holding = holding;
  r.pairing_keys = pairs.keys;
  r.n_pairs = pairs.size();
  r.wilcoxon = wilcoxon_signed_rank(pairs, options.wilcoxon);
  r.statistic = r.wilcoxon.statistic;
  r.p_value = r.wilcoxon.p_value;
  r.effect_size_d = cohens_d_paired(pairs, options.d_convention);
  r.n_resamples = options.n_resamples;
  if (options.n_resamples > 0) {
    const auto ci = bootstrap_ci(pairs, cohens_d_statistic(options.d_convention), options.n_resamples, options.seed);
    r.ci_low = ci.low;
    r.ci_high = ci.high;
  } else {
    r.ci_low = r.ci_high = r.effect_size_d;
  }
  return r;
}

json to_json(const StatResult &r) {
  return {{"factor", r.factor},
          {"level_a", r.level_a},
          {"level_b", r.level_b},
          {"holding", r.holding},
          {"n_pairs", r.n_pairs},
          {"statistic", r.statistic},
          {"w_plus", r.wilcoxon.w_plus},
          {"w_minus", r.wilcoxon.w_minus},
          {"p_value", r.p_value},
          {"p_exact", r.wilcoxon.exact},
          {"effect_size_d", r.effect_size_d},
          {"ci_low", r.ci_low},
          {"ci_high", r.ci_high},
          {"n_resamples", r.n_resamples},
          {"pairing_keys", r.pairing_keys}};
}

}  // namespace tlbench::metrics
