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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tlbench/error.hpp"
#include "tlbench/rng.hpp"

namespace tlbench::metrics {
namespace {

const std::string kFixtures = TLB_FIXTURES_DIR;

PairedSamples from_differences(const std::vector<double> &d) {
  PairedSamples p;
  for (double v : d) {
    p.a.push_back(0.0);
    p.b.push_back(v);
  }
  return p;
}

// Brute force over all sign assignments of integer doubled ranks.
double enumerate_lower_tail(const std::vector<double> &ranks, double t) {
  const size_t n = ranks.size();
  size_t hits = 0;
  for (uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    double s = 0;
    for (size_t i = 0; i < n; ++i)
      if (mask & (1ULL << i)) s += ranks[i];
    hits += s <= t + 1e-9 ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(1ULL << n);
}

// Average ranks of |x| by pairwise counting.
std::vector<double> naive_average_ranks(const std::vector<double> &x) {
  std::vector<double> r(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double y : x) {
      less += std::abs(y) < std::abs(x[i]) ? 1 : 0;
      equal += std::abs(y) == std::abs(x[i]) ? 1 : 0;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

TEST(ConfusionTest, Examples) {
  const auto cm = confusion(std::vector<std::string>{"a", "a", "b", "b"}, {"a", "b", "b", "b"}, {"a", "b"});
  EXPECT_EQ(cm.counts, (std::vector<std::vector<uint64_t>>{{1, 1}, {0, 2}}));
  const auto perfect = confusion(std::vector<int>{0, 1, 2, 2}, {0, 1, 2, 2}, {"x", "y", "z"});
  EXPECT_EQ(perfect.counts, (std::vector<std::vector<uint64_t>>{{1, 0, 0}, {0, 1, 0}, {0, 0, 2}}));
  const auto empty = confusion(std::vector<std::string>{}, {}, {"a", "b"});
  EXPECT_EQ(empty.total(), 0u);
  EXPECT_EQ(empty.size(), 2u);
  EXPECT_THROW(confusion(std::vector<std::string>{"a"}, {"c"}, {"a", "b"}), Error);
  EXPECT_THROW(confusion(std::vector<std::string>{"a"}, {}, {"a", "b"}), Error);
}

TEST(BalancedAccuracyTest, Examples) {
  ConfusionMatrix cm{{"a", "b"}, {{8, 2}, {4, 6}}};
  EXPECT_NEAR(balanced_accuracy(cm).value, 0.7, 1e-15);
  ConfusionMatrix diag{{"a", "b", "c"}, {{3, 0, 0}, {0, 9, 0}, {0, 0, 1}}};
  EXPECT_EQ(balanced_accuracy(diag).value, 1.0);
  ConfusionMatrix all_zero{{"a", "b"}, {{5, 0}, {5, 0}}};
  EXPECT_EQ(balanced_accuracy(all_zero).value, 0.5);
  ConfusionMatrix unsupported{{"a", "b", "c"}, {{2, 0, 0}, {0, 0, 0}, {1, 0, 1}}};
  const auto ba = balanced_accuracy(unsupported);
  EXPECT_NEAR(ba.value, 0.75, 1e-15);
  EXPECT_TRUE(ba.warning());
  EXPECT_EQ(ba.unsupported, std::vector<std::string>{"b"});
  ConfusionMatrix none{{"a", "b"}, {{0, 0}, {0, 0}}};
  EXPECT_THROW(balanced_accuracy(none), Error);
}

TEST(BalancedAccuracyProperty, EqualSupportMatchesAccuracy) {
  RngStream rng(1, 2);
  for (int t = 0; t < 200; ++t) {
    const size_t k = static_cast<size_t>(rng.uniform_int(2, 6));
    const uint64_t support = static_cast<uint64_t>(rng.uniform_int(1, 30));
    ConfusionMatrix cm;
    cm.counts.assign(k, std::vector<uint64_t>(k, 0));
    uint64_t correct = 0;
    for (size_t i = 0; i < k; ++i) {
      cm.classes.push_back(std::to_string(i));
      for (uint64_t s = 0; s < support; ++s) ++cm.counts[i][static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(k) - 1))];
      correct += cm.counts[i][i];
    }
    const double ba = balanced_accuracy(cm).value;
    ASSERT_GE(ba, 0.0);
    ASSERT_LE(ba, 1.0);
    ASSERT_NEAR(ba, static_cast<double>(correct) / static_cast<double>(cm.total()), 1e-12);
  }
}

TEST(WilcoxonTest, AllPositive) {
  const auto r = wilcoxon_signed_rank(from_differences({1, 2, 3}));
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.w_plus, 6.0);
  EXPECT_TRUE(r.exact);
  EXPECT_NEAR(r.p_one_sided, 1.0 / 8.0, 1e-15);
  EXPECT_NEAR(r.p_value, 0.25, 1e-15);
}

TEST(WilcoxonTest, AllZeroIsUndefined) {
  PairedSamples p{{1, 2, 3}, {1, 2, 3}, {}};
  try {
    wilcoxon_signed_rank(p);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedTest);
  }
}

TEST(WilcoxonTest, ZeroAndTieConventions) {
  const auto p = from_differences({0, 1, -1, 2, 2, -3});
  WilcoxonOptions o;
  const auto drop = wilcoxon_signed_rank(p, o);
  EXPECT_EQ(drop.n_zero, 1u);
  EXPECT_EQ(drop.n_ranked, 5u);
  // |d| = 1 1 2 2 3 -> average ranks 1.5 1.5 3.5 3.5 5.
  EXPECT_EQ(drop.w_plus, 1.5 + 3.5 + 3.5);
  EXPECT_EQ(drop.w_minus, 1.5 + 5);
  o.ties = TieMethod::kMax;
  EXPECT_EQ(wilcoxon_signed_rank(p, o).w_plus, 2 + 4 + 4);
  o.ties = TieMethod::kAverage;
  o.zero = ZeroMethod::kPratt;
  // Zero keeps rank 1; the others shift up by one.
  EXPECT_EQ(wilcoxon_signed_rank(p, o).w_plus, 2.5 + 4.5 + 4.5);
  o.zero = ZeroMethod::kZsplit;
  EXPECT_EQ(wilcoxon_signed_rank(p, o).w_plus, 0.5 + 2.5 + 4.5 + 4.5);
  o.zero = ZeroMethod::kConservative;
  const auto cons = wilcoxon_signed_rank(p, o);
  EXPECT_EQ(cons.statistic, std::min(cons.w_plus, cons.w_minus));
  EXPECT_EQ(cons.w_minus, 1 + 2.5 + 6);
}

TEST(WilcoxonProperty, RankSumsMatchNaiveOracle) {
  RngStream rng(5, 5);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> d(static_cast<size_t>(rng.uniform_int(1, 40)));
    for (auto &v : d) v = static_cast<double>(rng.uniform_int(-6, 6));
    if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0; })) continue;
    std::vector<double> nz;
    for (double v : d)
      if (v != 0) nz.push_back(v);
    const auto ranks = naive_average_ranks(nz);
    double plus = 0;
    for (size_t i = 0; i < nz.size(); ++i) plus += nz[i] > 0 ? ranks[i] : 0;
    const auto r = wilcoxon_signed_rank(from_differences(d));
    ASSERT_DOUBLE_EQ(r.w_plus, plus);
    ASSERT_DOUBLE_EQ(r.w_plus + r.w_minus, nz.size() * (nz.size() + 1) / 2.0);
  }
}

TEST(WilcoxonProperty, ExactTailMatchesEnumeration) {
  RngStream rng(6, 6);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> d(static_cast<size_t>(rng.uniform_int(1, 12)));
    for (auto &v : d) v = static_cast<double>(rng.uniform_int(-5, 5));
    std::vector<double> nz;
    for (double v : d)
      if (v != 0) nz.push_back(v);
    if (nz.empty()) continue;
    const auto r = wilcoxon_signed_rank(from_differences(d));
    ASSERT_TRUE(r.exact);
    ASSERT_NEAR(r.p_one_sided, enumerate_lower_tail(naive_average_ranks(nz), r.statistic), 1e-12);
  }
}

TEST(WilcoxonProperty, ExactAndNormalAgreeForModerateN) {
  RngStream rng(7, 7);
  for (int t = 0; t < 300; ++t) {
    const size_t n = static_cast<size_t>(rng.uniform_int(10, 12));
    std::vector<double> d(n);
    for (size_t i = 0; i < n; ++i) d[i] = (i + 1) * (rng.uniform() < 0.5 ? -1.0 : 1.0);  // tie-free
    const auto p = from_differences(d);
    WilcoxonOptions exact, normal;
    exact.p_method = PMethod::kExact;
    normal.p_method = PMethod::kNormal;
    const auto e = wilcoxon_signed_rank(p, exact);
    const auto a = wilcoxon_signed_rank(p, normal);
    ASSERT_EQ(e.statistic, a.statistic);
    ASSERT_LE(std::abs(e.p_value - a.p_value), 0.02) << "n=" << n << " T=" << e.statistic;
  }
}

TEST(WilcoxonProperty, InvariantUnderPositiveAffineTransforms) {
  RngStream rng(8, 8);
  for (int t = 0; t < 100; ++t) {
    PairedSamples p;
    for (int i = 0; i < 25; ++i) {
      p.a.push_back(rng.uniform(50, 100));
      p.b.push_back(rng.uniform(50, 100));
    }
    const double scale = std::exp(rng.uniform(-3, 3)), shift = rng.uniform(-100, 100);
    PairedSamples q = p;
    for (auto *v : {&q.a, &q.b})
      for (auto &x : *v) x = scale * x + shift;
    ASSERT_EQ(wilcoxon_signed_rank(p).statistic, wilcoxon_signed_rank(q).statistic);
  }
}

TEST(CohensDTest, Conventions) {
  const auto p = from_differences({0, 2});
  EXPECT_NEAR(cohens_d_paired(p, DConvention::kDifferences), 1.0 / std::sqrt(2.0), 1e-12);
  PairedSamples q{{1, 3, 5}, {2, 5, 5}, {}};
  // mean diff 1, var a = 4, var b = 3.
  EXPECT_NEAR(cohens_d_paired(q), 1.0 / std::sqrt(3.5), 1e-12);
  PairedSamples same{{1, 2, 3}, {1, 2, 3}, {}};
  EXPECT_THROW(cohens_d_paired(same, DConvention::kDifferences), Error);
  PairedSamples constant{{1, 1}, {2, 2}, {}};
  EXPECT_THROW(cohens_d_paired(constant), Error);
  EXPECT_THROW(cohens_d_paired(from_differences({1})), Error);
}

TEST(CohensDProperty, ScaleAndShiftInvariance) {
  RngStream rng(9, 9);
  for (int t = 0; t < 100; ++t) {
    PairedSamples p;
    for (int i = 0; i < 12; ++i) {
      p.a.push_back(rng.uniform(0, 10));
      p.b.push_back(rng.uniform(0, 12));
    }
    for (auto conv : {DConvention::kAverageVariance, DConvention::kDifferences}) {
      const double d = cohens_d_paired(p, conv);
      const double c = std::exp(rng.uniform(-2, 2)), k = rng.uniform(-50, 50);
      PairedSamples s = p, sh = p;
      for (auto *v : {&s.a, &s.b})
        for (auto &x : *v) x *= c;
      for (auto *v : {&sh.a, &sh.b})
        for (auto &x : *v) x += k;
      ASSERT_NEAR(cohens_d_paired(s, conv), d, 1e-9);
      ASSERT_NEAR(cohens_d_paired(sh, conv), d, 1e-9);
    }
  }
}

TEST(BootstrapTest, ConstantDataCollapses) {
  const auto p = from_differences({2.5, 2.5, 2.5, 2.5});
  const auto ci = bootstrap_ci(p, mean_difference_statistic(), 500, 1);
  EXPECT_EQ(ci.low, 2.5);
  EXPECT_EQ(ci.high, 2.5);
}

TEST(BootstrapTest, DeterministicAndShrinksWithN) {
  std::vector<double> d(20);
  std::iota(d.begin(), d.end(), 1.0);
  const auto p = from_differences(d);
  const auto a = bootstrap_ci(p, mean_difference_statistic(), 5000, 17);
  const auto b = bootstrap_ci(p, mean_difference_statistic(), 5000, 17);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  EXPECT_LT(a.low, 10.5);
  EXPECT_GT(a.high, 10.5);
  auto dd = d;
  dd.insert(dd.end(), d.begin(), d.end());
  const auto w = bootstrap_ci(from_differences(dd), mean_difference_statistic(), 5000, 17);
  const double ratio = (a.high - a.low) / (w.high - w.low);
  EXPECT_NEAR(ratio, std::sqrt(2.0), 0.15);
  EXPECT_THROW(bootstrap_ci(p, mean_difference_statistic(), 0, 1), Error);
}

TEST(BootstrapProperty, IntervalContainsPointStatistic) {
  RngStream rng(10, 10);
  PairedSamples p;
  for (int i = 0; i < 30; ++i) {
    p.a.push_back(rng.uniform(60, 90));
    p.b.push_back(p.a.back() + rng.normal() * 2 + 0.5);
  }
  const auto stat = cohens_d_statistic(DConvention::kAverageVariance);
  const double point = stat(p.a, p.b);
  int inside = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const auto ci = bootstrap_ci(p, stat, 1000, seed);
    inside += ci.low <= point && point <= ci.high ? 1 : 0;
  }
  EXPECT_GE(inside, 99);
}

results::ResultTable table5() { return results::load_fixture_csv(kFixtures + "/generalization_baseline.csv"); }

TEST(ComparisonTest, PolicyPairsAndStatistic) {
  const auto t = table5();
  const auto pairs = build_pairs(t, "policy", "norm_aug", "extra_aug", {"dataset", "architecture", "approach"});
  EXPECT_EQ(pairs.size(), 40u);
  ComparisonOptions o;
  o.wilcoxon.zero = ZeroMethod::kConservative;
  o.wilcoxon.ties = TieMethod::kMax;
  const auto r = paired_comparison(t, "policy", "norm_aug", "extra_aug", {"dataset", "architecture", "approach"}, {}, o);
  EXPECT_EQ(r.n_pairs, 40u);
  EXPECT_EQ(r.statistic, 30.0);
  EXPECT_LT(r.p_value, 0.01);
  EXPECT_NEAR(r.effect_size_d, 0.15, 0.01);
  EXPECT_LE(r.ci_low, r.effect_size_d);
  EXPECT_GE(r.ci_high, r.effect_size_d);
  EXPECT_EQ(r.pairing_keys.size(), 40u);
  EXPECT_EQ(r.n_resamples, 5000);
}

TEST(ComparisonTest, MissingCellIsNamed) {
  auto t = table5();
  results::ResultTable reduced;
  for (const auto &row : t.rows())
    if (!(row.key.dataset == "Event8" && row.key.architecture == "ResNet50" && row.key.policy == "extra_aug" &&
          row.key.approach == "l2sp"))
      reduced.add(row);
  try {
    build_pairs(reduced, "policy", "norm_aug", "extra_aug", {"dataset", "architecture", "approach"});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    EXPECT_NE(std::string(e.what()).find("Event8/ResNet50/l2sp"), std::string::npos) << e.what();
  }
}

TEST(ComparisonTest, AmbiguousAndUnknownFactors) {
  const auto t = table5();
  EXPECT_THROW(build_pairs(t, "policy", "norm_aug", "extra_aug", {"dataset", "architecture"}), Error);
  EXPECT_THROW(build_pairs(t, "flavour", "a", "b", {"dataset"}), Error);
  EXPECT_THROW(build_pairs(t, "policy", "norm_aug", "extra_aug", {"policy"}), Error);
}

TEST(ComparisonTest, JsonCarriesPairingKeys) {
  ComparisonOptions o;
  o.wilcoxon.zero = ZeroMethod::kConservative;
  o.wilcoxon.ties = TieMethod::kMax;
  const auto r =
      paired_comparison(table5(), "approach", "l2sp", "fine_tuning", {"dataset", "architecture", "policy"}, {}, o);
  const auto j = to_json(r);
  EXPECT_EQ(j.at("pairing_keys").size(), 40u);
  EXPECT_EQ(j.at("statistic").get<double>(), 74.0);
}

}  // namespace
}  // namespace tlbench::metrics
