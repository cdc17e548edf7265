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
#include "tlbench/data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "tlbench/error.hpp"
#include "tlbench/rng.hpp"

namespace tlbench::data {
namespace {

DatasetManifest parse(const std::string &text) {
  std::istringstream in(text);
  return parse_manifest(in, "t");
}

DatasetManifest make_manifest(const std::vector<size_t> &counts) {
  DatasetManifest m;
  m.name = "gen";
  for (size_t c = 0; c < counts.size(); ++c) {
    m.classes.push_back("c" + std::to_string(c));
    for (size_t i = 0; i < counts[c]; ++i) m.records.push_back({"c" + std::to_string(c) + "/" + std::to_string(i), m.classes.back(), {}, Split::kUnassigned});
  }
  return m;
}

std::string dump(const DatasetManifest &m) {
  std::ostringstream out;
  write_manifest(out, m);
  return out.str();
}

TEST(ManifestTest, ClassesSortedFromLabels) {
  const auto m = parse(R"({"path": "a.ppm", "label": "office"}
{"path": "b.ppm", "label": "kitchen"}
{"path": "c.ppm", "label": "office", "tags": {"robot": "dumbo"}}
)");
  EXPECT_EQ(m.classes, (std::vector<std::string>{"kitchen", "office"}));
  ASSERT_EQ(m.records.size(), 3u);
  EXPECT_EQ(m.records[2].tags.at("robot"), "dumbo");
}

TEST(ManifestTest, HeaderOrderIsKept) {
  const auto m = parse(R"({"classes": ["z", "a"]}
{"path": "x", "label": "a"})");
  EXPECT_EQ(m.classes, (std::vector<std::string>{"z", "a"}));
}

TEST(ManifestTest, Rejections) {
  try {
    parse("");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
  }
  try {
    parse(R"({"classes": ["a"]}
{"path": "x", "label": "b"})");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
  }
  try {
    parse(R"({"path": "x", "label": "a"}
{"path": "x", "label": "a"})");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
  }
  try {
    parse("{\"path\": \"x\", \"label\": \"a\"}\nnot json\n");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ManifestTest, RoundTripWithSplit) {
  auto m = make_manifest({3, 2});
  m.records[0].split = Split::kTest;
  m.records[1].tags["lighting"] = "night";
  const auto back = parse(dump(m));
  EXPECT_EQ(back.classes, m.classes);
  EXPECT_EQ(back.records, m.records);
}

TEST(SplitTest, ExactCountsForBalancedClasses) {
  const auto r = stratified_split(make_manifest({50, 50}), {1, 0.2, true});
  EXPECT_EQ(r.test.class_counts(), (std::vector<size_t>{10, 10}));
  EXPECT_EQ(r.train.class_counts(), (std::vector<size_t>{40, 40}));
}

TEST(SplitTest, SingletonClassStaysInTrain) {
  const auto r = stratified_split(make_manifest({1, 10}), {1, 0.5, true});
  EXPECT_EQ(r.test.class_counts()[0], 0u);
  EXPECT_EQ(r.train.class_counts()[0], 1u);
}

TEST(SplitTest, RoundHalfUpThenClip) {
  EXPECT_EQ(test_count_for(5, 0.5), 3u);   // 2.5 -> 3
  EXPECT_EQ(test_count_for(2, 0.9), 1u);   // 1.8 -> 2, clipped to keep one
  EXPECT_EQ(test_count_for(10, 0.24), 2u);
  EXPECT_EQ(test_count_for(1, 0.9), 0u);
}

TEST(SplitTest, MarksSplitField) {
  const auto r = stratified_split(make_manifest({4}), {1, 0.25, true});
  for (const auto &s : r.train.records) EXPECT_EQ(s.split, Split::kTrain);
  for (const auto &s : r.test.records) EXPECT_EQ(s.split, Split::kTest);
}

TEST(SplitTest, InvalidFraction) {
  EXPECT_THROW(stratified_split(make_manifest({4}), {1, 0.0, true}), Error);
  EXPECT_THROW(stratified_split(make_manifest({4}), {1, 1.0, true}), Error);
}

TEST(SplitProperty, RandomManifests) {
  RngStream rng(2024, 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<size_t> counts(static_cast<size_t>(rng.uniform_int(1, 8)));
    for (auto &c : counts) c = static_cast<size_t>(rng.uniform_int(1, 60));
    const auto m = make_manifest(counts);
    const SplitSpec spec{rng.next_u64(), rng.uniform(0.05, 0.95), true};
    const auto a = stratified_split(m, spec);
    const auto b = stratified_split(m, spec);
    ASSERT_EQ(dump(a.train), dump(b.train));
    ASSERT_EQ(dump(a.test), dump(b.test));

    std::multiset<std::string> seen;
    for (const auto &r : a.train.records) seen.insert(r.path);
    for (const auto &r : a.test.records) seen.insert(r.path);
    std::multiset<std::string> all;
    for (const auto &r : m.records) all.insert(r.path);
    ASSERT_EQ(seen, all);

    const auto tc = a.test.class_counts();
    for (size_t c = 0; c < counts.size(); ++c) {
      const double target = std::round(spec.test_fraction * static_cast<double>(counts[c]));
      ASSERT_LE(std::abs(static_cast<double>(tc[c]) - target), 1.0) << "trial " << trial;
      ASSERT_GE(counts[c] - tc[c], 1u);
    }
  }
}

DatasetManifest tagged() {
  DatasetManifest m;
  m.classes = {"corridor", "kitchen"};
  int i = 0;
  for (const auto *robot : {"dumbo", "minnie"})
    for (const auto *light : {"cloudy", "night", "sunny"})
      for (const auto *label : {"corridor", "kitchen"})
        for (int k = 0; k < 3; ++k)
          m.records.push_back({"img" + std::to_string(i++), label, {{"robot", robot}, {"lighting", light}}, Split::kUnassigned});
  return m;
}

TEST(ScenarioTest, DefinitionsForDumboCloudy) {
  const auto s = build_idol_scenarios(tagged(), "dumbo", "cloudy");
  ASSERT_EQ(s.scenarios.size(), 4u);
  using C = TagPredicate::Clause;
  EXPECT_EQ(s.at("SBSL").predicate, s.train_filter);
  EXPECT_TRUE(s.at("SBSL").held_out_only);
  EXPECT_EQ(s.at("SBDL").predicate.clauses, (std::vector<C>{{"robot", "dumbo", true}, {"lighting", "cloudy", false}}));
  EXPECT_EQ(s.at("DBSL").predicate.clauses, (std::vector<C>{{"robot", "minnie", true}, {"lighting", "cloudy", true}}));
  EXPECT_EQ(s.at("DBDL").predicate.clauses, (std::vector<C>{{"robot", "minnie", true}, {"lighting", "cloudy", false}}));
  EXPECT_FALSE(s.at("DBDL").held_out_only);
}

TEST(ScenarioTest, Symmetry) {
  const auto s = build_idol_scenarios(tagged(), "minnie", "cloudy");
  EXPECT_EQ(s.at("DBSL").predicate.clauses[0].value, "dumbo");
}

TEST(ScenarioTest, DisjointAndCovering) {
  const auto m = tagged();
  const auto s = build_idol_scenarios(m, "dumbo", "cloudy");
  for (const auto &r : m.records) {
    int hits = 0;
    for (const auto &e : s.scenarios) hits += e.predicate.matches(r) ? 1 : 0;
    EXPECT_EQ(hits, 1) << r.path;
  }
  EXPECT_EQ(filter_manifest(m, s.at("DBDL").predicate).records.size(), 12u);  // night + sunny pooled
}

TEST(ScenarioTest, FourCellMatrix) {
  DatasetManifest m;
  m.classes = {"a"};
  int i = 0;
  for (const auto *robot : {"dumbo", "minnie"})
    for (const auto *light : {"cloudy", "night"})
      m.records.push_back({"p" + std::to_string(i++), "a", {{"robot", robot}, {"lighting", light}}, Split::kUnassigned});
  const auto s = build_idol_scenarios(m, "dumbo", "cloudy");
  const std::vector<std::string> expect = {"p0", "p1", "p2", "p3"};
  for (size_t k = 0; k < 4; ++k) {
    const auto f = filter_manifest(m, s.scenarios[k].predicate);
    ASSERT_EQ(f.records.size(), 1u);
    EXPECT_EQ(f.records[0].path, expect[k]) << s.scenarios[k].name;
  }
}

TEST(ScenarioTest, Rejections) {
  auto m = tagged();
  EXPECT_THROW(build_idol_scenarios(m, "wall-e", "cloudy"), Error);
  EXPECT_THROW(build_idol_scenarios(m, "dumbo", "foggy"), Error);
  std::erase_if(m.records, [](const auto &r) { return r.tags.at("robot") == "minnie"; });
  EXPECT_THROW(build_idol_scenarios(m, "dumbo", "cloudy"), Error);
}

}  // namespace
}  // namespace tlbench::data
