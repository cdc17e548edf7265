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
#include "tlbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tlbench/error.hpp"

namespace tlbench::report {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<Comparison> headline_comparisons() {
  const results::RowFilter standard = {{"scheme", {"baseline_fp32"}}, {"scenario", {"test"}}};
  const results::RowFilter robust = {{"scheme", {"baseline_fp32"}}, {"scenario", {"DBSL", "DBDL"}}};
  return {
      {"policy_test", "policy", "norm_aug", "extra_aug", {"dataset", "architecture", "approach"}, standard},
      {"approach_test", "approach", "l2sp", "fine_tuning", {"dataset", "architecture", "policy"}, standard},
      {"policy_different_bot", "policy", "norm_aug", "extra_aug", {"dataset", "architecture", "approach", "scenario"},
       robust},
      {"approach_different_bot", "approach", "l2sp", "fine_tuning",
       {"dataset", "architecture", "policy", "scenario"}, robust},
  };
}

namespace {

std::string fmt(double v, int precision = 2, bool sign = false) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  if (sign && v >= 0) out << '+';
  out << v;
  return out.str();
}

std::vector<std::pair<std::string, std::string>> strategies(const results::ResultTable &table) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto *ap : {"l2sp", "fine_tuning"})
    for (const auto *po : {"norm_aug", "extra_aug"}) {
      const bool present = std::any_of(table.rows().begin(), table.rows().end(), [&](const auto &r) {
        return r.key.approach == ap && r.key.policy == po;
      });
      if (present) out.emplace_back(ap, po);
    }
  // Levels outside the two named approaches/policies keep their table order.
  for (const auto &r : table.rows()) {
    const std::pair<std::string, std::string> s{r.key.approach, r.key.policy};
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

std::string short_name(const std::pair<std::string, std::string> &s) {
  const std::string ap = s.first == "fine_tuning" ? "FT" : s.first == "l2sp" ? "L2SP" : s.first;
  const std::string po = s.second == "norm_aug" ? "NormAug" : s.second == "extra_aug" ? "ExtraAug" : s.second;
  return ap + " " + po;
}

}  // namespace

std::string render_matrix(const results::ResultTable &table, const std::string &scheme, const std::string &scenario,
                          const results::ResultTable *fixtures) {
  const auto sub = table.filter({{"scheme", {scheme}}, {"scenario", {scenario}}});
  if (sub.empty()) return "";
  const auto cols = strategies(sub);
  bool with_fixture = false;
  if (fixtures != nullptr)
    for (const auto &r : sub.rows()) with_fixture = with_fixture || fixtures->find(r.key) != nullptr;

  std::ostringstream md;
  md << "| dataset | architecture |";
  for (const auto &c : cols) {
    md << ' ' << short_name(c) << " |";
    if (with_fixture) md << " published | delta |";
  }
  md << "\n|---|---|";
  for (size_t i = 0; i < cols.size(); ++i) md << (with_fixture ? "---:|---:|---:|" : "---:|");
  md << '\n';
  for (const auto &ds : sub.levels("dataset")) {
    for (const auto &arch : sub.filter({{"dataset", {ds}}}).levels("architecture")) {
      std::vector<const results::ResultRow *> cells;
      double best = -1.0;
      for (const auto &c : cols) {
        const auto *row = sub.find({ds, arch, c.first, c.second, scheme, scenario});
        cells.push_back(row);
        if (row != nullptr && row->ok()) best = std::max(best, row->balanced_accuracy_percent);
      }
      md << "| " << ds << " | " << arch << " |";
      for (size_t i = 0; i < cols.size(); ++i) {
        const auto *row = cells[i];
        if (row == nullptr) {
          md << " - |";
        } else if (!row->ok()) {
          md << " failed |";
        } else {
          const std::string v = fmt(row->balanced_accuracy_percent);
          md << ' ' << (row->balanced_accuracy_percent == best ? "<u>" + v + "</u>" : v) << " |";
        }
        if (with_fixture) {
          const auto *pub = row != nullptr ? fixtures->find(row->key) : nullptr;
          if (pub != nullptr && row->ok())
            md << ' ' << fmt(pub->balanced_accuracy_percent) << " | "
               << fmt(row->balanced_accuracy_percent - pub->balanced_accuracy_percent, 2, true) << " |";
          else
            md << " - | - |";
        }
      }
      md << '\n';
    }
  }
  return md.str();
}

json run_comparisons(const results::ResultTable &table, const metrics::ComparisonOptions &options) {
  json out = json::object();
  for (const auto &c : headline_comparisons()) {
    try {
      const auto pairs = metrics::build_pairs(table, c.factor, c.level_a, c.level_b, c.holding, c.filter);
      if (pairs.size() < 2) {
        out[c.name] = {{"computed", false}, {"reason", "fewer than two pairs"}};
        continue;
      }
      auto r = metrics::to_json(metrics::paired_comparison(table, c.factor, c.level_a, c.level_b, c.holding, c.filter,
                                                           options));
      r["computed"] = true;
      out[c.name] = r;
    } catch (const Error &e) {
      out[c.name] = {{"computed", false}, {"reason", e.what()}};
    }
  }
  return out;
}

ReportBundle emit_report(const results::ResultTable &table, const fs::path &out_dir, const ReportOptions &options) {
  if (table.empty()) throw_validation("cannot report an empty result table");
  fs::create_directories(out_dir);
  ReportBundle bundle;
  bundle.dir = out_dir;
  bundle.rows = table.size();

  const auto csv = out_dir / "results.csv";
  results::write_results_csv(table, csv);
  bundle.files.push_back(csv);

  bundle.stats = run_comparisons(table, options.stats);

  for (const auto &c : headline_comparisons()) {
    if (!bundle.stats[c.name].value("computed", false)) continue;
    const auto pairs = metrics::build_pairs(table, c.factor, c.level_a, c.level_b, c.holding, c.filter);
    const auto path = out_dir / ("slopegraph_" + c.name + ".csv");
    std::ofstream out(path);
    if (!out) throw_io("cannot write " + path.string());
    out << "pair," << c.level_a << ',' << c.level_b << '\n';
    for (size_t i = 0; i < pairs.size(); ++i)
      out << pairs.keys[i] << ',' << fmt(pairs.a[i]) << ',' << fmt(pairs.b[i]) << '\n';
    bundle.files.push_back(path);
  }

  const results::ResultTable *fixtures = options.fixtures ? &*options.fixtures : nullptr;
  std::ostringstream md;
  md << "# Balanced accuracy report\n\n" << table.size() << " result rows";
  const auto failed = std::count_if(table.rows().begin(), table.rows().end(), [](const auto &r) { return !r.ok(); });
  if (failed > 0) md << ", " << failed << " failed";
  md << ".\n";
  for (const auto &scheme : table.levels("scheme")) {
    for (const auto &scenario : table.levels("scenario")) {
      const auto matrix = render_matrix(table, scheme, scenario, fixtures);
      if (matrix.empty()) continue;
      md << "\n## " << scheme << " / " << scenario << "\n\n" << matrix;
    }
  }
  md << "\n## Statistics\n\n";
  for (const auto &c : headline_comparisons()) {
    const auto &s = bundle.stats[c.name];
    md << "- " << c.name << " (" << c.level_b << " vs " << c.level_a << "): ";
    if (!s.value("computed", false)) {
      md << "not computed (" << s.value("reason", std::string("n/a")) << ")\n";
      continue;
    }
    md << "n = " << s["n_pairs"].get<size_t>() << ", signed-rank statistic = " << fmt(s["statistic"].get<double>(), 1)
       << ", p = " << fmt(s["p_value"].get<double>(), 4) << ", d = " << fmt(s["effect_size_d"].get<double>(), 3)
       << " [" << fmt(s["ci_low"].get<double>(), 3) << ", " << fmt(s["ci_high"].get<double>(), 3) << "]\n";
  }
  const auto md_path = out_dir / "report.md";
  std::ofstream(md_path) << md.str();
  bundle.files.push_back(md_path);

  const auto json_path = out_dir / "report.json";
  json rows = json::array();
  for (const auto &r : table.rows()) rows.push_back(results::to_json(r));
  std::ofstream(json_path) << json{{"rows", rows}, {"stats", bundle.stats}}.dump(2);
  bundle.files.push_back(json_path);
  return bundle;
}

}  // namespace tlbench::report
