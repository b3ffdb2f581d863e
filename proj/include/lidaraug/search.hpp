// Copyright 2026 the lidaraug authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LIDARAUG__SEARCH_HPP_
#define LIDARAUG__SEARCH_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lidaraug/io.hpp"
#include "lidaraug/policy.hpp"

namespace lidaraug {

// Scores a policy at an operating point. Must be deterministic in its
// arguments; higher is better. Implementations may throw to mark a cell as
// failed (grid search records the failure and moves on).
using Evaluator =
  std::function<double(const PolicySpec & spec, double m, double p, std::uint64_t seed)>;

// The joint search space is deliberately two-dimensional, whatever the
// parameter count of the policy it drives.
inline constexpr int kSearchSpaceDims = 2;

inline std::vector<double> default_m_grid()
{
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) {
    grid.push_back(static_cast<double>(i));
  }
  return grid;
}

inline std::vector<double> default_p_grid()
{
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) {
    grid.push_back(i / 10.0);
  }
  return grid;
}

// Coefficient c such that c * anchor reproduces target exactly in double
// arithmetic, when such a c exists within 3 ulps of the true quotient;
// otherwise the correctly rounded quotient. Anchoring a formula on an
// observed optimum needs the product to land back on the optimum bit for
// bit, and the rounded quotient alone misses that for some targets.
inline double exact_ratio(double target, double anchor)
{
  if (anchor == 0.0) {
    throw std::invalid_argument("exact_ratio: anchor must be non-zero");
  }
  const double quotient = target / anchor;
  if (quotient * anchor == target) {
    return quotient;
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double up = quotient;
  double down = quotient;
  for (int i = 0; i < 3; ++i) {
    up = std::nextafter(up, kInf);
    if (up * anchor == target) {
      return up;
    }
    down = std::nextafter(down, -kInf);
    if (down * anchor == target) {
      return down;
    }
  }
  return quotient;
}

// ---------------------------------------------------------------------------
// Alignment: per-op sub-searches anchored into the shared (m, p) space.
//
// Each task grid-searches one op in isolation (every other op's gate forced
// to zero) over raw candidate values: a probability grid for the gate and,
// for ops with magnitude parameters, parallel per-parameter value grids
// (candidate j sets parameter i to mag_grids[i][j]). The found optimum is
// then anchored: coefficients are chosen so that resolving the final policy
// at the anchor point reproduces the optimum exactly.

struct AlignTask
{
  std::string op;
  std::optional<ObjectClass> cls;              // for per-class gates (drop/paste)
  std::vector<double> prob_grid;
  std::vector<std::string> mag_params;         // may be empty for gate-only ops
  std::vector<std::vector<double>> mag_grids;  // parallel to mag_params, equal lengths
};

struct AlignResult
{
  std::string op;
  std::optional<ObjectClass> cls;
  double best_prob = 0.0;
  std::vector<double> best_mags;
  double best_score = -std::numeric_limits<double>::infinity();
  double prob_coeff = 0.0;                     // filled in by align_all
  std::vector<double> mag_coeffs;
  int evaluations = 0;
};

struct AlignConfig
{
  double anchor_m = 5.0;
  double anchor_p = 0.5;
  std::vector<AlignTask> tasks;
};

struct AlignOutcome
{
  PolicySpec spec;
  std::vector<AlignResult> results;
  int evaluations = 0;
};

namespace detail {

inline ParamFormula constant_formula(const ParamFormula & base, double value)
{
  ParamFormula formula = base;
  formula.coeff = 0.0;
  formula.offset = value;
  return formula;
}

// The magnitude row a task parameter refers to: the class-qualified row when
// the task names a class, else the shared row.
inline PolicyParam * find_task_param(
  OpSpec & op, const std::string & name, const std::optional<ObjectClass> & cls)
{
  if (cls) {
    if (PolicyParam * param = op.find(name, cls)) {
      return param;
    }
  }
  return op.find(name, std::nullopt);
}

// Candidate policy for one sub-search cell: every gate in the base spec is
// forced shut except the task's, which is pinned open at prob; the task's
// magnitude parameters are pinned to the candidate values. All rows become
// constants, so the evaluator's (m, p) has no effect on the op under test.
inline PolicySpec isolation_spec(
  const PolicySpec & base, const AlignTask & task, double prob,
  const std::vector<double> & mags)
{
  PolicySpec spec = base;
  for (OpSpec & op : spec.ops) {
    for (PolicyParam & param : op.params) {
      if (param.name == "probability") {
        param.formula = constant_formula(param.formula, 0.0);
      }
    }
  }
  OpSpec * op = spec.find_op(task.op);
  if (op == nullptr) {
    throw std::invalid_argument("align: base policy has no op '" + task.op + "'");
  }
  PolicyParam * gate = op->find("probability", task.cls);
  if (gate == nullptr) {
    throw std::invalid_argument(
      "align: op '" + task.op + "' has no gate" +
      (task.cls ? " for class " + class_name(*task.cls) : ""));
  }
  gate->formula = constant_formula(gate->formula, prob);
  for (std::size_t i = 0; i < task.mag_params.size(); ++i) {
    PolicyParam * param = find_task_param(*op, task.mag_params[i], task.cls);
    if (param == nullptr) {
      throw std::invalid_argument(
        "align: op '" + task.op + "' has no parameter '" + task.mag_params[i] + "'");
    }
    param->formula = constant_formula(param->formula, mags[i]);
  }
  return spec;
}

inline void validate_align_task(const AlignTask & task)
{
  if (task.prob_grid.empty()) {
    throw std::invalid_argument("align: task for '" + task.op + "' has an empty probability grid");
  }
  if (task.mag_grids.size() != task.mag_params.size()) {
    throw std::invalid_argument(
      "align: task for '" + task.op + "' needs one value grid per magnitude parameter");
  }
  for (const auto & grid : task.mag_grids) {
    if (grid.empty() || grid.size() != task.mag_grids.front().size()) {
      throw std::invalid_argument(
        "align: task for '" + task.op + "' needs equal-length, non-empty value grids");
    }
  }
}

}  // namespace detail

// Exhaustive sub-search for one op. Cells are visited probability-major in
// grid order; strictly better scores win, so ties keep the earliest cell.
// The evaluator is called with (m, p) = (0, 0); candidates are constant.
inline AlignResult align_op(
  const PolicySpec & base, const AlignTask & task, const Evaluator & evaluate,
  std::uint64_t seed)
{
  detail::validate_align_task(task);
  const std::size_t n_shapes = task.mag_params.empty() ? 1 : task.mag_grids.front().size();
  AlignResult result;
  result.op = task.op;
  result.cls = task.cls;
  for (double prob : task.prob_grid) {
    for (std::size_t j = 0; j < n_shapes; ++j) {
      std::vector<double> mags;
      for (const auto & grid : task.mag_grids) {
        mags.push_back(grid[j]);
      }
      const PolicySpec candidate = detail::isolation_spec(base, task, prob, mags);
      const double score = evaluate(candidate, 0.0, 0.0, seed);
      ++result.evaluations;
      if (score > result.best_score) {
        result.best_score = score;
        result.best_prob = prob;
        result.best_mags = mags;
      }
    }
  }
  return result;
}

// Run every task and anchor the optima into the base spec: each aligned
// gate's coefficient becomes exact_ratio(best_prob, anchor_p) and each
// magnitude coefficient exact_ratio(best_value - row_offset, anchor_m), with
// offsets and clips kept from the base spec. Resolving the returned spec at
// (anchor_m, anchor_p) therefore reproduces every sub-search optimum.
inline AlignOutcome align_all(
  const PolicySpec & base, const AlignConfig & config, const Evaluator & evaluate,
  std::uint64_t seed)
{
  if (!(config.anchor_m > 0.0) || !(config.anchor_p > 0.0 && config.anchor_p <= 1.0)) {
    throw std::invalid_argument("align: anchor must have m > 0 and p in (0, 1]");
  }
  AlignOutcome outcome;
  outcome.spec = base;
  for (const AlignTask & task : config.tasks) {
    AlignResult result = align_op(base, task, evaluate, seed);
    OpSpec * op = outcome.spec.find_op(task.op);
    PolicyParam * gate = op->find("probability", task.cls);
    result.prob_coeff = exact_ratio(result.best_prob, config.anchor_p);
    gate->formula.coeff = result.prob_coeff;
    gate->formula.offset = 0.0;
    for (std::size_t i = 0; i < task.mag_params.size(); ++i) {
      PolicyParam * param = detail::find_task_param(*op, task.mag_params[i], task.cls);
      result.mag_coeffs.push_back(
        exact_ratio(result.best_mags[i] - param->formula.offset, config.anchor_m));
      param->formula.coeff = result.mag_coeffs.back();
    }
    outcome.evaluations += result.evaluations;
    outcome.results.push_back(std::move(result));
  }
  return outcome;
}

// Align configuration file ("LAC1"):
//
//   LAC1
//   anchor <p> <m>
//   task <op> [class=<class>] prob <v,v,...> [<param> <v,v,...>]...
//
// Magnitude grids are parallel: the j-th value of every grid forms candidate
// shape j, so all grids of a task must have equal length.
inline constexpr std::string_view kAlignConfigMagic = "LAC1";

inline AlignConfig parse_align_config(std::string_view text, std::string_view source = "<align>")
{
  detail::LineReader reader(text, source);
  if (reader.required("magic 'LAC1'") != kAlignConfigMagic) {
    reader.fail("bad magic, expected 'LAC1'");
  }
  const auto anchor_tok = detail::split_tokens(reader.required("anchor line"));
  if (anchor_tok.size() != 3 || anchor_tok[0] != "anchor") {
    reader.fail("expected 'anchor <p> <m>'");
  }
  AlignConfig config;
  config.anchor_p = reader.as_double(anchor_tok[1]);
  config.anchor_m = reader.as_double(anchor_tok[2]);
  auto parse_csv = [&reader](std::string_view csv) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= csv.size()) {
      std::size_t comma = csv.find(',', start);
      if (comma == std::string_view::npos) {
        comma = csv.size();
      }
      values.push_back(reader.as_double(csv.substr(start, comma - start)));
      start = comma + 1;
    }
    return values;
  };
  while (const auto line_opt = reader.next()) {
    const auto tok = detail::split_tokens(*line_opt);
    if (tok.empty()) {
      continue;
    }
    if (tok[0] != "task") {
      reader.fail("expected 'task' line");
    }
    if (tok.size() < 4) {
      reader.fail("task line needs an op, 'prob' and a probability grid");
    }
    AlignTask task;
    task.op = std::string(tok[1]);
    std::size_t i = 2;
    if (tok[i].substr(0, 6) == "class=") {
      const auto cls = parse_class_name(tok[i].substr(6));
      if (!cls) {
        reader.fail("unknown class '" + std::string(tok[i].substr(6)) + "'");
      }
      task.cls = *cls;
      ++i;
    }
    if (i + 1 >= tok.size() || tok[i] != "prob") {
      reader.fail("expected 'prob <v,v,...>' after the op name");
    }
    task.prob_grid = parse_csv(tok[i + 1]);
    i += 2;
    while (i < tok.size()) {
      if (i + 1 >= tok.size()) {
        reader.fail("magnitude parameter '" + std::string(tok[i]) + "' is missing its grid");
      }
      task.mag_params.push_back(std::string(tok[i]));
      task.mag_grids.push_back(parse_csv(tok[i + 1]));
      i += 2;
    }
    detail::validate_align_task(task);
    config.tasks.push_back(std::move(task));
  }
  if (config.tasks.empty()) {
    throw std::runtime_error(std::string(source) + ": align config contains no tasks");
  }
  return config;
}

// ---------------------------------------------------------------------------
// Joint (m, p) grid search.

struct GridSearchOptions
{
  std::vector<double> m_grid = default_m_grid();
  std::vector<double> p_grid = default_p_grid();
  std::uint64_t seed = 0;
  // When set, every evaluated cell is appended (and flushed) to this TSV
  // table, and a rerun resumes after the longest valid prefix already on
  // disk instead of re-evaluating it.
  std::filesystem::path table_path;
};

struct GridSearchResult
{
  double best_m = 0.0;
  double best_p = 0.0;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<ScoreRow> rows;  // all cells, grid order
  int evaluations = 0;         // fresh evaluator calls this run
  int resumed = 0;             // cells restored from the table
};

// Evaluate every (m, p) cell, m-major, and return the best-scoring cell; a
// tie keeps the earliest cell in grid order, i.e. smallest m then smallest p.
// Evaluator exceptions mark the cell failed without aborting the sweep. With
// a table path the sweep is resumable and, interrupted or not, finishes with
// a byte-identical table.
inline GridSearchResult search_mp(
  const PolicySpec & spec, const Evaluator & evaluate, const GridSearchOptions & options)
{
  if (options.m_grid.empty() || options.p_grid.empty()) {
    throw std::invalid_argument("search_mp: grids must not be empty");
  }
  const std::size_t total = options.m_grid.size() * options.p_grid.size();
  const auto cell_of = [&options](std::size_t index) {
    return std::pair<double, double>(
      options.m_grid[index / options.p_grid.size()],
      options.p_grid[index % options.p_grid.size()]);
  };

  GridSearchResult result;
  std::ofstream table;
  if (!options.table_path.empty()) {
    // Restore the longest prefix of rows that match the expected cells.
    std::vector<ScoreRow> restored;
    if (std::filesystem::exists(options.table_path)) {
      const std::string text = read_text_file(options.table_path);
      std::size_t pos = 0;
      bool header_ok = false;
      if (const std::size_t eol = text.find('\n'); eol != std::string::npos) {
        std::string_view first(text.data(), eol);
        if (!first.empty() && first.back() == '\r') {
          first.remove_suffix(1);
        }
        header_ok = first == kScoreTableHeader;
        pos = eol + 1;
      }
      while (header_ok && pos < text.size() && restored.size() < total) {
        std::size_t eol = text.find('\n', pos);
        const bool torn = eol == std::string::npos;
        if (torn) {
          eol = text.size();
        }
        const auto row = parse_score_row(std::string_view(text).substr(pos, eol - pos));
        if (!row) {
          break;
        }
        const auto [m, p] = cell_of(restored.size());
        if (row->m != m || row->p != p) {
          break;  // table belongs to a different grid; keep only what matches
        }
        restored.push_back(*row);
        pos = torn ? text.size() : eol + 1;
      }
    }
    // Rewrite header + valid prefix (dropping any torn tail), then append.
    table.open(options.table_path, std::ios::binary | std::ios::trunc);
    if (!table) {
      throw std::runtime_error("search_mp: cannot write " + options.table_path.string());
    }
    table << kScoreTableHeader << '\n';
    for (const ScoreRow & row : restored) {
      table << format_score_row(row);
    }
    table.flush();
    result.rows = std::move(restored);
    result.resumed = static_cast<int>(result.rows.size());
  }

  for (std::size_t index = result.rows.size(); index < total; ++index) {
    const auto [m, p] = cell_of(index);
    ScoreRow row;
    row.m = m;
    row.p = p;
    try {
      row.score = evaluate(spec, m, p, options.seed);
      row.ok = true;
    } catch (const std::exception &) {
      row.score = std::numeric_limits<double>::quiet_NaN();
      row.ok = false;
    }
    ++result.evaluations;
    if (table.is_open()) {
      table << format_score_row(row);
      table.flush();
    }
    result.rows.push_back(row);
  }

  bool any_ok = false;
  for (const ScoreRow & row : result.rows) {
    if (!row.ok) {
      continue;
    }
    if (!any_ok || row.score > result.best_score) {
      result.best_score = row.score;
      result.best_m = row.m;
      result.best_p = row.p;
    }
    any_ok = true;
  }
  if (!any_ok) {
    throw std::runtime_error("search_mp: every grid cell failed to evaluate");
  }
  return result;
}

}  // namespace lidaraug

#endif  // LIDARAUG__SEARCH_HPP_
