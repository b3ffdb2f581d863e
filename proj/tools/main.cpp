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

// Command-line front end: apply augmentation pipelines to frame files, build
// object banks, generate synthetic corpora, project frames to range images
// and back, and run the alignment / joint-search tuning procedures.

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "lidaraug/lidaraug.hpp"

namespace fs = std::filesystem;
using namespace lidaraug;

namespace {

constexpr const char * kFrameExtension = ".laf";

// --seed wins; otherwise the LIDARAUG_SEED environment variable; otherwise 0.
std::uint64_t resolve_seed(const std::optional<std::uint64_t> & flag)
{
  if (flag) {
    return *flag;
  }
  const char * env = std::getenv("LIDARAUG_SEED");
  if (env == nullptr || *env == '\0') {
    return 0;
  }
  const auto value = detail::try_parse_uint(env);
  if (!value) {
    throw CLI::ValidationError(
      "LIDARAUG_SEED", std::string("not an unsigned integer: '") + env + "'");
  }
  return *value;
}

std::vector<fs::path> list_frame_files(const fs::path & dir)
{
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto & entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == kFrameExtension) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<Frame> load_frames(const fs::path & dir)
{
  std::vector<Frame> frames;
  for (const fs::path & path : list_frame_files(dir)) {
    frames.push_back(parse_frame(read_text_file(path), path.string()));
  }
  return frames;
}

PolicySpec load_policy_or_default(const std::string & path)
{
  if (path.empty()) {
    return default_policy();
  }
  return parse_policy(read_text_file(path), path);
}

std::vector<double> parse_grid_csv(const std::string & csv, const std::string & flag)
{
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t comma = csv.find(',', start);
    if (comma == std::string::npos) {
      comma = csv.size();
    }
    const auto value = detail::try_parse_double(std::string_view(csv).substr(start, comma - start));
    if (!value) {
      throw CLI::ValidationError(flag, "malformed number in grid '" + csv + "'");
    }
    values.push_back(*value);
    start = comma + 1;
  }
  return values;
}

std::set<ObjectClass> parse_class_csv(const std::string & csv, const std::string & flag)
{
  std::set<ObjectClass> classes;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t comma = csv.find(',', start);
    if (comma == std::string::npos) {
      comma = csv.size();
    }
    const std::string_view name = std::string_view(csv).substr(start, comma - start);
    const auto cls = parse_class_name(name);
    if (!cls) {
      throw CLI::ValidationError(flag, "unknown class '" + std::string(name) + "'");
    }
    classes.insert(*cls);
    start = comma + 1;
  }
  return classes;
}

// Run a shell command, capturing stdout. Returns the output and stores the
// exit status.
std::string run_capture(const std::string & command, int & exit_status)
{
  FILE * pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) {
    throw std::runtime_error("cannot spawn: " + command);
  }
  std::string output;
  char buffer[4096];
  std::size_t n = 0;
  while ((n = fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
    output.append(buffer, n);
  }
  const int status = pclose(pipe);
  exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return output;
}

std::string shell_quote(const std::string & arg)
{
  if (arg.find('\'') != std::string::npos) {
    throw std::runtime_error("refusing to pass argument containing a single quote: " + arg);
  }
  return "'" + arg + "'";
}

// Evaluator selector: "proxy" scores with the built-in synthetic objective;
// "cmd:PROG" invokes PROG <policy-file> <m> <p> <seed> and reads one real
// number from its stdout.
Evaluator make_evaluator(const std::string & selector)
{
  if (selector == "proxy") {
    return [](const PolicySpec & spec, double m, double p, std::uint64_t seed) {
      return proxy_score(spec, m, p, seed);
    };
  }
  const std::string prefix = "cmd:";
  if (selector.rfind(prefix, 0) != 0 || selector.size() == prefix.size()) {
    throw CLI::ValidationError("--evaluator", "expected 'proxy' or 'cmd:<program>'");
  }
  const std::string program = selector.substr(prefix.size());
  auto counter = std::make_shared<std::atomic<std::uint64_t>>(0);
  return [program, counter](const PolicySpec & spec, double m, double p, std::uint64_t seed) {
    const fs::path policy_path =
      fs::temp_directory_path() /
      ("lidaraug-eval-" + std::to_string(::getpid()) + "-" +
       std::to_string(counter->fetch_add(1)) + ".lap");
    atomic_write_file(policy_path, serialize_policy(spec));
    const std::string command = shell_quote(program) + " " + shell_quote(policy_path.string()) +
                                " " + format_double(m) + " " + format_double(p) + " " +
                                std::to_string(seed);
    int exit_status = 0;
    const std::string output = run_capture(command, exit_status);
    fs::remove(policy_path);
    if (exit_status != 0) {
      throw std::runtime_error(
        "evaluator command failed with status " + std::to_string(exit_status));
    }
    // Keep the first line alive while the token views point into it.
    const std::size_t eol = output.find('\n');
    const std::string first_line =
      output.substr(0, eol == std::string::npos ? output.size() : eol);
    const auto tokens = detail::split_tokens(first_line);
    if (tokens.empty()) {
      throw std::runtime_error("evaluator command produced no score");
    }
    const auto score = detail::try_parse_double(tokens[0]);
    if (!score) {
      throw std::runtime_error(
        "evaluator command produced a malformed score: '" + std::string(tokens[0]) + "'");
    }
    return *score;
  };
}

// ---------------------------------------------------------------------------

int cmd_apply(
  const std::string & in_dir, const std::string & out_dir, const std::string & policy_path,
  double m, double p, std::uint64_t seed, const std::string & bank_path,
  const std::string & partners_dir, int jobs)
{
  const PolicySpec spec = load_policy_or_default(policy_path);
  const std::string policy_text = serialize_policy(spec);
  const ResolvedPolicy resolved = resolve(spec, m, p);

  ObjectBank bank;
  std::vector<Frame> partners;
  PipelineBanks banks;
  if (!bank_path.empty()) {
    bank = parse_bank(read_text_file(bank_path), bank_path);
    banks.object_bank = &bank;
  }
  if (!partners_dir.empty()) {
    partners = load_frames(partners_dir);
    banks.partner_frames = &partners;
  }
  // Fail fast on configuration holes instead of once per frame.
  if (const ResolvedOp * paste = resolved.find("paste_box")) {
    for (ObjectClass cls : paste->classes_of("probability")) {
      if (paste->value("probability", cls) > 0.0 && banks.object_bank == nullptr) {
        std::cerr << "error: paste_box can fire at (m=" << format_double(m)
                  << ", p=" << format_double(p) << ") but no --bank was given\n";
        return 2;
      }
    }
  }
  if (const ResolvedOp * swap = resolved.find("swap_background")) {
    if (swap->has("probability") && swap->value("probability") > 0.0 &&
        (banks.partner_frames == nullptr || banks.partner_frames->empty())) {
      std::cerr << "error: swap_background can fire at (m=" << format_double(m)
                << ", p=" << format_double(p) << ") but no --partners frames were given\n";
      return 2;
    }
  }

  const std::vector<fs::path> files = list_frame_files(in_dir);
  fs::create_directories(out_dir);

  const RngStream root = RngStream::from_seed(seed);
  ApplyStats stats;
  std::vector<std::string> errors(files.size());
  std::mutex stats_mutex;
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, jobs);

  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < files.size(); i = next.fetch_add(1)) {
      try {
        const Frame frame = parse_frame(read_text_file(files[i]), files[i].string());
        ApplyStats local;
        const Frame augmented =
          apply_pipeline(frame, spec, m, p, root.derive(frame.frame_id, 0), banks, &local);
        atomic_write_file(fs::path(out_dir) / files[i].filename(), serialize_frame(augmented));
        std::lock_guard<std::mutex> lock(stats_mutex);
        stats.frames += local.frames;
        for (const auto & [key, count] : local.fires) {
          stats.fires[key] += count;
        }
      } catch (const std::exception & err) {
        errors[i] = err.what();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 1; t < workers; ++t) {
    threads.emplace_back(worker);
  }
  worker();
  for (std::thread & thread : threads) {
    thread.join();
  }

  atomic_write_file(
    fs::path(out_dir) / "manifest.txt", build_manifest(policy_text, m, p, seed, stats));

  int failed = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!errors[i].empty()) {
      ++failed;
      std::cerr << "error: " << errors[i] << "\n";
    }
  }
  std::cout << "applied " << (files.size() - static_cast<std::size_t>(failed)) << "/"
            << files.size() << " frames -> " << out_dir << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_synth(
  const std::string & out_dir, int n_frames, std::uint64_t seed, int objects, double extent,
  double density, int rows, int cols, int points_min, int points_max)
{
  SceneConfig config;
  config.seed = seed;
  config.n_objects = objects;
  config.extent = extent;
  config.background_density = density;
  config.rows = rows;
  config.cols = cols;
  config.points_per_object_min = points_min;
  config.points_per_object_max = points_max;
  const std::vector<Frame> frames = generate_frames(config, n_frames);
  fs::create_directories(out_dir);
  for (const Frame & frame : frames) {
    atomic_write_file(
      fs::path(out_dir) / (frame.frame_id + kFrameExtension), serialize_frame(frame));
  }
  std::cout << "wrote " << frames.size() << " frames -> " << out_dir << "\n";
  return 0;
}

int cmd_build_bank(
  const std::string & in_dir, const std::string & out_path, const std::string & classes_csv)
{
  const std::set<ObjectClass> classes = parse_class_csv(classes_csv, "--classes");
  const std::vector<Frame> frames = load_frames(in_dir);
  const ObjectBank bank = build_object_bank(frames, classes);
  atomic_write_file(out_path, serialize_bank(bank));
  if (bank.exemplars.empty()) {
    std::cerr << "warning: extracted 0 exemplars\n";
  }
  std::cout << "bank with " << bank.exemplars.size() << " exemplars -> " << out_path << "\n";
  return 0;
}

int cmd_project(
  const std::string & in_path, const std::string & out_path, bool reverse, bool roundtrip,
  const std::string & frame_id)
{
  if (!reverse) {
    const Frame frame = parse_frame(read_text_file(in_path), in_path);
    if (frame.rows == 0) {
      std::cerr << "error: " << in_path << ": frame declares no range view\n";
      return 2;
    }
    const RangeViewGeometry geom = default_geometry(frame.rows, frame.cols);
    const RangeImage image = from_points(frame.points, geom);
    if (!out_path.empty()) {
      atomic_write_file(out_path, serialize_image(image));
    }
    std::size_t occupied = 0;
    for (const RangeCell & cell : image.cells) {
      occupied += cell.empty() ? 0 : 1;
    }
    const std::size_t occluded = frame.points.size() - occupied;
    std::cout << "projected " << frame.points.size() << " points, " << occluded
              << " occluded\n";
    if (roundtrip) {
      const std::vector<Point> restored = to_points(image);
      const RangeImage again = from_points(restored, geom);
      const bool pass = again == image;
      std::cout << "roundtrip " << (pass ? "PASS" : "FAIL") << "\n";
      return pass ? 0 : 3;
    }
    return 0;
  }
  const RangeImage image = parse_image(read_text_file(in_path), in_path);
  Frame frame;
  frame.frame_id = frame_id;
  frame.rows = image.geometry.rows;
  frame.cols = image.geometry.cols;
  frame.points = to_points(image);
  if (!out_path.empty()) {
    atomic_write_file(out_path, serialize_frame(frame));
  }
  std::cout << "restored " << frame.points.size() << " points\n";
  if (roundtrip) {
    const RangeImage again = from_points(frame.points, image.geometry);
    const bool pass = again == image;
    std::cout << "roundtrip " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 3;
  }
  return 0;
}

int cmd_align(
  const std::string & config_path, const std::string & policy_path, const std::string & out_path,
  const std::string & report_path, const std::string & evaluator_sel, std::uint64_t seed)
{
  const PolicySpec base = load_policy_or_default(policy_path);
  const AlignConfig config = parse_align_config(read_text_file(config_path), config_path);
  const Evaluator evaluate = make_evaluator(evaluator_sel);
  const AlignOutcome outcome = align_all(base, config, evaluate, seed);
  atomic_write_file(out_path, serialize_policy(outcome.spec));

  std::string report;
  for (const AlignResult & result : outcome.results) {
    report += "task " + result.op;
    if (result.cls) {
      report += " class=" + class_name(*result.cls);
    }
    report += " best_prob " + format_double(result.best_prob);
    report += " prob_coeff " + format_double(result.prob_coeff);
    for (std::size_t i = 0; i < result.best_mags.size(); ++i) {
      report += " best_mag " + format_double(result.best_mags[i]);
      report += " mag_coeff " + format_double(result.mag_coeffs[i]);
    }
    report += " evaluations " + std::to_string(result.evaluations);
    report += "\n";
  }
  report += "total_evaluations " + std::to_string(outcome.evaluations) + "\n";
  if (!report_path.empty()) {
    atomic_write_file(report_path, report);
  }
  std::cout << report;
  std::cout << "aligned policy -> " << out_path << "\n";
  return 0;
}

int cmd_search(
  const std::string & policy_path, const std::string & grid_m, const std::string & grid_p,
  const std::string & table_path, const std::string & evaluator_sel, std::uint64_t seed)
{
  const PolicySpec spec = load_policy_or_default(policy_path);
  GridSearchOptions options;
  if (!grid_m.empty()) {
    options.m_grid = parse_grid_csv(grid_m, "--grid-m");
  }
  if (!grid_p.empty()) {
    options.p_grid = parse_grid_csv(grid_p, "--grid-p");
  }
  options.seed = seed;
  options.table_path = table_path;
  const Evaluator evaluate = make_evaluator(evaluator_sel);
  const GridSearchResult result = search_mp(spec, evaluate, options);
  std::cout << "cells " << result.rows.size() << " evaluated " << result.evaluations
            << " resumed " << result.resumed << "\n";
  std::cout << "best m " << format_double(result.best_m) << " p " << format_double(result.best_p)
            << " score " << format_double(result.best_score) << "\n";
  return 0;
}

int cmd_policy(const std::string & out_path)
{
  const std::string text = serialize_policy(default_policy());
  if (out_path.empty()) {
    std::cout << text;
  } else {
    atomic_write_file(out_path, text);
    std::cout << "default policy -> " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"deterministic lidar augmentation toolkit"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed_flag;
  std::string format = "laf1";

  // apply
  auto * apply = app.add_subcommand("apply", "augment a directory of frame files");
  std::string apply_in, apply_out, apply_policy, apply_bank, apply_partners;
  double apply_m = 0.0;
  double apply_p = 0.0;
  int apply_jobs = 1;
  apply->add_option("--in", apply_in, "input frame directory")->required();
  apply->add_option("--out", apply_out, "output directory")->required();
  apply->add_option("--m", apply_m, "magnitude driver (>= 0)")->required();
  apply->add_option("--p", apply_p, "probability driver in [0, 1]")->required();
  apply->add_option("--policy", apply_policy, "policy file (default: built-in policy)");
  apply->add_option("--bank", apply_bank, "object bank file for paste_box");
  apply->add_option("--partners", apply_partners, "partner frame directory for swap_background");
  apply->add_option("--jobs", apply_jobs, "worker threads (default 1)")
    ->check(CLI::PositiveNumber);
  apply->add_option("--seed", seed_flag, "base seed (default: $LIDARAUG_SEED, else 0)");
  apply->add_option("--format", format, "frame file format (only 'laf1')")
    ->check(CLI::IsMember({"laf1"}));

  // synth
  auto * synth = app.add_subcommand("synth", "generate a synthetic frame corpus");
  std::string synth_out;
  int synth_frames = 1;
  int synth_objects = 50;
  double synth_extent = 50.0;
  double synth_density = 0.2;
  int synth_rows = kDefaultRows;
  int synth_cols = kDefaultCols;
  int synth_points_min = 20;
  int synth_points_max = 80;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--frames", synth_frames, "number of frames")->check(CLI::PositiveNumber);
  synth->add_option("--objects", synth_objects, "objects per frame");
  synth->add_option("--extent", synth_extent, "half-width of the ground patch [m]");
  synth->add_option("--density", synth_density, "background returns per square meter");
  synth->add_option("--rows", synth_rows, "range-view rows");
  synth->add_option("--cols", synth_cols, "range-view cols");
  synth->add_option("--points-min", synth_points_min, "min points per object");
  synth->add_option("--points-max", synth_points_max, "max points per object");
  synth->add_option("--seed", seed_flag, "base seed (default: $LIDARAUG_SEED, else 0)");
  synth->add_option("--format", format, "frame file format (only 'laf1')")
    ->check(CLI::IsMember({"laf1"}));

  // build-bank
  auto * bank = app.add_subcommand("build-bank", "extract an object bank from frame files");
  std::string bank_in, bank_out;
  std::string bank_classes = "vehicle,pedestrian";
  bank->add_option("--in", bank_in, "input frame directory")->required();
  bank->add_option("--out", bank_out, "output bank file")->required();
  bank->add_option("--classes", bank_classes, "classes to extract (comma separated)");

  // project
  auto * project = app.add_subcommand("project", "convert frames to range images and back");
  std::string project_in, project_out;
  std::string project_frame_id = "projected";
  bool project_reverse = false;
  bool project_roundtrip = false;
  project->add_option("--in", project_in, "input file")->required();
  project->add_option("--out", project_out, "output file");
  project->add_flag("--reverse", project_reverse, "input is a range image, restore points");
  project->add_flag("--roundtrip", project_roundtrip, "verify the conversion round-trips");
  project->add_option("--frame-id", project_frame_id, "frame id for restored frames");

  // align
  auto * align = app.add_subcommand("align", "anchor per-op optima into the shared space");
  std::string align_config, align_policy, align_out, align_report;
  std::string align_evaluator = "proxy";
  align->add_option("--config", align_config, "align config file (LAC1)")->required();
  align->add_option("--out", align_out, "aligned policy output file")->required();
  align->add_option("--policy", align_policy, "base policy file (default: built-in policy)");
  align->add_option("--report", align_report, "write the per-task report here too");
  align->add_option("--evaluator", align_evaluator, "'proxy' or 'cmd:<program>'");
  align->add_option("--seed", seed_flag, "base seed (default: $LIDARAUG_SEED, else 0)");

  // search
  auto * search = app.add_subcommand("search", "joint grid search over (m, p)");
  std::string search_policy, search_grid_m, search_grid_p, search_table;
  std::string search_evaluator = "proxy";
  search->add_option("--policy", search_policy, "policy file (default: built-in policy)");
  search->add_option("--grid-m", search_grid_m, "magnitude grid (comma separated)");
  search->add_option("--grid-p", search_grid_p, "probability grid (comma separated)");
  search->add_option("--table", search_table, "resumable score table path");
  search->add_option("--evaluator", search_evaluator, "'proxy' or 'cmd:<program>'");
  search->add_option("--seed", seed_flag, "base seed (default: $LIDARAUG_SEED, else 0)");

  // policy
  auto * policy = app.add_subcommand("policy", "emit the built-in default policy");
  std::string policy_out;
  policy->add_option("--out", policy_out, "output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*apply) {
      return cmd_apply(
        apply_in, apply_out, apply_policy, apply_m, apply_p, resolve_seed(seed_flag), apply_bank,
        apply_partners, apply_jobs);
    }
    if (*synth) {
      return cmd_synth(
        synth_out, synth_frames, resolve_seed(seed_flag), synth_objects, synth_extent,
        synth_density, synth_rows, synth_cols, synth_points_min, synth_points_max);
    }
    if (*bank) {
      return cmd_build_bank(bank_in, bank_out, bank_classes);
    }
    if (*project) {
      return cmd_project(
        project_in, project_out, project_reverse, project_roundtrip, project_frame_id);
    }
    if (*align) {
      return cmd_align(
        align_config, align_policy, align_out, align_report, align_evaluator,
        resolve_seed(seed_flag));
    }
    if (*search) {
      return cmd_search(
        search_policy, search_grid_m, search_grid_p, search_table, search_evaluator,
        resolve_seed(seed_flag));
    }
    if (*policy) {
      return cmd_policy(policy_out);
    }
  } catch (const CLI::Error & err) {
    return app.exit(err);
  } catch (const std::exception & err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
