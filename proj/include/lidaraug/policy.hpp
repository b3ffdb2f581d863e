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

#ifndef LIDARAUG__POLICY_HPP_
#define LIDARAUG__POLICY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lidaraug/augment.hpp"
#include "lidaraug/range_image.hpp"
#include "lidaraug/rng.hpp"
#include "lidaraug/types.hpp"

namespace lidaraug {

// An augmentation space maps two scalars -- a shared magnitude m >= 0 and a
// shared probability p in [0, 1] -- to every concrete op parameter. Each
// parameter is affine in exactly one of the two drivers, then clipped:
//
//     value = clip(offset + coeff * driver, clip_lo, clip_hi)
//
// so tuning the whole family means searching a 2D space no matter how many
// parameters the ops expose.

enum class Driver { kMagnitude, kProbability };

struct ParamFormula
{
  Driver driver = Driver::kMagnitude;
  double coeff = 0.0;
  double offset = 0.0;
  double clip_lo = -std::numeric_limits<double>::infinity();
  double clip_hi = std::numeric_limits<double>::infinity();

  double resolve(double m, double p) const
  {
    const double g = driver == Driver::kMagnitude ? m : p;
    double value = offset + coeff * g;
    if (value < clip_lo) {
      value = clip_lo;
    }
    if (value > clip_hi) {
      value = clip_hi;
    }
    return value;
  }

  friend bool operator==(const ParamFormula &, const ParamFormula &) = default;
};

// One tunable row: a named op parameter, optionally qualified by object class
// (drop/paste tune vehicles and pedestrians separately), and its formula.
struct PolicyParam
{
  std::string name;
  std::optional<ObjectClass> cls;
  ParamFormula formula;

  friend bool operator==(const PolicyParam &, const PolicyParam &) = default;
};

struct OpSpec
{
  std::string op;
  std::vector<PolicyParam> params;

  const PolicyParam * find(
    const std::string & name, std::optional<ObjectClass> cls = std::nullopt) const
  {
    for (const PolicyParam & param : params) {
      if (param.name == name && param.cls == cls) {
        return &param;
      }
    }
    return nullptr;
  }

  PolicyParam * find(const std::string & name, std::optional<ObjectClass> cls = std::nullopt)
  {
    for (PolicyParam & param : params) {
      if (param.name == name && param.cls == cls) {
        return &param;
      }
    }
    return nullptr;
  }

  friend bool operator==(const OpSpec &, const OpSpec &) = default;
};

struct PolicySpec
{
  std::vector<OpSpec> ops;

  const OpSpec * find_op(const std::string & name) const
  {
    for (const OpSpec & op : ops) {
      if (op.op == name) {
        return &op;
      }
    }
    return nullptr;
  }

  OpSpec * find_op(const std::string & name)
  {
    for (OpSpec & op : ops) {
      if (op.op == name) {
        return &op;
      }
    }
    return nullptr;
  }

  // Number of concrete parameters the two drivers control.
  int parameter_count() const
  {
    int n = 0;
    for (const OpSpec & op : ops) {
      n += static_cast<int>(op.params.size());
    }
    return n;
  }

  friend bool operator==(const PolicySpec &, const PolicySpec &) = default;
};

namespace detail {

inline PolicyParam prob_row(double coeff, std::optional<ObjectClass> cls = std::nullopt)
{
  PolicyParam row;
  row.name = "probability";
  row.cls = cls;
  row.formula = {Driver::kProbability, coeff, 0.0, 0.0, 1.0};
  return row;
}

inline PolicyParam mag_row(
  const std::string & name, double coeff, double offset, double lo, double hi,
  std::optional<ObjectClass> cls = std::nullopt)
{
  PolicyParam row;
  row.name = name;
  row.cls = cls;
  row.formula = {Driver::kMagnitude, coeff, offset, lo, hi};
  return row;
}

}  // namespace detail

// Canonical op order of the pipeline.
inline const std::vector<std::string> & pipeline_op_order()
{
  static const std::vector<std::string> order = {
    "drop_box",     "paste_box",    "swap_background", "global_rotate",    "global_scale",
    "global_drop",  "frustum_drop", "frustum_noise",   "global_translate", "global_flip",
  };
  return order;
}

// The stock augmentation space. 28 concrete parameters, all affine in the two
// drivers; at the reference operating point (m, p) = (5, 0.5) the resolved
// values match the coefficients' intent (e.g. rotation fires at 0.7 with max
// angle 1.1*pi, vehicles lose up to 10 boxes and gain up to 16).
inline PolicySpec default_policy()
{
  using detail::mag_row;
  using detail::prob_row;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr auto kVeh = ObjectClass::kVehicle;
  constexpr auto kPed = ObjectClass::kPedestrian;

  PolicySpec spec;

  OpSpec drop_box{"drop_box", {}};
  drop_box.params.push_back(prob_row(1.0, kVeh));
  drop_box.params.push_back(prob_row(1.0, kPed));
  drop_box.params.push_back(mag_row("count", 2.0, 0.0, 0.0, kInf, kVeh));
  drop_box.params.push_back(mag_row("count", 2.8, 0.0, 0.0, kInf, kPed));
  spec.ops.push_back(std::move(drop_box));

  OpSpec paste_box{"paste_box", {}};
  paste_box.params.push_back(prob_row(1.4, kVeh));
  paste_box.params.push_back(prob_row(1.0, kPed));
  paste_box.params.push_back(mag_row("count", 3.2, 0.0, 0.0, kInf, kVeh));
  paste_box.params.push_back(mag_row("count", 4.4, 0.0, 0.0, kInf, kPed));
  spec.ops.push_back(std::move(paste_box));

  OpSpec swap_bg{"swap_background", {}};
  swap_bg.params.push_back(prob_row(0.6));
  spec.ops.push_back(std::move(swap_bg));

  OpSpec rotate{"global_rotate", {}};
  rotate.params.push_back(prob_row(1.4));
  rotate.params.push_back(mag_row("max_angle", 0.22 * kPi, 0.0, 0.0, kPi));
  spec.ops.push_back(std::move(rotate));

  OpSpec scale{"global_scale", {}};
  scale.params.push_back(prob_row(1.0));
  scale.params.push_back(mag_row("half_width", 0.036, 0.0, 0.0, kInf));
  spec.ops.push_back(std::move(scale));

  OpSpec gdrop{"global_drop", {}};
  gdrop.params.push_back(prob_row(1.0));
  gdrop.params.push_back(mag_row("drop_ratio", -0.18, 1.0, 0.0, 0.8));
  spec.ops.push_back(std::move(gdrop));

  OpSpec fdrop{"frustum_drop", {}};
  fdrop.params.push_back(prob_row(1.0));
  fdrop.params.push_back(mag_row("width_inclination", 0.1 * kPi, 0.0, 0.0, kPi));
  fdrop.params.push_back(mag_row("width_azimuth", 0.1 * kPi, 0.0, 0.0, kTwoPi));
  fdrop.params.push_back(mag_row("min_range", -7.5, 75.0, 0.0, kInf));
  fdrop.params.push_back(mag_row("drop_ratio", -0.1, 1.0, 0.0, 0.8));
  spec.ops.push_back(std::move(fdrop));

  OpSpec fnoise{"frustum_noise", {}};
  fnoise.params.push_back(prob_row(0.6));
  fnoise.params.push_back(mag_row("width_inclination", 0.14 * kPi, 0.0, 0.0, kPi));
  fnoise.params.push_back(mag_row("width_azimuth", 0.14 * kPi, 0.0, 0.0, kTwoPi));
  fnoise.params.push_back(mag_row("min_range", -10.5, 75.0, 0.0, kInf));
  fnoise.params.push_back(mag_row("noise_level", 0.14, 0.0, 0.0, 1.0));
  spec.ops.push_back(std::move(fnoise));

  OpSpec translate{"global_translate", {}};
  translate.params.push_back(prob_row(1.4));
  translate.params.push_back(mag_row("stddev", 0.66, 0.0, 0.0, kInf));
  spec.ops.push_back(std::move(translate));

  OpSpec flip{"global_flip", {}};
  flip.params.push_back(PolicyParam{
    "probability", std::nullopt, ParamFormula{Driver::kProbability, 1.0, 0.0, 0.0, 0.5}});
  spec.ops.push_back(std::move(flip));

  return spec;
}

// A policy with every formula resolved at a concrete (m, p).
struct ResolvedParam
{
  std::string name;
  std::optional<ObjectClass> cls;
  double value = 0.0;
};

struct ResolvedOp
{
  std::string op;
  std::vector<ResolvedParam> values;

  bool has(const std::string & name, std::optional<ObjectClass> cls = std::nullopt) const
  {
    for (const ResolvedParam & rp : values) {
      if (rp.name == name && rp.cls == cls) {
        return true;
      }
    }
    return false;
  }

  double value(const std::string & name, std::optional<ObjectClass> cls = std::nullopt) const
  {
    for (const ResolvedParam & rp : values) {
      if (rp.name == name && rp.cls == cls) {
        return rp.value;
      }
    }
    throw std::out_of_range(
      "resolved op '" + op + "' has no parameter '" + name + "'" +
      (cls ? " for class " + class_name(*cls) : ""));
  }

  // Classes a per-class parameter is defined for, in ascending id order.
  std::vector<ObjectClass> classes_of(const std::string & name) const
  {
    std::vector<ObjectClass> out;
    for (const ResolvedParam & rp : values) {
      if (rp.name == name && rp.cls) {
        out.push_back(*rp.cls);
      }
    }
    std::sort(out.begin(), out.end(), [](ObjectClass a, ObjectClass b) {
      return static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b);
    });
    return out;
  }
};

struct ResolvedPolicy
{
  double m = 0.0;
  double p = 0.0;
  std::vector<ResolvedOp> ops;

  const ResolvedOp * find(const std::string & op) const
  {
    for (const ResolvedOp & r : ops) {
      if (r.op == op) {
        return &r;
      }
    }
    return nullptr;
  }

  double value(
    const std::string & op, const std::string & name,
    std::optional<ObjectClass> cls = std::nullopt) const
  {
    const ResolvedOp * r = find(op);
    if (r == nullptr) {
      throw std::out_of_range("resolved policy has no op '" + op + "'");
    }
    return r->value(name, cls);
  }
};

// Evaluate every formula at (m, p). m must be finite and non-negative, p must
// lie in [0, 1]; out-of-domain drivers throw std::invalid_argument.
inline ResolvedPolicy resolve(const PolicySpec & spec, double m, double p)
{
  if (!(std::isfinite(m) && m >= 0.0)) {
    throw std::invalid_argument("resolve: magnitude m must be finite and >= 0");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("resolve: probability p must lie in [0, 1]");
  }
  ResolvedPolicy out;
  out.m = m;
  out.p = p;
  for (const OpSpec & op : spec.ops) {
    ResolvedOp r;
    r.op = op.op;
    for (const PolicyParam & param : op.params) {
      r.values.push_back(ResolvedParam{param.name, param.cls, param.formula.resolve(m, p)});
    }
    out.ops.push_back(std::move(r));
  }
  return out;
}

// External data some ops need: an object bank for paste_box and partner
// frames for swap_background. Only required when the corresponding op can
// fire (its resolved probability is positive).
struct PipelineBanks
{
  const ObjectBank * object_bank = nullptr;
  const std::vector<Frame> * partner_frames = nullptr;
};

// Optional knobs for apply_pipeline.
struct PipelineConfig
{
  // Grid used to assign rays to newly introduced points in the final
  // occlusion pass. Defaults to the uniform grid for the frame's declared
  // rows/cols; must match those dimensions when set.
  std::optional<RangeViewGeometry> geometry;
};

// Aggregated fire counts over one or more apply_pipeline calls. Keys are the
// op name, or "op.class" for per-class gates.
struct ApplyStats
{
  std::int64_t frames = 0;
  std::map<std::string, std::int64_t> fires;
};

namespace detail {

inline int round_count(double value)
{
  if (value <= 0.0) {
    return 0;
  }
  return static_cast<int>(std::llrint(value));  // ties to even, matching IEEE default
}

// Per-class gate + count resolution shared by drop_box and paste_box.
inline std::map<ObjectClass, int> gated_counts(
  const ResolvedOp & op, RngStream & rng, ApplyStats * stats)
{
  std::map<ObjectClass, int> counts;
  for (ObjectClass cls : op.classes_of("probability")) {
    const bool fired = rng.bernoulli(op.value("probability", cls));
    if (!fired) {
      continue;
    }
    if (stats != nullptr) {
      ++stats->fires[op.op + "." + class_name(cls)];
    }
    counts[cls] = round_count(op.value("count", cls));
  }
  return counts;
}

}  // namespace detail

// Run the whole op chain on one frame at the given operating point.
//
// Determinism contract: the op at pipeline position i consumes the child
// stream frame_stream.derive(op_name, i) and nothing else. Its gate Bernoulli
// is the first draw on that stream, so a fired op behaves exactly like the
// primitive called directly on a stream whose first draw was spent on the
// gate. Streams of different ops never interact, and ops that do not fire
// still leave other ops' draws unchanged.
//
// If at least one op fired, the frame declares a range view, and any point
// carries ray indices, a single finishing pass assigns rays to new points
// (pasted objects) and resolves per-cell occlusion. When no op fires -- in
// particular at (m, p) = (0, 0), where no gate can open -- the frame is
// returned bit-identical.
inline Frame apply_pipeline(
  const Frame & frame, const PolicySpec & spec, double m, double p,
  const RngStream & frame_stream, const PipelineBanks & banks = {}, ApplyStats * stats = nullptr,
  const PipelineConfig & config = {})
{
  const ResolvedPolicy resolved = resolve(spec, m, p);
  if (stats != nullptr) {
    ++stats->frames;
  }
  Frame out = frame;
  bool any_fired = false;
  for (std::size_t i = 0; i < resolved.ops.size(); ++i) {
    const ResolvedOp & op = resolved.ops[i];
    RngStream rng = frame_stream.derive(op.op, i);
    if (op.op == "drop_box") {
      const auto counts = detail::gated_counts(op, rng, stats);
      if (!counts.empty()) {
        any_fired = true;
        out = drop_box(out, counts, rng);
      }
    } else if (op.op == "paste_box") {
      bool possible = false;
      for (ObjectClass cls : op.classes_of("probability")) {
        possible = possible || op.value("probability", cls) > 0.0;
      }
      if (possible && banks.object_bank == nullptr) {
        throw std::invalid_argument(
          "apply_pipeline: paste_box can fire but no object bank was provided");
      }
      const auto counts = detail::gated_counts(op, rng, stats);
      if (!counts.empty()) {
        any_fired = true;
        out = paste_box(out, *banks.object_bank, counts, rng);
      }
    } else if (op.op == "swap_background") {
      const double prob = op.value("probability");
      if (prob > 0.0 &&
          (banks.partner_frames == nullptr || banks.partner_frames->empty())) {
        throw std::invalid_argument(
          "apply_pipeline: swap_background can fire but no partner frames were provided");
      }
      if (rng.bernoulli(prob)) {
        any_fired = true;
        if (stats != nullptr) {
          ++stats->fires[op.op];
        }
        const std::size_t pick =
          static_cast<std::size_t>(rng.next_below(banks.partner_frames->size()));
        out = swap_background(out, (*banks.partner_frames)[pick]);
      }
    } else if (op.op == "global_rotate") {
      if (rng.bernoulli(op.value("probability"))) {
        any_fired = true;
        if (stats != nullptr) {
          ++stats->fires[op.op];
        }
        out = global_rotate(out, op.value("max_angle"), rng);
      }
    } else if (op.op == "global_scale") {
      if (rng.bernoulli(op.value("probability"))) {
        any_fired = true;
        if (stats != nullptr) {
          ++stats->fires[op.op];
        }
        out = global_scale(out, op.value("half_width"), rng);
      }
    } else if (op.op == "global_drop") {
      if (rng.bernoulli(op.value("probability"))) {
        any_fired = true;
        if (stats != nullptr) {
          ++stats->fires[op.op];
        }
        out = global_drop(out, op.value("drop_ratio"), rng);
      }
    } else if (op.op == "frustum_drop") {
      if (rng.bernoulli(op.value("probability"))) {
        any_fired = true;
        if (stats != nullptr) {
          ++stats->fires[op.op];
        }
        out = frustum_drop(
          out, op.value("width_inclination"), op.value("width_azimuth"), op.value("min_range"),
          op.value("drop_ratio"), rng);
      }
    } else if (op.op == "frustum_noise") {
      if (rng.bernoulli(op.value("probability"))) {
        any_fired = true;
        if (stats != nullptr) {
          ++stats->fires[op.op];
        }
        out = frustum_noise(
          out, op.value("width_inclination"), op.value("width_azimuth"), op.value("min_range"),
          op.value("noise_level"), rng);
      }
    } else if (op.op == "global_translate") {
      if (rng.bernoulli(op.value("probability"))) {
        any_fired = true;
        if (stats != nullptr) {
          ++stats->fires[op.op];
        }
        out = global_translate(out, op.value("stddev"), rng);
      }
    } else if (op.op == "global_flip") {
      if (rng.bernoulli(op.value("probability"))) {
        any_fired = true;
        if (stats != nullptr) {
          ++stats->fires[op.op];
        }
        out = global_flip(out);
      }
    } else {
      throw std::invalid_argument("apply_pipeline: unknown op '" + op.op + "'");
    }
  }
  if (!any_fired) {
    return out;  // nothing ran; the frame is returned bit-identical
  }
  bool any_ray = false;
  for (const Point & pt : out.points) {
    any_ray = any_ray || pt.has_ray();
  }
  if (out.rows > 0 && any_ray) {
    RangeViewGeometry geom;
    if (config.geometry) {
      geom = *config.geometry;
      if (geom.rows != out.rows || geom.cols != out.cols) {
        throw std::invalid_argument(
          "apply_pipeline: supplied geometry does not match the frame's range-view grid");
      }
    } else {
      geom = default_geometry(out.rows, out.cols);
    }
    assign_rays(out.points, geom);
    out.points = resolve_occlusion(out.points);
  }
  return out;
}

}  // namespace lidaraug

#endif  // LIDARAUG__POLICY_HPP_
