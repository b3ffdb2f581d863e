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

#ifndef LIDARAUG__AUGMENT_HPP_
#define LIDARAUG__AUGMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lidaraug/geometry.hpp"
#include "lidaraug/rng.hpp"
#include "lidaraug/types.hpp"

namespace lidaraug {

// Scene-level augmentation primitives. Conventions shared by all ops:
//  - the input frame is untouched; the augmented frame is returned;
//  - every random draw comes from the caller's stream in a fixed documented
//    order, so a given (frame, parameters, stream) triple replays exactly;
//  - parameters are validated against their documented domain and violations
//    throw std::invalid_argument;
//  - ray indices name the sensor ray of a return and travel with it through
//    geometric transforms; ops never reassign or drop them.

namespace detail {

inline bool in_any_box(const Point & pt, const std::vector<const Box3D *> & boxes)
{
  for (const Box3D * box : boxes) {
    if (point_in_box(pt, *box)) {
      return true;
    }
  }
  return false;
}

inline void require_in_range(
  const char * op, const char * name, double value, double lo, double hi)
{
  if (!(value >= lo && value <= hi)) {
    throw std::invalid_argument(
      std::string(op) + ": " + name + " = " + std::to_string(value) + " outside [" +
      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

}  // namespace detail

// Rotate the whole scene about +z by an angle drawn uniformly from
// [-max_angle, max_angle]; max_angle in [0, pi]. One draw.
inline Frame global_rotate(const Frame & frame, double max_angle, RngStream & rng)
{
  detail::require_in_range("global_rotate", "max_angle", max_angle, 0.0, kPi);
  const double angle = rng.uniform(-max_angle, max_angle);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Frame out = frame;
  for (Point & pt : out.points) {
    const double x = pt.x;
    const double y = pt.y;
    pt.x = c * x - s * y;
    pt.y = s * x + c * y;
    // rotation about the sensor keeps the ray length
  }
  for (Box3D & box : out.boxes) {
    const double x = box.cx;
    const double y = box.cy;
    box.cx = c * x - s * y;
    box.cy = s * x + c * y;
    box.heading = wrap_pi(box.heading + angle);
  }
  return out;
}

// Scale the whole scene by a factor drawn uniformly from
// [1 - half_width, 1 + half_width]; half_width in [0, 1). One draw.
inline Frame global_scale(const Frame & frame, double half_width, RngStream & rng)
{
  if (!(half_width >= 0.0 && half_width < 1.0)) {
    throw std::invalid_argument(
      "global_scale: half_width = " + std::to_string(half_width) +
      " outside [0, 1); scale factors must stay positive");
  }
  const double factor = rng.uniform(1.0 - half_width, 1.0 + half_width);
  Frame out = frame;
  for (Point & pt : out.points) {
    pt.x *= factor;
    pt.y *= factor;
    pt.z *= factor;
    pt.range *= factor;
  }
  for (Box3D & box : out.boxes) {
    box.cx *= factor;
    box.cy *= factor;
    box.cz *= factor;
    box.length *= factor;
    box.width *= factor;
    box.height *= factor;
  }
  return out;
}

// Translate the whole scene in the ground plane by (dx, dy) drawn from
// N(0, stddev^2), independently per axis; stddev >= 0. Two draws (one
// Box-Muller pair).
inline Frame global_translate(const Frame & frame, double stddev, RngStream & rng)
{
  if (!(stddev >= 0.0)) {
    throw std::invalid_argument("global_translate: stddev must be non-negative");
  }
  const auto [nx, ny] = rng.normal_pair();
  const double dx = stddev * nx;
  const double dy = stddev * ny;
  Frame out = frame;
  for (Point & pt : out.points) {
    pt.x += dx;
    pt.y += dy;
    pt.range = std::sqrt(pt.x * pt.x + pt.y * pt.y + pt.z * pt.z);
  }
  for (Box3D & box : out.boxes) {
    box.cx += dx;
    box.cy += dy;
  }
  return out;
}

// Mirror the scene across the x-z plane (y -> -y). Deterministic, no draws.
inline Frame global_flip(const Frame & frame)
{
  Frame out = frame;
  for (Point & pt : out.points) {
    pt.y = -pt.y;
  }
  for (Box3D & box : out.boxes) {
    box.cy = -box.cy;
    box.heading = wrap_pi(-box.heading);
  }
  return out;
}

// Drop each point independently with probability drop_ratio in [0, 0.8].
// Survivors are bit-identical and keep their order. One draw per point.
inline Frame global_drop(const Frame & frame, double drop_ratio, RngStream & rng)
{
  detail::require_in_range("global_drop", "drop_ratio", drop_ratio, 0.0, 0.8);
  Frame out = frame;
  out.points.clear();
  out.points.reserve(frame.points.size());
  for (const Point & pt : frame.points) {
    if (!rng.bernoulli(drop_ratio)) {
      out.points.push_back(pt);
    }
  }
  return out;
}

// Angular wedge with a range gate: a point is inside when its inclination and
// (circular) azimuth distances from the center stay within half the widths
// and its range is at least min_range. Points with zero range have no ray
// direction and are never inside.
struct FrustumSpec
{
  double center_inclination = 0.0;
  double center_azimuth = 0.0;
  double width_inclination = 0.0;
  double width_azimuth = 0.0;
  double min_range = 0.0;

  bool contains(const SphericalCoords & sph) const
  {
    return std::abs(sph.inclination - center_inclination) <= 0.5 * width_inclination &&
           std::abs(wrap_pi(sph.azimuth - center_azimuth)) <= 0.5 * width_azimuth &&
           sph.range >= min_range;
  }

  bool contains(const Point & pt) const
  {
    if (!(pt.range > 0.0)) {
      return false;
    }
    return contains(spherical_coords(pt));
  }
};

// Place a frustum at a random direction: the center inclination is uniform
// over the frame's occupied inclination span, the center azimuth uniform over
// the full circle. Two draws, inclination first.
inline FrustumSpec sample_frustum(
  const Frame & frame, double width_inclination, double width_azimuth, double min_range,
  RngStream & rng)
{
  detail::require_in_range("sample_frustum", "width_inclination", width_inclination, 0.0, kPi);
  detail::require_in_range("sample_frustum", "width_azimuth", width_azimuth, 0.0, kTwoPi);
  if (!(min_range >= 0.0)) {
    throw std::invalid_argument("sample_frustum: min_range must be non-negative");
  }
  double incl_lo = 0.0;
  double incl_hi = 0.0;
  bool seen = false;
  for (const Point & pt : frame.points) {
    if (!(pt.range > 0.0)) {
      continue;
    }
    const double incl = spherical_coords(pt).inclination;
    if (!seen) {
      incl_lo = incl_hi = incl;
      seen = true;
    } else {
      incl_lo = std::min(incl_lo, incl);
      incl_hi = std::max(incl_hi, incl);
    }
  }
  FrustumSpec spec;
  spec.width_inclination = width_inclination;
  spec.width_azimuth = width_azimuth;
  spec.min_range = min_range;
  spec.center_inclination = rng.uniform(incl_lo, incl_hi);
  spec.center_azimuth = kPi - rng.next_double() * kTwoPi;  // uniform over (-pi, pi]
  return spec;
}

// Drop points inside a randomly placed frustum, each with probability
// drop_ratio in [0, 0.8]; points outside are untouched bit for bit. Draws:
// two for the frustum, then one per point inside it.
inline Frame frustum_drop(
  const Frame & frame, double width_inclination, double width_azimuth, double min_range,
  double drop_ratio, RngStream & rng)
{
  detail::require_in_range("frustum_drop", "drop_ratio", drop_ratio, 0.0, 0.8);
  const FrustumSpec spec =
    sample_frustum(frame, width_inclination, width_azimuth, min_range, rng);
  Frame out = frame;
  out.points.clear();
  out.points.reserve(frame.points.size());
  for (const Point & pt : frame.points) {
    if (spec.contains(pt) && rng.bernoulli(drop_ratio)) {
      continue;
    }
    out.points.push_back(pt);
  }
  return out;
}

// Perturb the non-geometric features (intensity, elongation) of points inside
// a randomly placed frustum: each feature is scaled by (1 + u) with u uniform
// in [-noise_level, noise_level], then clamped back to [0, 1]. Coordinates,
// ranges and rays are untouched bit for bit. noise_level in [0, 1]. Draws:
// two for the frustum, then two per point inside it (intensity first).
inline Frame frustum_noise(
  const Frame & frame, double width_inclination, double width_azimuth, double min_range,
  double noise_level, RngStream & rng)
{
  detail::require_in_range("frustum_noise", "noise_level", noise_level, 0.0, 1.0);
  const FrustumSpec spec =
    sample_frustum(frame, width_inclination, width_azimuth, min_range, rng);
  Frame out = frame;
  for (Point & pt : out.points) {
    if (!spec.contains(pt)) {
      continue;
    }
    const double u_int = rng.uniform(-noise_level, noise_level);
    const double u_elo = rng.uniform(-noise_level, noise_level);
    pt.intensity = std::clamp(pt.intensity * (1.0 + u_int), 0.0, 1.0);
    pt.elongation = std::clamp(pt.elongation * (1.0 + u_elo), 0.0, 1.0);
  }
  return out;
}

// Remove up to counts[cls] randomly chosen boxes of each class, together with
// every point inside any removed box. Classes are processed in ascending id
// order; a class with fewer boxes than requested loses all of them. Draws:
// min(count, available) selection draws per class.
inline Frame drop_box(
  const Frame & frame, const std::map<ObjectClass, int> & counts, RngStream & rng)
{
  std::unordered_set<std::int64_t> removed_uids;
  std::vector<const Box3D *> removed_boxes;
  for (const auto & [cls, count] : counts) {
    if (count < 0) {
      throw std::invalid_argument("drop_box: negative count for class " + class_name(cls));
    }
    if (count == 0) {
      continue;
    }
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < frame.boxes.size(); ++i) {
      if (frame.boxes[i].class_id == cls) {
        candidates.push_back(i);
      }
    }
    const std::size_t k = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(count));
    for (std::size_t pick : sample_indices(rng, candidates.size(), k)) {
      const Box3D & box = frame.boxes[candidates[pick]];
      removed_uids.insert(box.box_uid);
      removed_boxes.push_back(&box);
    }
  }
  Frame out = frame;
  out.boxes.clear();
  for (const Box3D & box : frame.boxes) {
    if (!removed_uids.count(box.box_uid)) {
      out.boxes.push_back(box);
    }
  }
  out.points.clear();
  out.points.reserve(frame.points.size());
  for (const Point & pt : frame.points) {
    if (!detail::in_any_box(pt, removed_boxes)) {
      out.points.push_back(pt);
    }
  }
  return out;
}

// One stored object: its box at the recorded world pose and its points in
// box-local coordinates (so they follow the box wherever it is placed).
struct ObjectExemplar
{
  std::string source_frame_id;
  Box3D box;
  std::vector<Point> points;

  friend bool operator==(const ObjectExemplar &, const ObjectExemplar &) = default;
};

struct ObjectBank
{
  std::vector<ObjectExemplar> exemplars;

  std::vector<std::size_t> indices_of(ObjectClass cls) const
  {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
      if (exemplars[i].box.class_id == cls) {
        out.push_back(i);
      }
    }
    return out;
  }

  friend bool operator==(const ObjectBank &, const ObjectBank &) = default;
};

// Extract an exemplar per annotated box of the requested classes. Boxes with
// no interior points are skipped; exemplar points are stored box-local with
// ray indices cleared (they are reassigned wherever the object lands).
inline ObjectBank build_object_bank(
  const std::vector<Frame> & frames, const std::set<ObjectClass> & classes)
{
  ObjectBank bank;
  for (const Frame & frame : frames) {
    for (const Box3D & box : frame.boxes) {
      if (!classes.count(box.class_id)) {
        continue;
      }
      ObjectExemplar exemplar;
      exemplar.source_frame_id = frame.frame_id;
      exemplar.box = box;
      const double c = std::cos(box.heading);
      const double s = std::sin(box.heading);
      for (const Point & pt : frame.points) {
        if (!point_in_box(pt, box)) {
          continue;
        }
        const double dx = pt.x - box.cx;
        const double dy = pt.y - box.cy;
        Point local;
        local.x = c * dx + s * dy;
        local.y = -s * dx + c * dy;
        local.z = pt.z - box.cz;
        local.intensity = pt.intensity;
        local.elongation = pt.elongation;
        local.range = std::sqrt(local.x * local.x + local.y * local.y + local.z * local.z);
        exemplar.points.push_back(local);
      }
      if (!exemplar.points.empty()) {
        bank.exemplars.push_back(std::move(exemplar));
      }
    }
  }
  return bank;
}

// Paste up to counts[cls] bank objects of each class into the frame, at their
// recorded poses. A candidate whose footprint overlaps any current box (given
// or already pasted) is rejected; up to 20 attempts are made per requested
// paste, drawing a fresh exemplar each attempt, and an unplaced paste is
// skipped. Pasted boxes get fresh uids above the frame's maximum; pasted
// points carry no ray indices. Classes are processed in ascending id order.
// Throws when a class with a positive count has no exemplars in the bank.
inline Frame paste_box(
  const Frame & frame, const ObjectBank & bank, const std::map<ObjectClass, int> & counts,
  RngStream & rng)
{
  Frame out = frame;
  std::int64_t next_uid = 0;
  for (const Box3D & box : frame.boxes) {
    next_uid = std::max(next_uid, box.box_uid);
  }
  ++next_uid;
  for (const auto & [cls, count] : counts) {
    if (count < 0) {
      throw std::invalid_argument("paste_box: negative count for class " + class_name(cls));
    }
    if (count == 0) {
      continue;
    }
    const std::vector<std::size_t> pool = bank.indices_of(cls);
    if (pool.empty()) {
      throw std::invalid_argument(
        "paste_box: object bank has no exemplars of class " + class_name(cls));
    }
    for (int i = 0; i < count; ++i) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        const ObjectExemplar & exemplar =
          bank.exemplars[pool[static_cast<std::size_t>(rng.next_below(pool.size()))]];
        Box3D candidate = exemplar.box;
        candidate.box_uid = next_uid;
        bool collides = false;
        for (const Box3D & existing : out.boxes) {
          if (bev_overlap(candidate, existing)) {
            collides = true;
            break;
          }
        }
        if (collides) {
          continue;
        }
        const double c = std::cos(candidate.heading);
        const double s = std::sin(candidate.heading);
        for (const Point & local : exemplar.points) {
          Point pt;
          pt.x = candidate.cx + c * local.x - s * local.y;
          pt.y = candidate.cy + s * local.x + c * local.y;
          pt.z = candidate.cz + local.z;
          pt.intensity = local.intensity;
          pt.elongation = local.elongation;
          pt.range = std::sqrt(pt.x * pt.x + pt.y * pt.y + pt.z * pt.z);
          out.points.push_back(pt);
        }
        out.boxes.push_back(candidate);
        ++next_uid;
        break;
      }
    }
  }
  return out;
}

// Keep the first frame's annotated objects (boxes plus the points inside any
// of them) and replace everything else with the donor frame's background (its
// points outside all of its boxes). Point order: foreground block first, then
// donor background, each in source order. The frames must declare the same
// range-view grid. Deterministic, no draws.
inline Frame swap_background(const Frame & keep_objects, const Frame & donor_background)
{
  if (keep_objects.rows != donor_background.rows || keep_objects.cols != donor_background.cols) {
    throw std::invalid_argument(
      "swap_background: frames declare different range-view grids (" +
      std::to_string(keep_objects.rows) + " x " + std::to_string(keep_objects.cols) + " vs " +
      std::to_string(donor_background.rows) + " x " + std::to_string(donor_background.cols) + ")");
  }
  std::vector<const Box3D *> fg_boxes;
  for (const Box3D & box : keep_objects.boxes) {
    fg_boxes.push_back(&box);
  }
  std::vector<const Box3D *> donor_boxes;
  for (const Box3D & box : donor_background.boxes) {
    donor_boxes.push_back(&box);
  }
  Frame out;
  out.frame_id = keep_objects.frame_id;
  out.boxes = keep_objects.boxes;
  out.rows = keep_objects.rows;
  out.cols = keep_objects.cols;
  for (const Point & pt : keep_objects.points) {
    if (detail::in_any_box(pt, fg_boxes)) {
      out.points.push_back(pt);
    }
  }
  for (const Point & pt : donor_background.points) {
    if (!detail::in_any_box(pt, donor_boxes)) {
      out.points.push_back(pt);
    }
  }
  return out;
}

}  // namespace lidaraug

#endif  // LIDARAUG__AUGMENT_HPP_
