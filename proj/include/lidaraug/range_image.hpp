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

#ifndef LIDARAUG__RANGE_IMAGE_HPP_
#define LIDARAUG__RANGE_IMAGE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lidaraug/geometry.hpp"
#include "lidaraug/types.hpp"

namespace lidaraug {

// Default range-view grid: 64 beams covering [-17.6 deg, +2.4 deg], 2650
// azimuth columns over the full circle.
inline constexpr std::int32_t kDefaultRows = 64;
inline constexpr std::int32_t kDefaultCols = 2650;
inline constexpr double kDefaultInclinationMin = -17.6 * kPi / 180.0;
inline constexpr double kDefaultInclinationMax = 2.4 * kPi / 180.0;

// Range of a cell holding no return.
inline constexpr double kEmptyCellRange = -1.0;

// Beam/column layout of a range view. Rows are beams with fixed inclinations
// (strictly monotonic, increasing or decreasing); columns are uniform azimuth
// bins, column c centered at azimuth_origin + c * (2*pi / cols).
struct RangeViewGeometry
{
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::vector<double> inclinations;
  double azimuth_origin = -kPi;

  // Uniformly spaced beams from inclination_min (row 0) to inclination_max
  // (last row).
  static RangeViewGeometry uniform(
    std::int32_t rows, std::int32_t cols, double inclination_min, double inclination_max,
    double azimuth_origin = -kPi)
  {
    RangeViewGeometry geom;
    geom.rows = rows;
    geom.cols = cols;
    geom.azimuth_origin = azimuth_origin;
    geom.inclinations.resize(static_cast<std::size_t>(std::max<std::int32_t>(rows, 0)));
    if (rows == 1) {
      geom.inclinations[0] = 0.5 * (inclination_min + inclination_max);
    } else {
      for (std::int32_t r = 0; r < rows; ++r) {
        geom.inclinations[static_cast<std::size_t>(r)] =
          inclination_min + (inclination_max - inclination_min) * r / (rows - 1);
      }
    }
    geom.validate();
    return geom;
  }

  void validate() const
  {
    if (rows < 1 || cols < 1) {
      throw std::invalid_argument("RangeViewGeometry: rows and cols must be positive");
    }
    if (inclinations.size() != static_cast<std::size_t>(rows)) {
      throw std::invalid_argument("RangeViewGeometry: one inclination per row required");
    }
    for (std::size_t r = 1; r < inclinations.size(); ++r) {
      const bool increasing = inclinations[1] > inclinations[0];
      const bool step_ok =
        increasing ? inclinations[r] > inclinations[r - 1] : inclinations[r] < inclinations[r - 1];
      if (!step_ok) {
        throw std::invalid_argument("RangeViewGeometry: inclinations must be strictly monotonic");
      }
    }
    if (!(azimuth_origin > -kTwoPi && azimuth_origin < kTwoPi)) {
      throw std::invalid_argument("RangeViewGeometry: azimuth_origin out of range");
    }
  }

  double azimuth_step() const { return kTwoPi / cols; }

  double azimuth_of_col(std::int32_t col) const
  {
    return wrap_pi(azimuth_origin + col * azimuth_step());
  }

  // Row whose beam inclination is closest to the query; an exact half-way tie
  // picks the smaller row index.
  std::int32_t nearest_row(double inclination) const
  {
    if (rows == 1) {
      return 0;
    }
    const bool increasing = inclinations[1] > inclinations[0];
    std::size_t lo = 0;
    std::size_t hi = inclinations.size();
    // First row at-or-past the query in scan order.
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      const bool before =
        increasing ? inclinations[mid] < inclination : inclinations[mid] > inclination;
      if (before) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    if (lo == 0) {
      return 0;
    }
    if (lo == inclinations.size()) {
      return rows - 1;
    }
    const double d_prev = std::abs(inclination - inclinations[lo - 1]);
    const double d_next = std::abs(inclinations[lo] - inclination);
    return static_cast<std::int32_t>(d_prev <= d_next ? lo - 1 : lo);
  }

  // Column whose bin center is closest to the query azimuth (circularly); an
  // exact half-way tie picks the lower column index.
  std::int32_t nearest_col(double azimuth) const
  {
    double offset = std::fmod(azimuth - azimuth_origin, kTwoPi);
    if (offset < 0.0) {
      offset += kTwoPi;
    }
    std::int32_t col = static_cast<std::int32_t>(std::ceil(offset / azimuth_step() - 0.5));
    if (col >= cols) {
      col -= cols;  // wrapped past the seam; nearest center is column 0
    }
    if (col < 0) {
      col = 0;
    }
    return col;
  }

  friend bool operator==(const RangeViewGeometry &, const RangeViewGeometry &) = default;
};

inline RangeViewGeometry default_geometry(
  std::int32_t rows = kDefaultRows, std::int32_t cols = kDefaultCols)
{
  return RangeViewGeometry::uniform(rows, cols, kDefaultInclinationMin, kDefaultInclinationMax);
}

// One range-view cell. Empty cells are canonical: range == kEmptyCellRange
// and zero intensity/elongation, so images compare bit for bit.
struct RangeCell
{
  double range = kEmptyCellRange;
  double intensity = 0.0;
  double elongation = 0.0;

  bool empty() const { return range < 0.0; }

  friend bool operator==(const RangeCell &, const RangeCell &) = default;
};

struct RangeImage
{
  RangeViewGeometry geometry;
  std::vector<RangeCell> cells;  // row-major, rows * cols

  RangeImage() = default;

  explicit RangeImage(RangeViewGeometry geom) : geometry(std::move(geom))
  {
    geometry.validate();
    cells.resize(
      static_cast<std::size_t>(geometry.rows) * static_cast<std::size_t>(geometry.cols));
  }

  RangeCell & at(std::int32_t row, std::int32_t col)
  {
    return cells[static_cast<std::size_t>(row) * geometry.cols + col];
  }

  const RangeCell & at(std::int32_t row, std::int32_t col) const
  {
    return cells[static_cast<std::size_t>(row) * geometry.cols + col];
  }

  friend bool operator==(const RangeImage &, const RangeImage &) = default;
};

namespace detail {

inline std::uint64_t ray_key(std::int32_t row, std::int32_t col)
{
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)) << 32) |
         static_cast<std::uint32_t>(col);
}

inline void require_ray_in_bounds(const Point & pt, std::int32_t rows, std::int32_t cols)
{
  if (!pt.has_ray()) {
    throw std::invalid_argument(
      "point has no ray indices; run assign_rays before converting to a range image");
  }
  if (pt.ray_row < 0 || pt.ray_row >= rows || pt.ray_col < 0 || pt.ray_col >= cols) {
    throw std::invalid_argument(
      "point ray indices (" + std::to_string(pt.ray_row) + ", " + std::to_string(pt.ray_col) +
      ") outside range-view grid " + std::to_string(rows) + " x " + std::to_string(cols));
  }
}

}  // namespace detail

// One point per non-empty cell, emitted in row-major cell order. The cell
// range becomes the point's authoritative range, so converting the result
// back with from_points reproduces the image bit for bit.
inline std::vector<Point> to_points(const RangeImage & img)
{
  img.geometry.validate();
  std::vector<Point> points;
  for (std::int32_t r = 0; r < img.geometry.rows; ++r) {
    for (std::int32_t c = 0; c < img.geometry.cols; ++c) {
      const RangeCell & cell = img.at(r, c);
      if (cell.empty()) {
        continue;
      }
      points.push_back(point_from_spherical(
        cell.range, img.geometry.inclinations[static_cast<std::size_t>(r)],
        img.geometry.azimuth_of_col(c), cell.intensity, cell.elongation, r, c));
    }
  }
  return points;
}

// Rasterize points into a range image. Every point must carry in-bounds ray
// indices. When several points land in one cell the nearest return wins;
// equal ranges keep the earliest point in input order.
inline RangeImage from_points(const std::vector<Point> & points, const RangeViewGeometry & geom)
{
  geom.validate();
  RangeImage img(geom);
  for (const Point & pt : points) {
    detail::require_ray_in_bounds(pt, geom.rows, geom.cols);
    RangeCell & cell = img.at(pt.ray_row, pt.ray_col);
    if (cell.empty() || pt.range < cell.range) {
      cell.range = pt.range;
      cell.intensity = pt.intensity;
      cell.elongation = pt.elongation;
    }
  }
  return img;
}

// Give ray indices to every point that lacks them, from the point's spherical
// coordinates under the given grid. Points that already have indices are left
// untouched. Throws if an unindexed point sits at the origin (no direction).
inline void assign_rays(std::vector<Point> & points, const RangeViewGeometry & geom)
{
  geom.validate();
  for (Point & pt : points) {
    if (pt.has_ray()) {
      continue;
    }
    const SphericalCoords sph = spherical_coords(pt);
    pt.ray_row = geom.nearest_row(sph.inclination);
    pt.ray_col = geom.nearest_col(sph.azimuth);
  }
}

// Keep, per occupied cell, only the winning return: strictly nearest range,
// ties by earliest input position. Every point must carry ray indices. Output
// preserves input order, so the function is idempotent and order-stable.
inline std::vector<Point> resolve_occlusion(const std::vector<Point> & points)
{
  std::unordered_map<std::uint64_t, std::size_t> winner;
  winner.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point & pt = points[i];
    if (!pt.has_ray()) {
      throw std::invalid_argument(
        "resolve_occlusion: every point needs ray indices; run assign_rays first");
    }
    const std::uint64_t key = detail::ray_key(pt.ray_row, pt.ray_col);
    const auto [it, inserted] = winner.try_emplace(key, i);
    if (!inserted && pt.range < points[it->second].range) {
      it->second = i;
    }
  }
  std::vector<Point> kept;
  kept.reserve(winner.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::uint64_t key = detail::ray_key(points[i].ray_row, points[i].ray_col);
    if (winner.at(key) == i) {
      kept.push_back(points[i]);
    }
  }
  return kept;
}

}  // namespace lidaraug

#endif  // LIDARAUG__RANGE_IMAGE_HPP_
