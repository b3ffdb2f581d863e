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

#ifndef LIDARAUG__GEOMETRY_HPP_
#define LIDARAUG__GEOMETRY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lidaraug/types.hpp"

namespace lidaraug {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Reduce an angle to (-pi, pi].
inline double wrap_pi(double angle)
{
  double a = std::fmod(angle, kTwoPi);
  if (a <= -kPi) {
    a += kTwoPi;
  } else if (a > kPi) {
    a -= kTwoPi;
  }
  return a;
}

// Spherical ray coordinates of a return: range, inclination (elevation above
// the x-y plane, [-pi/2, pi/2]) and azimuth ((-pi, pi], measured from +x
// toward +y).
struct SphericalCoords
{
  double range = 0.0;
  double inclination = 0.0;
  double azimuth = 0.0;
};

inline SphericalCoords spherical_coords(const Point & pt)
{
  if (!(pt.range > 0.0)) {
    throw std::domain_error(
      "spherical_coords: point has non-positive range, ray direction is undefined");
  }
  const double inclination = std::asin(std::clamp(pt.z / pt.range, -1.0, 1.0));
  double azimuth = std::atan2(pt.y, pt.x);
  if (azimuth <= -kPi) {
    azimuth = kPi;  // atan2 may return -pi; keep azimuth in (-pi, pi]
  }
  return SphericalCoords{pt.range, inclination, azimuth};
}

// Inverse of spherical_coords. The given range becomes the point's
// authoritative range verbatim; Cartesian coordinates are derived from it.
inline Point point_from_spherical(
  double range, double inclination, double azimuth, double intensity = 0.0,
  double elongation = 0.0, std::int32_t ray_row = kNoRay, std::int32_t ray_col = kNoRay)
{
  const double cos_incl = std::cos(inclination);
  Point pt;
  pt.x = range * cos_incl * std::cos(azimuth);
  pt.y = range * cos_incl * std::sin(azimuth);
  pt.z = range * std::sin(inclination);
  pt.intensity = intensity;
  pt.elongation = elongation;
  pt.ray_row = ray_row;
  pt.ray_col = ray_col;
  pt.range = range;
  return pt;
}

// Whether a point lies inside (or on the surface of) an upright box.
inline bool point_in_box(const Point & pt, const Box3D & box)
{
  const double dx = pt.x - box.cx;
  const double dy = pt.y - box.cy;
  const double dz = pt.z - box.cz;
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  const double local_x = c * dx + s * dy;
  const double local_y = -s * dx + c * dy;
  return std::abs(local_x) <= 0.5 * box.length && std::abs(local_y) <= 0.5 * box.width &&
         std::abs(dz) <= 0.5 * box.height;
}

// Corners of the box footprint in the x-y plane, counterclockwise.
inline std::array<std::array<double, 2>, 4> bev_corners(const Box3D & box)
{
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  std::array<std::array<double, 2>, 4> corners{};
  const std::array<std::array<double, 2>, 4> local = {
    {{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  for (std::size_t i = 0; i < 4; ++i) {
    corners[i][0] = box.cx + c * local[i][0] - s * local[i][1];
    corners[i][1] = box.cy + s * local[i][0] + c * local[i][1];
  }
  return corners;
}

// Whether two box footprints intersect in the x-y plane (boundary contact
// counts as overlap). Separating-axis test over the four edge normals.
inline bool bev_overlap(const Box3D & a, const Box3D & b)
{
  const auto corners_a = bev_corners(a);
  const auto corners_b = bev_corners(b);
  const std::array<std::array<double, 2>, 4> axes = {
    {{std::cos(a.heading), std::sin(a.heading)},
     {-std::sin(a.heading), std::cos(a.heading)},
     {std::cos(b.heading), std::sin(b.heading)},
     {-std::sin(b.heading), std::cos(b.heading)}}};
  for (const auto & axis : axes) {
    double min_a = std::numeric_limits<double>::infinity();
    double max_a = -min_a;
    double min_b = min_a;
    double max_b = -min_a;
    for (std::size_t i = 0; i < 4; ++i) {
      const double pa = axis[0] * corners_a[i][0] + axis[1] * corners_a[i][1];
      const double pb = axis[0] * corners_b[i][0] + axis[1] * corners_b[i][1];
      min_a = std::min(min_a, pa);
      max_a = std::max(max_a, pa);
      min_b = std::min(min_b, pb);
      max_b = std::max(max_b, pb);
    }
    if (max_a < min_b || max_b < min_a) {
      return false;
    }
  }
  return true;
}

}  // namespace lidaraug

#endif  // LIDARAUG__GEOMETRY_HPP_
