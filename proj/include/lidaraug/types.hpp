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

#ifndef LIDARAUG__TYPES_HPP_
#define LIDARAUG__TYPES_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace lidaraug {

// Sentinel for "this point has no range-view ray assigned".
inline constexpr std::int32_t kNoRay = -1;

// Object category. Backed by int32 so unknown dataset-specific ids pass
// through unchanged; the named values are the ones the default policy and the
// synthetic scene generator know about.
enum class ObjectClass : std::int32_t {
  kVehicle = 0,
  kPedestrian = 1,
  kCyclist = 2,
};

inline std::string class_name(ObjectClass cls)
{
  switch (cls) {
    case ObjectClass::kVehicle:
      return "vehicle";
    case ObjectClass::kPedestrian:
      return "pedestrian";
    case ObjectClass::kCyclist:
      return "cyclist";
    default:
      return "class" + std::to_string(static_cast<std::int32_t>(cls));
  }
}

// One lidar return.
//
// (x, y, z) are sensor-frame Cartesian coordinates; intensity and elongation
// are calibrated to [0, 1]. (ray_row, ray_col) tie the return to its
// range-view cell and are either both set or both kNoRay. They identify the
// sensor ray that produced the return, so geometric transforms carry them
// through unchanged; only newly introduced points lack them.
//
// `range` is the authoritative ray length. It is maintained by every
// transform rather than recomputed from (x, y, z), because the range-view
// round trip must preserve cell ranges bit for bit and sqrt(x^2+y^2+z^2)
// does not reproduce the stored value exactly after a spherical round trip.
// It is derived data, so file formats omit it and reading restores it.
struct Point
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;
  double elongation = 0.0;
  std::int32_t ray_row = kNoRay;
  std::int32_t ray_col = kNoRay;
  double range = 0.0;

  bool has_ray() const { return ray_row != kNoRay && ray_col != kNoRay; }

  friend bool operator==(const Point &, const Point &) = default;
};

inline Point make_point(
  double x, double y, double z, double intensity = 0.0, double elongation = 0.0)
{
  Point pt;
  pt.x = x;
  pt.y = y;
  pt.z = z;
  pt.intensity = intensity;
  pt.elongation = elongation;
  pt.range = std::sqrt(x * x + y * y + z * z);
  return pt;
}

// Upright 3D bounding box: center, full extents along the local axes, and
// heading = yaw about +z in (-pi, pi]. box_uid is unique within a frame.
struct Box3D
{
  double cx = 0.0;
  double cy = 0.0;
  double cz = 0.0;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  double heading = 0.0;
  ObjectClass class_id = ObjectClass::kVehicle;
  std::int64_t box_uid = 0;

  friend bool operator==(const Box3D &, const Box3D &) = default;
};

// One annotated lidar frame. rows/cols declare the range-view grid the
// frame's ray indices refer to; 0 x 0 means the frame carries no range view
// and every point must have ray_row == ray_col == kNoRay.
struct Frame
{
  std::string frame_id;
  std::vector<Point> points;
  std::vector<Box3D> boxes;
  std::int32_t rows = 0;
  std::int32_t cols = 0;

  friend bool operator==(const Frame &, const Frame &) = default;
};

}  // namespace lidaraug

#endif  // LIDARAUG__TYPES_HPP_
