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

// Umbrella header: deterministic lidar augmentation, the two-driver policy
// space, range-view projection, synthetic scenes, and the tuning machinery.

#ifndef LIDARAUG__LIDARAUG_HPP_
#define LIDARAUG__LIDARAUG_HPP_

#include "lidaraug/augment.hpp"
#include "lidaraug/geometry.hpp"
#include "lidaraug/io.hpp"
#include "lidaraug/policy.hpp"
#include "lidaraug/range_image.hpp"
#include "lidaraug/rng.hpp"
#include "lidaraug/search.hpp"
#include "lidaraug/synth.hpp"
#include "lidaraug/types.hpp"

#endif  // LIDARAUG__LIDARAUG_HPP_
