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

#ifndef LIDARAUG__RNG_HPP_
#define LIDARAUG__RNG_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace lidaraug {

// 64-bit FNV-1a hash; used to fold string labels into stream keys.
inline std::uint64_t fnv1a64(std::string_view text)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Counter-based splittable random stream.
//
// A stream is a (key, counter) pair. Output i is mix64(key + i * golden), the
// SplitMix64 sequence for that key, so draws are reproducible and independent
// of how many draws any *other* stream has made. derive() builds a child key
// from the parent key, a string label, and an index -- never from the parent's
// counter -- so the derivation tree is fixed by (seed, path) alone and code may
// derive children in any order, at any time, with identical results.
//
// All distributions are implemented here rather than with <random> adaptors:
// std::uniform_real_distribution and friends are not bit-reproducible across
// standard library implementations, and every consumer of this class depends
// on bit-identical replay.
class RngStream
{
public:
  RngStream() = default;

  static RngStream from_seed(std::uint64_t seed)
  {
    return RngStream(mix64(seed + kGolden));
  }

  // Child stream addressed by (label, index) under this stream's key.
  RngStream derive(std::string_view label, std::uint64_t index) const
  {
    std::uint64_t k = mix64(key_ + kGolden * fnv1a64(label));
    k = mix64(k + kGolden * (index + 1));
    return RngStream(k);
  }

  std::uint64_t next_u64()
  {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  // Uniform double in [0, 1), 53-bit resolution.
  double next_double()
  {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi)
  {
    return lo + next_double() * (hi - lo);
  }

  // True with probability p (p <= 0 never, p >= 1 always). One draw.
  bool bernoulli(double p)
  {
    return next_double() < p;
  }

  // Standard normal via Box-Muller; consumes exactly two draws.
  double normal()
  {
    return normal_pair().first;
  }

  double normal(double mean, double stddev)
  {
    return mean + stddev * normal();
  }

  // Two independent standard normals from one Box-Muller transform.
  std::pair<double, double> normal_pair()
  {
    const double u1 = 1.0 - next_double();  // (0, 1], keeps the log finite
    const double u2 = next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  // Uniform integer in [0, n), bias-free via rejection.
  std::uint64_t next_below(std::uint64_t n)
  {
    if (n == 0) {
      throw std::invalid_argument("RngStream::next_below: n must be positive");
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  friend bool operator==(const RngStream &, const RngStream &) = default;

private:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  // SplitMix64 finalizer.
  static std::uint64_t mix64(std::uint64_t z)
  {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// k distinct indices drawn uniformly from {0, ..., n-1} by partial
// Fisher-Yates; order of the result is the draw order.
inline std::vector<std::size_t> sample_indices(RngStream & rng, std::size_t n, std::size_t k)
{
  if (k > n) {
    throw std::invalid_argument("sample_indices: k exceeds n");
  }
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) {
    pool[i] = i;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace lidaraug

#endif  // LIDARAUG__RNG_HPP_
