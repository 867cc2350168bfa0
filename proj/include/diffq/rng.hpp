// Copyright 2026 The diffq Authors. All Rights Reserved.
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
// =============================================================================

#ifndef DIFFQ_RNG_HPP
#define DIFFQ_RNG_HPP

#include <cstdint>
#include <limits>
#include <random>

namespace diffq {

/// Independent random streams are addressed by (seed, run, iteration, agent,
/// purpose). Two streams with the same address produce the same sequence no
/// matter which thread creates them or in which order.
enum class StreamPurpose : std::uint64_t {
  gradient = 1,
  quantizer = 2,
  topology = 3,
  signal = 4,
  variance = 5,
  test = 6,
};

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t word) noexcept {
  return mix64(key ^ mix64(word + kGolden));
}

}  // namespace detail

/// Counter-based generator: the i-th output is a bijective hash of key + i.
/// Satisfies UniformRandomBitGenerator, so the standard distributions apply.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

  static CounterStream at(std::uint64_t seed, std::uint64_t run, std::uint64_t iteration,
                          std::uint64_t agent, StreamPurpose purpose) noexcept {
    std::uint64_t key = detail::mix64(seed);
    key = detail::combine(key, static_cast<std::uint64_t>(purpose));
    key = detail::combine(key, run);
    key = detail::combine(key, iteration);
    key = detail::combine(key, agent);
    return CounterStream(key);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(*this); }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace diffq

#endif  // DIFFQ_RNG_HPP
