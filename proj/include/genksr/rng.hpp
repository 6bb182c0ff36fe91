// Copyright 2026 The genksr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace genksr {

/// Purpose tags for deriving independent streams from one master seed.
enum class StreamPurpose : std::uint64_t {
  kInstances = 1,
  kComputationalShots = 2,
  kPauliShots = 3,
  kModelInit = 4,
  kShuffle = 5,
  kGenerate = 6,
  kSplit = 7,
  kLanczosStart = 8,
  kTest = 99,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Philox4x32-10 counter-based generator.
///
/// A stream is fully described by its 64-bit key and 128-bit counter, so any
/// task's draws are reproducible from (master seed, task key) alone and
/// streams with different keys are statistically independent.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  explicit Philox4x32(std::uint64_t key = 0) : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  std::uint64_t key() const { return static_cast<std::uint64_t>(key_[1]) << 32 | key_[0]; }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> buffer_{};
  int position_ = 4;
};

/// Splittable random stream on top of Philox.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key = 0) : engine_(key) {}

  /// Stream for a task identified by a key path under a master seed.
  static RngStream keyed(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path);

  /// Child stream; does not advance this stream.
  RngStream split(std::uint64_t tag) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  std::uint64_t key() const { return engine_.key(); }

 private:
  Philox4x32 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace genksr
