/*
 *  Copyright 2026 The sgfnoma Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace sgf {

// Purpose tags for seed derivation. Values are part of the reproducibility
// contract: never renumber, only append.
enum class Stream : std::uint64_t {
  topology = 1,
  fading = 2,
  weight_init = 3,
  exploration = 4,
  replay = 5,
  eval_fading = 6,
  open_loop = 7,
  baseline = 8,
};

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent 64-bit seed from a master seed and a path of
// identifiers (purpose, agent, episode, ...). Each path element is folded
// through splitmix64, so sibling streams never share state.
std::uint64_t derive_seed(std::uint64_t master, Stream purpose,
                          std::initializer_list<std::uint64_t> path = {});

// Deterministic generator used everywhere in the simulator.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard library distributions are *not* portable, so every
// variate is derived here from raw 64-bit words with documented transforms:
//   uniform01      (x >> 11) * 2^-53              in [0, 1)
//   uniform_open0  1 - uniform01()                in (0, 1]
//   exponential    -log(((x >> 11) + 0.5) * 2^-53) unit mean, always > 0
//   index(n)       rejection sampling on 64-bit words, unbiased
//   poisson(l)     Knuth product method, split into chunks of <= 30
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform_open0();
  double exponential();
  std::size_t index(std::size_t n);
  unsigned poisson(double lambda);

  std::string serialize() const;
  void deserialize(const std::string& text);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sgf
