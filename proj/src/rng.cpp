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

#include "sgfnoma/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sgf {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, Stream purpose,
                          std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 1));
  return h;
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open0() { return 1.0 - uniform01(); }

double Rng::exponential() {
  // Midpoint of a 2^-53 grid cell, so the quantile is strictly inside (0, 1)
  // and the draw is finite and > 0.
  const double u = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  return -std::log(u);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

unsigned Rng::poisson(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("Rng::poisson: lambda must be finite and >= 0");
  unsigned total = 0;
  while (lambda > 0.0) {
    const double chunk = lambda > 30.0 ? 30.0 : lambda;
    lambda -= chunk;
    const double floor_value = std::exp(-chunk);
    double product = uniform01();
    while (product > floor_value) {
      ++total;
      product *= uniform01();
    }
  }
  return total;
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::deserialize(const std::string& text) {
  std::istringstream is(text);
  is >> engine_;
  if (!is) throw std::runtime_error("Rng: malformed generator state");
}

}  // namespace sgf
