// Copyright 2026 The dysoncirc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dysoncirc/rng.hpp"

#include <cmath>
#include <numbers>

namespace dysoncirc {

namespace {
constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t &hi,
                    std::uint32_t &lo) {
  std::uint64_t p = std::uint64_t(a) * std::uint64_t(b);
  hi = std::uint32_t(p >> 32);
  lo = std::uint32_t(p);
}

// 53 random bits mapped into (0, 1)
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  std::uint64_t bits = (std::uint64_t(hi) << 21) ^ (std::uint64_t(lo) >> 11);
  return (double(bits & ((std::uint64_t(1) << 53) - 1)) + 0.5) * 0x1.0p-53;
}
}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::array<std::uint32_t, 4> CounterRng::block(std::uint32_t sample,
                                               std::uint64_t index) const {
  return philox4x32({std::uint32_t(index), std::uint32_t(index >> 32), sample,
                     stream_},
                    {std::uint32_t(seed_), std::uint32_t(seed_ >> 32)});
}

std::array<double, 2> CounterRng::uniform2(std::uint32_t sample,
                                           std::uint64_t index) const {
  auto b = block(sample, index);
  return {to_open_unit(b[0], b[1]), to_open_unit(b[2], b[3])};
}

std::array<double, 2> CounterRng::normal2(std::uint32_t sample,
                                          std::uint64_t index) const {
  auto u = uniform2(sample, index);
  double r = std::sqrt(-2.0 * std::log(u[0]));
  double phi = 2.0 * std::numbers::pi * u[1];
  return {r * std::cos(phi), r * std::sin(phi)};
}

std::complex<double> CounterRng::complex_normal(std::uint32_t sample,
                                                std::uint64_t index) const {
  auto g = normal2(sample, index);
  return {g[0] * M_SQRT1_2, g[1] * M_SQRT1_2};
}

}  // namespace dysoncirc
