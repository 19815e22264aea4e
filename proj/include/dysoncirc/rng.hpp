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

#ifndef DYSONCIRC_RNG_HPP
#define DYSONCIRC_RNG_HPP

#include <array>
#include <complex>
#include <cstdint>

namespace dysoncirc {

// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// Stateless generator. Every draw is addressed by (stream, sample, index):
// the 64-bit seed is the Philox key, the counter words are
// (index lo, index hi, sample, stream). One block yields two uniforms or one
// complex Gaussian, so draws never depend on evaluation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint32_t stream = 0)
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint32_t stream() const { return stream_; }
  CounterRng substream(std::uint32_t stream) const {
    return CounterRng(seed_, stream);
  }

  std::array<std::uint32_t, 4> block(std::uint32_t sample,
                                     std::uint64_t index) const;
  // two independent uniforms in the open interval (0, 1)
  std::array<double, 2> uniform2(std::uint32_t sample,
                                 std::uint64_t index) const;
  double uniform(std::uint32_t sample, std::uint64_t index) const {
    return uniform2(sample, index)[0];
  }
  // two independent standard normals (Box-Muller)
  std::array<double, 2> normal2(std::uint32_t sample,
                                std::uint64_t index) const;
  // complex Gaussian with E|z|^2 = 1
  std::complex<double> complex_normal(std::uint32_t sample,
                                      std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint32_t stream_;
};

}  // namespace dysoncirc

#endif
