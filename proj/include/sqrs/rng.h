// Copyright 2026 The SQRS Authors
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

#ifndef SQRS_RNG_H
#define SQRS_RNG_H

#include <cstdint>
#include <initializer_list>

namespace sqrs {

/// SplitMix64 generator.
///
/// Used instead of the <random> distributions because those are
/// implementation-defined; every draw here is bit-identical on every
/// platform. Substreams are keyed by a tuple of integers (seed, stream,
/// index, ...) so that each protocol round owns an independent generator and
/// can be simulated in any order.
class Rng {
   public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : state_(seed) {
    }

    /// A generator whose stream is a hash of the given keys.
    static Rng substream(std::initializer_list<std::uint64_t> keys);

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        return mix(z);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// 1 with probability p.
    bool bernoulli(double p) {
        return uniform() < p;
    }

    /// Sum of n Bernoulli(p) draws.
    std::uint64_t binomial(std::uint64_t n, double p);

    static constexpr result_type min() {
        return 0;
    }
    static constexpr result_type max() {
        return ~result_type{0};
    }
    result_type operator()() {
        return next_u64();
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

   private:
    std::uint64_t state_;
};

}  // namespace sqrs

#endif
