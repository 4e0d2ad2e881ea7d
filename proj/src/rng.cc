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

#include "sqrs/rng.h"

namespace sqrs {

Rng Rng::substream(std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = 0x5152532D726E6721ULL;
    for (auto k : keys) {
        h = mix(h ^ mix(k + 0x9E3779B97F4A7C15ULL));
    }
    return Rng(h);
}

std::uint64_t Rng::binomial(std::uint64_t n, double p) {
    if (p <= 0.0) {
        return 0;
    }
    if (p >= 1.0) {
        return n;
    }
    std::uint64_t k = 0;
    for (std::uint64_t i = 0; i < n; i++) {
        k += bernoulli(p) ? 1 : 0;
    }
    return k;
}

}  // namespace sqrs
