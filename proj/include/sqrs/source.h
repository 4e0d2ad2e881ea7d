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

#ifndef SQRS_SOURCE_H
#define SQRS_SOURCE_H

#include <cstdint>

#include "sqrs/qcore.h"

namespace sqrs {

/// Outcome-dependent efficiencies of Bob's two analyzer detectors.
struct DetectorEfficiency {
    double eta0 = 1.0;  // detector for s_B = 0 (|R>)
    double eta1 = 1.0;  // detector for s_B = 1 (|L>)

    void validate() const;
    bool operator==(const DetectorEfficiency &) const = default;
};

/// Imperfections of the shared pair and of Bob's readout.
///
/// The default value is the ideal protocol: pure singlet, no dephasing and
/// unit detection efficiency.
struct NoiseModel {
    double werner_p = 1.0;         // singlet weight, [0, 1]
    double dephasing_gamma = 0.0;  // phase damping on Bob's qubit, [0, 1]
    DetectorEfficiency detector;   // each in (0, 1]

    /// Throws ConfigError on any out-of-range field.
    void validate() const;
    bool is_ideal() const;
    bool operator==(const NoiseModel &) const = default;
};

struct SourceConfig {
    NoiseModel noise;
    std::uint64_t seed = 0;

    bool operator==(const SourceConfig &) const = default;
};

/// |psi-><psi-| with |psi-> = (|HV> - |VH>)/sqrt(2).
DensityMatrix ideal_singlet();

/// p |psi-><psi-| + (1 - p) I/4.
DensityMatrix werner(double p);

/// Werner mixing with weight m.werner_p, then phase damping with parameter
/// m.dephasing_gamma on Bob's qubit (Kraus operators diag(1, sqrt(1-g)) and
/// diag(0, sqrt(g))). Detector efficiency is a readout effect and is not
/// applied here.
DensityMatrix apply_noise(const DensityMatrix &rho, const NoiseModel &m);

/// apply_noise(ideal_singlet(), m).
DensityMatrix shared_state(const NoiseModel &m);

}  // namespace sqrs

#endif
