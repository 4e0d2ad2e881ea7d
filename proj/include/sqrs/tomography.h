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

#ifndef SQRS_TOMOGRAPHY_H
#define SQRS_TOMOGRAPHY_H

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>

#include "sqrs/qcore.h"

namespace sqrs {

/// The six polarization projectors of the tomography grid, in grid order.
enum class Polarization : std::uint8_t { H = 0, V = 1, D = 2, J = 3, R = 4, L = 5 };

constexpr int kNumPolarizations = 6;
constexpr int kNumSettings = kNumPolarizations * kNumPolarizations;

char polarization_name(Polarization p);
Polarization parse_polarization(char c);
PureState polarization_state(Polarization p);

struct TomographySetting {
    Polarization alice;
    Polarization bob;

    /// Row-major position in the 6x6 grid: 6 * alice + bob.
    int index() const {
        return 6 * static_cast<int>(alice) + static_cast<int>(bob);
    }
    static TomographySetting from_index(int index);
};

/// Coincidence counts for every setting of the 6x6 grid.
struct TomographyCounts {
    std::uint32_t shots_per_setting = 0;
    std::array<std::uint32_t, kNumSettings> counts{};

    /// Throws TomographyError when shots is zero or any count exceeds it.
    void validate() const;
    bool operator==(const TomographyCounts &) const = default;
};

struct ReconstructionResult {
    DensityMatrix rho_hat;
    double fidelity_to_singlet;
    /// Linear-inversion estimate before projection. Hermitian with unit trace
    /// but possibly with negative eigenvalues.
    Eigen::Matrix4cd raw_linear_inversion;
};

/// Born probability Tr[rho (P_a (x) P_b)] for one setting.
double setting_probability(const DensityMatrix &rho, TomographySetting s);

/// Draws count ~ Binomial(shots, p_setting) independently for each setting,
/// each from its own substream of `seed`.
TomographyCounts simulate_counts(const DensityMatrix &rho, std::uint32_t shots, std::uint64_t seed);

/// round(shots * p_setting) for every setting; the infinite-statistics limit.
TomographyCounts expected_counts(const DensityMatrix &rho, std::uint32_t shots);

/// Least-squares linear inversion of the per-setting frequencies onto the
/// two-qubit Pauli basis, followed by projection onto the closest (Frobenius
/// norm) positive semidefinite unit-trace matrix.
ReconstructionResult reconstruct(const TomographyCounts &counts);

/// Closest density matrix to a Hermitian unit-trace matrix in Frobenius
/// norm: the eigenvalues are projected onto the probability simplex.
Eigen::Matrix4cd project_to_physical(const Eigen::Matrix4cd &hermitian);

/// <psi-| rho |psi->.
double fidelity_to_singlet(const DensityMatrix &rho);

/// CSV with columns alice_proj,bob_proj,shots,count, one row per setting.
void write_counts_csv(std::ostream &out, const TomographyCounts &counts);
TomographyCounts read_counts_csv(std::istream &in);

}  // namespace sqrs

#endif
