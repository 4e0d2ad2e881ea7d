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

#ifndef SQRS_PROTOCOL_H
#define SQRS_PROTOCOL_H

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sqrs/qcore.h"
#include "sqrs/rng.h"
#include "sqrs/source.h"

namespace sqrs {

enum class Basis : std::uint8_t { PauliX = 0, PauliY = 1 };

/// Alice's four outcomes.
///
///   basis   s_A  eigenvalue  Alice projects on  label  Bob's probe
///   Pauli-Y  1      -1          |L>              A1     |R>
///   Pauli-Y  0      +1          |R>              A2     |L>
///   Pauli-X  1      -1          |J>              A3     |D>
///   Pauli-X  0      +1          |D>              A4     |J>
///
/// The probe column is for the singlet; for other states it is Tr_Alice of
/// the projected pair.
enum class OutcomeLabel : std::uint8_t { A1 = 0, A2 = 1, A3 = 2, A4 = 3 };

constexpr int kNumLabels = 4;
constexpr std::array<OutcomeLabel, 4> kAllLabels{OutcomeLabel::A1, OutcomeLabel::A2, OutcomeLabel::A3,
                                                 OutcomeLabel::A4};

OutcomeLabel outcome_label(Basis basis, std::uint8_t s_a);
Basis label_basis(OutcomeLabel label);
std::uint8_t label_outcome(OutcomeLabel label);
/// The eigenstate Alice's photon is projected on for (basis, s_A).
PureState alice_projection(Basis basis, std::uint8_t s_a);

const char *basis_name(Basis b);
Basis parse_basis(const std::string &s);
const char *label_name(OutcomeLabel label);
OutcomeLabel parse_label(const std::string &s);

struct RoundRecord {
    std::uint32_t round_id = 0;
    Basis alice_basis = Basis::PauliY;  // secret
    std::uint8_t s_a = 0;               // secret
    OutcomeLabel label = OutcomeLabel::A2;  // secret, derived from the two above
    std::uint8_t s_b = 0;
    bool detected = true;

    bool operator==(const RoundRecord &) const = default;
};

/// A protocol run at one phase point. Holds only post-selected rounds.
///
/// The true phase is kept for test bookkeeping; estimators take
/// std::span<const RoundRecord> and never see it.
class Transcript {
   public:
    Transcript(std::vector<RoundRecord> rounds, double phi_true, SourceConfig config, std::uint16_t phase_point_id,
               std::uint64_t emitted)
        : rounds_(std::move(rounds)),
          phi_true_(phi_true),
          config_(config),
          phase_point_id_(phase_point_id),
          emitted_(emitted) {
    }

    std::span<const RoundRecord> rounds() const {
        return rounds_;
    }
    size_t size() const {
        return rounds_.size();
    }
    double phi_true() const {
        return phi_true_;
    }
    const SourceConfig &config() const {
        return config_;
    }
    std::uint16_t phase_point_id() const {
        return phase_point_id_;
    }
    /// Emitted pairs, including those discarded for lack of detection.
    std::uint64_t emitted() const {
        return emitted_;
    }

   private:
    std::vector<RoundRecord> rounds_;
    double phi_true_;
    SourceConfig config_;
    std::uint16_t phase_point_id_;
    std::uint64_t emitted_;
};

/// Everything an eavesdropper holding Bob's raw data learns: round ids and
/// s_B. There is deliberately no field for Alice's basis or outcome.
struct EveEntry {
    std::uint32_t round_id;
    std::uint8_t s_b;
    bool operator==(const EveEntry &) const = default;
};
struct EveView {
    std::uint16_t phase_point_id = 0;
    std::vector<EveEntry> entries;

    size_t zeros() const;
    size_t size() const {
        return entries.size();
    }
    bool operator==(const EveView &) const = default;
};

struct SteeringBranch {
    double probability;
    DensityMatrix bob_state;
};

/// Bob's normalized state after Alice obtains s_A in `basis`:
/// Tr_Alice[rho (P (x) I)] / Tr[rho (P (x) I)].
/// Throws DegenerateBranchError when the branch probability is below 1e-15.
SteeringBranch steer_branch(const DensityMatrix &rho, Basis basis, std::uint8_t s_a);

/// Probability of s_A = 0 in `basis`, Tr[rho (P_+ (x) I)].
double alice_outcome_zero_probability(const DensityMatrix &rho, Basis basis);

struct SteerResult {
    std::uint8_t s_a;
    double probability;
    DensityMatrix bob_state;
};

/// Samples Alice's outcome by the Born rule (one uniform draw) and returns
/// Bob's collapsed state.
SteerResult steer(const DensityMatrix &rho, Basis basis, Rng &rng);

/// e^{-i phi sigma_z / 2} rho e^{i phi sigma_z / 2}.
DensityMatrix phase_channel(const DensityMatrix &rho_b, double phi);

/// Tr[rho |R><R|], the probability of s_B = 0 before detection.
double bob_zero_probability(const DensityMatrix &rho_b);

struct BobReadout {
    std::uint8_t s_b;
    bool detected;
};

/// Sigma_y measurement (s_B = 0 for |R>) followed by a detection draw with
/// efficiency eta0 or eta1. Always consumes exactly two uniforms.
BobReadout bob_measure_y(const DensityMatrix &rho_b, const DetectorEfficiency &detector, Rng &rng);

/// Simulates n post-selected rounds at phase phi: steer, phase_channel,
/// bob_measure_y. Round j draws from the substream
/// (seed, phase_point_id, j), retrying undetected emissions inside that
/// substream, so the result does not depend on evaluation order.
Transcript run_protocol(const SourceConfig &config, double phi, std::uint32_t n, std::uint16_t phase_point_id = 0);

/// As above for an explicit shared state.
Transcript run_protocol(const DensityMatrix &state, const DetectorEfficiency &detector, std::uint64_t seed, double phi,
                        std::uint32_t n, std::uint16_t phase_point_id = 0);

EveView eve_view(const Transcript &t);

/// Alice-side file: round_id,alice_basis,s_A,s_B.
void write_alice_csv(std::ostream &out, std::span<const RoundRecord> rounds);
/// Reads Alice-side records; throws ClassificationError if the secret
/// columns are absent.
std::vector<RoundRecord> read_alice_csv(std::istream &in);
/// Eve-side file: round_id,s_B.
void write_eve_csv(std::ostream &out, const EveView &view);
EveView read_eve_csv(std::istream &in);

}  // namespace sqrs

#endif
