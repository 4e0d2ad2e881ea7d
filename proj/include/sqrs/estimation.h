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

#ifndef SQRS_ESTIMATION_H
#define SQRS_ESTIMATION_H

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sqrs/protocol.h"
#include "sqrs/qcore.h"
#include "sqrs/source.h"

namespace sqrs {

constexpr double kDefaultGridStep = 1e-3;

/// Outcome counts of Bob's bit within one of Alice's groups.
struct GroupStats {
    OutcomeLabel label = OutcomeLabel::A1;
    std::uint64_t n0 = 0;
    std::uint64_t n1 = 0;

    std::uint64_t n() const {
        return n0 + n1;
    }
    /// n0 / (n0 + n1); NaN for an empty group.
    double p_exp() const;
    bool operator==(const GroupStats &) const = default;
};

using GroupTable = std::array<GroupStats, kNumLabels>;

/// Partitions rounds by Alice's label. Throws ClassificationError when a
/// record's label disagrees with its (basis, s_A).
GroupTable classify(std::span<const RoundRecord> rounds);

/// Alice's model of the group probabilities, built from the pair state she
/// learned by tomography.
///
/// P_i(phi) = Tr[U(phi) rho_Bi U(phi)^dagger |R><R|], where rho_Bi is the
/// steered state for label i and U(phi) = exp(-i phi sigma_z / 2). With
/// rho_Bi = [[a, b], [b*, d]] this is (a + d)/2 - Im(b e^{-i phi}), which is
/// what probability() evaluates.
class ProbabilityModel {
   public:
    explicit ProbabilityModel(const DensityMatrix &rho_hat);

    static ProbabilityModel singlet();

    const DensityMatrix &rho_hat() const {
        return rho_;
    }

    /// Probability of Alice's outcome within her basis, Tr[rho (P_i (x) I)].
    double branch_probability(OutcomeLabel label) const;

    /// Steered probe state for `label`. Throws DegenerateBranchError.
    const QubitOperator &probe(OutcomeLabel label) const;

    double probability(OutcomeLabel label, double phi) const;
    /// d probability / d phi, in closed form.
    double derivative(OutcomeLabel label, double phi) const;

    /// Probability that s_A xor s_B xor 1 is 0 for rounds in `basis`.
    double xor_probability(Basis basis, double phi) const;
    double xor_derivative(Basis basis, double phi) const;

    /// Mean of the four group curves.
    double eve_probability(double phi) const;

   private:
    DensityMatrix rho_;
    std::array<double, kNumLabels> branch_{};
    std::array<std::optional<QubitOperator>, kNumLabels> probes_;
};

/// Model probability that Bob reports 0 given Alice's label.
double model_probability(const ProbabilityModel &model, OutcomeLabel label, double phi);

/// Phase in [0, pi] minimizing |P_i(phi) - p_exp|.
///
/// The residual is evaluated on the grid k * grid_step (plus pi), each grid
/// local minimum is refined by golden-section search within its two
/// neighbouring cells, and the smallest refined residual wins. Minima within
/// 1e-9 of each other are ties: they go to the one nearest `hint` when given,
/// otherwise to the smallest phase. Throws EstimationError for an empty group
/// or a non-positive step.
double estimate_phase_grid(const ProbabilityModel &model, const GroupStats &group, double grid_step = kDefaultGridStep,
                           std::optional<double> hint = std::nullopt);

struct BernoulliSummary {
    std::uint64_t trials = 0;
    std::uint64_t zeros = 0;

    double fraction() const;
    bool operator==(const BernoulliSummary &) const = default;
};

/// Per-basis statistics of s_A xor s_B xor 1.
struct XorSummary {
    BernoulliSummary y;
    BernoulliSummary x;

    const BernoulliSummary &operator[](Basis b) const {
        return b == Basis::PauliY ? y : x;
    }
};

XorSummary xor_decode(std::span<const RoundRecord> rounds);

/// The same statistics recovered from group counts: a round is an XOR zero
/// exactly when s_B = s_A xor 1.
XorSummary xor_decode(const GroupTable &groups);

struct PooledEstimate {
    double phi;
    /// Fisher information of the data at phi, summed over bases whose model
    /// probability is strictly inside (0, 1).
    double fisher_information;
    /// Set when fisher_information is negligible: every basis with data sits
    /// where its curve is flat at 0 or 1 (e.g. Y-only data at phi = 0).
    bool low_curvature;
};

/// Maximizes the two-binomial log-likelihood of the XOR statistics over
/// [0, pi] (grid plus golden-section refinement, ties to the smaller phase).
/// Throws EstimationError when both bases are empty.
PooledEstimate pooled_mle(const XorSummary &summary, const ProbabilityModel &model,
                          double grid_step = kDefaultGridStep);

/// All of Alice's estimates at one phase point.
struct PhaseEstimate {
    std::array<std::optional<double>, kNumLabels> per_group;
    PooledEstimate pooled_xor;
    /// Mean of the per-group estimates weighted by n_i F_i; empty when no
    /// group has finite Fisher information.
    std::optional<double> pooled_weighted;
    double grid_resolution;

    /// Mean of the available per-group estimates.
    double mean_of_groups() const;
};

/// Per-group estimates use the pooled XOR estimate as their tie-break hint,
/// which resolves the phi <-> pi - phi ambiguity of the Pauli-X groups.
PhaseEstimate estimate_phase(const ProbabilityModel &model, const GroupTable &groups, const XorSummary &xor_summary,
                             double grid_step = kDefaultGridStep);

struct SamplePoint {
    double phi;
    double p;
};

/// Least-squares slope of the line through three points. Throws
/// EstimationError unless the phases are strictly increasing.
double three_point_slope(SamplePoint minus, SamplePoint center, SamplePoint plus);

/// Bernoulli Fisher information slope^2 / (p (1 - p)). Throws
/// BoundaryProbabilityError for p outside (0, 1).
double cfi(double p, double slope);

/// Expected Fisher information that pure sampling noise produces in a
/// three-point slope through three points of n trials each at a constant
/// probability: 1 / (n * sum (phi_k - mean)^2).
double sampling_floor(std::uint64_t n, std::span<const double, 3> phases);

enum class DerivativeMethod { Analytic, ThreePoint };
const char *derivative_method_name(DerivativeMethod m);

enum class CfiFlag {
    Ok,
    /// The center probability was 0 or 1; the value comes from the nearest
    /// neighbouring phase where it is defined.
    Substituted,
    /// No neighbour had an interior probability either.
    Degenerate,
};
const char *cfi_flag_name(CfiFlag f);

struct CfiEntry {
    double phase = 0;
    double p = 0;
    double slope = 0;
    double fisher = 0;
    CfiFlag flag = CfiFlag::Ok;
};

/// Data gathered at one phase point of a sweep.
struct SweepPoint {
    double phi_nominal = 0;
    GroupTable groups{};
    BernoulliSummary eve;  // zeros = Bob's 0 outcomes over all rounds
};

struct CfiReport {
    std::size_t center_index = 0;
    std::array<CfiEntry, kNumLabels> alice;
    CfiEntry eve;
    double eve_floor = 0;
    /// max(Alice F) / max(Eve F, eve_floor).
    double asymmetry_ratio = 0;
    DerivativeMethod method = DerivativeMethod::ThreePoint;
};

/// Three-point CFI for each of Alice's groups at points[k], on the nominal
/// phase axis. Boundary probabilities are replaced per CfiFlag.
std::array<CfiEntry, kNumLabels> alice_cfi(std::span<const SweepPoint> points, std::size_t k);

struct EveReport {
    /// Mean of Alice's four estimates at each phase point.
    std::vector<double> phase_axis;
    /// N_B0 / (N_B0 + N_B1) per phase point.
    std::vector<double> p_exp;
    /// Mean of Alice's four model curves at phase_axis.
    std::vector<double> p_model;
};

/// Eve's probability curve. Throws EstimationError with fewer than three
/// phase points.
EveReport eve_report(std::span<const SweepPoint> points, std::span<const double> alice_phase_axis,
                     const ProbabilityModel &model);

/// Eve's three-point CFI at index k of an EveReport.
CfiEntry eve_cfi(const EveReport &report, std::size_t k);

/// Full three-point CFI table at index k of a sweep.
CfiReport cfi_report(std::span<const SweepPoint> points, const EveReport &eve, std::size_t k);

/// The protocol's exact post-selected statistics for a known state and
/// detector: what the data would show with unlimited rounds.
class PostSelectedModel {
   public:
    PostSelectedModel(const DensityMatrix &state, const DetectorEfficiency &detector);

    /// P(s_B = 0 | A_i, detected).
    double group_probability(OutcomeLabel label, double phi) const;
    double group_derivative(OutcomeLabel label, double phi) const;
    /// P(s_B = 0 | detected), over all of Alice's outcomes.
    double eve_probability(double phi) const;
    double eve_derivative(double phi) const;

    /// Analytic-derivative CFI for all four groups and for Eve. Entries whose
    /// probability is 0 or 1 carry CfiFlag::Degenerate.
    CfiReport analytic_cfi(double phi, double eve_floor) const;

   private:
    ProbabilityModel model_;
    DetectorEfficiency detector_;
    std::array<double, kNumLabels> prior_{};  // P(A_i) = P(basis) P(s_A | basis)
};

}  // namespace sqrs

#endif
