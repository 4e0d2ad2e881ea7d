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

#include "sqrs/tomography.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "sqrs/csv.h"
#include "sqrs/rng.h"
#include "sqrs/source.h"

namespace sqrs {

namespace {

constexpr std::uint64_t kTomographyStream = 0x746F6D6FULL;  // "tomo"

// Tr[P sigma_mu] for mu = I, X, Y, Z.
std::array<double, 4> pauli_components(Polarization p) {
    switch (p) {
        case Polarization::H:
            return {1, 0, 0, 1};
        case Polarization::V:
            return {1, 0, 0, -1};
        case Polarization::D:
            return {1, 1, 0, 0};
        case Polarization::J:
            return {1, -1, 0, 0};
        case Polarization::R:
            return {1, 0, 1, 0};
        case Polarization::L:
            return {1, 0, -1, 0};
    }
    throw Error("bad polarization");
}

QubitOperator pauli_matrix(int mu) {
    switch (mu) {
        case 0:
            return pauli::identity();
        case 1:
            return pauli::x();
        case 2:
            return pauli::y();
        default:
            return pauli::z();
    }
}

// Euclidean projection of v onto {x : x >= 0, sum x = 1}.
Eigen::Vector4d project_to_simplex(const Eigen::Vector4d &v) {
    std::array<double, 4> u{v(0), v(1), v(2), v(3)};
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (int k = 0; k < 4; k++) {
        cumulative += u[k];
        double t = (cumulative - 1.0) / (k + 1);
        if (u[k] - t > 0) {
            theta = t;
        }
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

}  // namespace

char polarization_name(Polarization p) {
    return "HVDJRL"[static_cast<int>(p)];
}

Polarization parse_polarization(char c) {
    switch (c) {
        case 'H':
            return Polarization::H;
        case 'V':
            return Polarization::V;
        case 'D':
            return Polarization::D;
        case 'J':
            return Polarization::J;
        case 'R':
            return Polarization::R;
        case 'L':
            return Polarization::L;
    }
    throw TomographyError(std::string("unknown polarization '") + c + "'");
}

PureState polarization_state(Polarization p) {
    switch (p) {
        case Polarization::H:
            return PureState::h();
        case Polarization::V:
            return PureState::v();
        case Polarization::D:
            return PureState::d();
        case Polarization::J:
            return PureState::j();
        case Polarization::R:
            return PureState::r();
        case Polarization::L:
            return PureState::l();
    }
    throw Error("bad polarization");
}

TomographySetting TomographySetting::from_index(int index) {
    if (index < 0 || index >= kNumSettings) {
        throw TomographyError("setting index out of range");
    }
    return {static_cast<Polarization>(index / 6), static_cast<Polarization>(index % 6)};
}

void TomographyCounts::validate() const {
    if (shots_per_setting == 0) {
        throw TomographyError("tomography requires at least one shot per setting");
    }
    for (int i = 0; i < kNumSettings; i++) {
        if (counts[i] > shots_per_setting) {
            throw TomographyError("count for setting " + std::to_string(i) + " exceeds shots per setting");
        }
    }
}

double setting_probability(const DensityMatrix &rho, TomographySetting s) {
    if (rho.dim() != 4) {
        throw DimensionError("tomography expects a two-qubit state");
    }
    PairOperator p = tensor(projector(polarization_state(s.alice)), projector(polarization_state(s.bob)));
    return std::clamp(expectation(rho, p), 0.0, 1.0);
}

TomographyCounts simulate_counts(const DensityMatrix &rho, std::uint32_t shots, std::uint64_t seed) {
    if (shots == 0) {
        throw TomographyError("tomography requires at least one shot per setting");
    }
    TomographyCounts out;
    out.shots_per_setting = shots;
    for (int i = 0; i < kNumSettings; i++) {
        double p = setting_probability(rho, TomographySetting::from_index(i));
        Rng rng = Rng::substream({seed, kTomographyStream, static_cast<std::uint64_t>(i)});
        out.counts[i] = static_cast<std::uint32_t>(rng.binomial(shots, p));
    }
    return out;
}

TomographyCounts expected_counts(const DensityMatrix &rho, std::uint32_t shots) {
    if (shots == 0) {
        throw TomographyError("tomography requires at least one shot per setting");
    }
    TomographyCounts out;
    out.shots_per_setting = shots;
    for (int i = 0; i < kNumSettings; i++) {
        double p = setting_probability(rho, TomographySetting::from_index(i));
        out.counts[i] = static_cast<std::uint32_t>(std::llround(p * shots));
    }
    return out;
}

Eigen::Matrix4cd project_to_physical(const Eigen::Matrix4cd &hermitian) {
    Eigen::Matrix4cd h = (hermitian + hermitian.adjoint()) * 0.5;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(h);
    Eigen::Vector4d lambda = project_to_simplex(es.eigenvalues());
    return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().adjoint();
}

ReconstructionResult reconstruct(const TomographyCounts &counts) {
    counts.validate();

    // f_ab - 1/4 = 1/4 sum_{(mu,nu) != (0,0)} t_a(mu) t_b(nu) T_{mu nu}, with
    // T_{mu nu} = Tr[rho sigma_mu (x) sigma_nu] and T_00 = 1.
    Eigen::Matrix<double, kNumSettings, 15> design;
    Eigen::Matrix<double, kNumSettings, 1> rhs;
    for (int i = 0; i < kNumSettings; i++) {
        auto s = TomographySetting::from_index(i);
        auto ta = pauli_components(s.alice);
        auto tb = pauli_components(s.bob);
        int col = 0;
        for (int mu = 0; mu < 4; mu++) {
            for (int nu = 0; nu < 4; nu++) {
                if (mu == 0 && nu == 0) {
                    continue;
                }
                design(i, col++) = 0.25 * ta[mu] * tb[nu];
            }
        }
        double f = static_cast<double>(counts.counts[i]) / static_cast<double>(counts.shots_per_setting);
        rhs(i) = f - 0.25;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() != 15) {
        throw TomographyError("tomography design matrix is singular");
    }
    Eigen::VectorXd t = qr.solve(rhs);

    Eigen::Matrix4cd raw = PairOperator::Identity() / 4.0;
    int col = 0;
    for (int mu = 0; mu < 4; mu++) {
        for (int nu = 0; nu < 4; nu++) {
            if (mu == 0 && nu == 0) {
                continue;
            }
            raw += 0.25 * t(col++) * tensor(pauli_matrix(mu), pauli_matrix(nu));
        }
    }
    raw = (raw + raw.adjoint()) * 0.5;

    DensityMatrix rho_hat(project_to_physical(raw));
    return ReconstructionResult{rho_hat, fidelity_to_singlet(rho_hat), raw};
}

double fidelity_to_singlet(const DensityMatrix &rho) {
    return fidelity(rho, ideal_singlet());
}

void write_counts_csv(std::ostream &out, const TomographyCounts &counts) {
    out << "alice_proj,bob_proj,shots,count\n";
    for (int i = 0; i < kNumSettings; i++) {
        auto s = TomographySetting::from_index(i);
        out << polarization_name(s.alice) << ',' << polarization_name(s.bob) << ',' << counts.shots_per_setting << ','
            << counts.counts[i] << '\n';
    }
}

TomographyCounts read_counts_csv(std::istream &in) {
    auto table = csv::read(in);
    size_t ca = table.column("alice_proj");
    size_t cb = table.column("bob_proj");
    size_t cs = table.column("shots");
    size_t cc = table.column("count");
    TomographyCounts out;
    std::array<bool, kNumSettings> seen{};
    for (const auto &row : table.rows) {
        if (row[ca].size() != 1 || row[cb].size() != 1) {
            throw TomographyError("projector labels must be single characters");
        }
        TomographySetting s{parse_polarization(row[ca][0]), parse_polarization(row[cb][0])};
        auto shots = static_cast<std::uint32_t>(csv::parse_uint(row[cs]));
        if (out.shots_per_setting != 0 && shots != out.shots_per_setting) {
            throw TomographyError("shots per setting must be uniform");
        }
        out.shots_per_setting = shots;
        if (seen[s.index()]) {
            throw TomographyError("duplicate tomography setting");
        }
        seen[s.index()] = true;
        out.counts[s.index()] = static_cast<std::uint32_t>(csv::parse_uint(row[cc]));
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw TomographyError("tomography counts incomplete: all 36 settings are required");
    }
    out.validate();
    return out;
}

}  // namespace sqrs
