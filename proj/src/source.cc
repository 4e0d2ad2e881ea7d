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

#include "sqrs/source.h"

#include <cmath>
#include <string>

namespace sqrs {

namespace {

void require_range(double v, double lo, double hi, bool lo_open, const char *name) {
    bool ok = std::isfinite(v) && v <= hi && (lo_open ? v > lo : v >= lo);
    if (!ok) {
        throw ConfigError(std::string(name) + " out of range: " + std::to_string(v));
    }
}

}  // namespace

void DetectorEfficiency::validate() const {
    require_range(eta0, 0.0, 1.0, true, "eta0");
    require_range(eta1, 0.0, 1.0, true, "eta1");
}

void NoiseModel::validate() const {
    require_range(werner_p, 0.0, 1.0, false, "werner_p");
    require_range(dephasing_gamma, 0.0, 1.0, false, "dephasing_gamma");
    detector.validate();
}

bool NoiseModel::is_ideal() const {
    return werner_p == 1.0 && dephasing_gamma == 0.0 && detector.eta0 == 1.0 && detector.eta1 == 1.0;
}

DensityMatrix ideal_singlet() {
    Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
    double s = 1.0 / std::sqrt(2.0);
    psi(1) = s;   // |HV>
    psi(2) = -s;  // |VH>
    return DensityMatrix(psi * psi.adjoint());
}

DensityMatrix werner(double p) {
    NoiseModel m;
    m.werner_p = p;
    return apply_noise(ideal_singlet(), m);
}

DensityMatrix apply_noise(const DensityMatrix &rho, const NoiseModel &m) {
    if (rho.dim() != 4) {
        throw DimensionError("apply_noise expects a two-qubit state");
    }
    m.validate();
    PairOperator mixed = m.werner_p * PairOperator(rho.matrix()) + (1.0 - m.werner_p) * PairOperator::Identity() / 4.0;

    QubitOperator k0 = QubitOperator::Zero();
    k0(0, 0) = 1.0;
    k0(1, 1) = std::sqrt(1.0 - m.dephasing_gamma);
    QubitOperator k1 = QubitOperator::Zero();
    k1(1, 1) = std::sqrt(m.dephasing_gamma);
    PairOperator a0 = tensor(pauli::identity(), k0);
    PairOperator a1 = tensor(pauli::identity(), k1);
    PairOperator out = a0 * mixed * a0.adjoint() + a1 * mixed * a1.adjoint();
    return DensityMatrix(out);
}

DensityMatrix shared_state(const NoiseModel &m) {
    return apply_noise(ideal_singlet(), m);
}

}  // namespace sqrs
