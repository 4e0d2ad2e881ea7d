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

#include "sqrs/qcore.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sqrs {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
constexpr Complex kI{0.0, 1.0};

bool is_hermitian(const Eigen::MatrixXcd &m, double tol) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

// The one-rank fast path for fidelity applies when Tr(rho^2) is this close
// to one.
constexpr double kPureTolerance = 1e-12;

}  // namespace

PureState::PureState(const Ket &amplitudes) : amps_(amplitudes) {
    if (!amps_.allFinite()) {
        throw NormalizationError("pure state has non-finite amplitudes");
    }
    double n = amps_.squaredNorm();
    if (std::abs(n - 1.0) > kNormTolerance) {
        std::ostringstream ss;
        ss << "pure state is not normalized: squared norm " << n;
        throw NormalizationError(ss.str());
    }
}

PureState PureState::h() {
    return PureState(Ket(1.0, 0.0));
}
PureState PureState::v() {
    return PureState(Ket(0.0, 1.0));
}
PureState PureState::r() {
    return PureState(Ket(kInvSqrt2, kI * kInvSqrt2));
}
PureState PureState::l() {
    return PureState(Ket(kInvSqrt2, -kI * kInvSqrt2));
}
PureState PureState::d() {
    return PureState(Ket(kInvSqrt2, kInvSqrt2));
}
PureState PureState::j() {
    return PureState(Ket(kInvSqrt2, -kInvSqrt2));
}

std::string density_matrix_violation(const Eigen::MatrixXcd &m) {
    std::ostringstream ss;
    if (m.rows() != m.cols() || (m.rows() != 2 && m.rows() != 4)) {
        ss << "density matrix must be 2x2 or 4x4, got " << m.rows() << "x" << m.cols();
        return ss.str();
    }
    if (!m.allFinite()) {
        return "density matrix has non-finite entries";
    }
    if (!is_hermitian(m, kHermitianTolerance)) {
        return "density matrix is not Hermitian";
    }
    Complex tr = m.trace();
    if (std::abs(tr - 1.0) > kTraceTolerance) {
        ss << "density matrix trace is " << tr.real() << "+" << tr.imag() << "i, expected 1";
        return ss.str();
    }
    Eigen::MatrixXcd herm = (m + m.adjoint()) * 0.5;
    double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(herm, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (min_eig < -kPsdTolerance) {
        ss << "density matrix has negative eigenvalue " << min_eig;
        return ss.str();
    }
    return {};
}

DensityMatrix::DensityMatrix(const Eigen::MatrixXcd &entries) : m_(entries) {
    if (m_.rows() != m_.cols() || (m_.rows() != 2 && m_.rows() != 4)) {
        std::ostringstream ss;
        ss << "density matrix must be 2x2 or 4x4, got " << m_.rows() << "x" << m_.cols();
        throw DimensionError(ss.str());
    }
    auto problem = density_matrix_violation(m_);
    if (!problem.empty()) {
        throw InvalidStateError(problem);
    }
}

DensityMatrix DensityMatrix::from_pure(const PureState &state) {
    return DensityMatrix(projector(state));
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
    if (dim != 2 && dim != 4) {
        throw DimensionError("maximally mixed state must have dimension 2 or 4");
    }
    return DensityMatrix(Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim));
}

double DensityMatrix::purity() const {
    return (m_ * m_).trace().real();
}

double DensityMatrix::min_eigenvalue() const {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m_, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

namespace pauli {
QubitOperator identity() {
    return QubitOperator::Identity();
}
QubitOperator x() {
    QubitOperator m;
    m << 0, 1, 1, 0;
    return m;
}
QubitOperator y() {
    QubitOperator m;
    m << 0, -kI, kI, 0;
    return m;
}
QubitOperator z() {
    QubitOperator m;
    m << 1, 0, 0, -1;
    return m;
}
}  // namespace pauli

QubitOperator projector(const PureState &s) {
    return s.amplitudes() * s.amplitudes().adjoint();
}

PairOperator tensor(const QubitOperator &alice, const QubitOperator &bob) {
    PairOperator out;
    for (int a = 0; a < 2; a++) {
        for (int ap = 0; ap < 2; ap++) {
            out.block<2, 2>(2 * a, 2 * ap) = alice(a, ap) * bob;
        }
    }
    return out;
}

DensityMatrix tensor_state(const DensityMatrix &alice, const DensityMatrix &bob) {
    if (alice.dim() != 2 || bob.dim() != 2) {
        throw DimensionError("tensor_state expects two single-qubit states");
    }
    QubitOperator a = alice.matrix();
    QubitOperator b = bob.matrix();
    return DensityMatrix(tensor(a, b));
}

QubitOperator partial_trace_alice(const PairOperator &op) {
    return op.block<2, 2>(0, 0) + op.block<2, 2>(2, 2);
}

DensityMatrix partial_trace_alice(const DensityMatrix &rho) {
    if (rho.dim() != 4) {
        throw DimensionError("partial_trace_alice expects a two-qubit state");
    }
    PairOperator m = rho.matrix();
    return DensityMatrix(partial_trace_alice(m));
}

double fidelity(const DensityMatrix &rho, const DensityMatrix &sigma) {
    if (rho.dim() != sigma.dim()) {
        throw DimensionError("fidelity between states of different dimension");
    }
    const auto &a = rho.matrix();
    const auto &b = sigma.matrix();
    if (std::abs(sigma.purity() - 1.0) < kPureTolerance || std::abs(rho.purity() - 1.0) < kPureTolerance) {
        return std::clamp((a * b).trace().real(), 0.0, 1.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ea(a);
    Eigen::VectorXd sqrt_vals = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXcd sqrt_a = ea.eigenvectors() * sqrt_vals.asDiagonal() * ea.eigenvectors().adjoint();
    Eigen::MatrixXcd inner = sqrt_a * b * sqrt_a;
    inner = (inner + inner.adjoint()) * 0.5;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ei(inner, Eigen::EigenvaluesOnly);
    double s = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return std::clamp(s * s, 0.0, 1.0);
}

double expectation(const DensityMatrix &rho, const Eigen::MatrixXcd &op) {
    if (op.rows() != rho.dim() || op.cols() != rho.dim()) {
        throw DimensionError("operator and state dimensions differ");
    }
    if (!is_hermitian(op, kHermitianTolerance)) {
        throw NotHermitianError("expectation requires a Hermitian operator");
    }
    return (rho.matrix() * op).trace().real();
}

double frobenius_distance(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("frobenius_distance on matrices of different shape");
    }
    return (a - b).norm();
}

}  // namespace sqrs
