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

#ifndef SQRS_QCORE_H
#define SQRS_QCORE_H

#include <complex>
#include <string_view>

#include <Eigen/Dense>

#include "sqrs/errors.h"

/// Dense complex linear algebra for one and two polarization qubits.
///
/// Qubit ordering is Alice (x) Bob everywhere: in a 4x4 operator the basis
/// index is 2*a + b, where a is Alice's bit and b is Bob's bit. Bit 0 is |H>,
/// bit 1 is |V>.
namespace sqrs {

using Complex = std::complex<double>;
using Ket = Eigen::Vector2cd;
using QubitOperator = Eigen::Matrix2cd;
using PairOperator = Eigen::Matrix4cd;

constexpr double kNormTolerance = 1e-12;
constexpr double kHermitianTolerance = 1e-10;
constexpr double kTraceTolerance = 1e-10;
constexpr double kPsdTolerance = 1e-9;

/// A normalized single-qubit pure state.
class PureState {
   public:
    /// Throws NormalizationError unless |amplitudes|^2 == 1 within 1e-12.
    explicit PureState(const Ket &amplitudes);

    const Ket &amplitudes() const {
        return amps_;
    }

    static PureState h();
    static PureState v();
    /// (|H> + i|V>)/sqrt(2), the +1 eigenvector of sigma_y.
    static PureState r();
    /// (|H> - i|V>)/sqrt(2), the -1 eigenvector of sigma_y.
    static PureState l();
    /// (|H> + |V>)/sqrt(2), the +1 eigenvector of sigma_x.
    static PureState d();
    /// (|H> - |V>)/sqrt(2), the -1 eigenvector of sigma_x.
    static PureState j();

   private:
    Ket amps_;
};

/// A Hermitian, unit-trace, positive semidefinite matrix of dimension 2 or 4.
///
/// Every constructor validates the invariants, so a DensityMatrix value is
/// always physical (eigenvalues >= -1e-9).
class DensityMatrix {
   public:
    explicit DensityMatrix(const Eigen::MatrixXcd &entries);

    static DensityMatrix from_pure(const PureState &state);
    static DensityMatrix maximally_mixed(int dim);

    int dim() const {
        return static_cast<int>(m_.rows());
    }
    const Eigen::MatrixXcd &matrix() const {
        return m_;
    }
    Complex operator()(int row, int col) const {
        return m_(row, col);
    }

    /// Tr(rho^2).
    double purity() const;
    double min_eigenvalue() const;

   private:
    Eigen::MatrixXcd m_;
};

/// Checks the density-matrix invariants without constructing one.
/// Returns an empty string when valid, otherwise a description of the first
/// violated invariant.
std::string density_matrix_violation(const Eigen::MatrixXcd &m);

namespace pauli {
QubitOperator identity();
QubitOperator x();
QubitOperator y();
QubitOperator z();
}  // namespace pauli

/// |s><s|.
QubitOperator projector(const PureState &s);

/// Kronecker product with Alice's factor first.
PairOperator tensor(const QubitOperator &alice, const QubitOperator &bob);

/// rho_A (x) rho_B as a two-qubit state.
DensityMatrix tensor_state(const DensityMatrix &alice, const DensityMatrix &bob);

/// Tr_Alice[rho]: Bob's reduced state. Throws DimensionError unless dim 4.
DensityMatrix partial_trace_alice(const DensityMatrix &rho);

/// Unnormalized partial trace over Alice of an arbitrary 4x4 operator.
QubitOperator partial_trace_alice(const PairOperator &op);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
///
/// When either argument is pure this reduces to Tr(rho sigma), which is the
/// path taken for fidelities against the singlet.
double fidelity(const DensityMatrix &rho, const DensityMatrix &sigma);

/// Re Tr(rho M). Throws DimensionError on size mismatch and
/// NotHermitianError when M is not Hermitian within 1e-10.
double expectation(const DensityMatrix &rho, const Eigen::MatrixXcd &op);

/// Frobenius norm of (a - b).
double frobenius_distance(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b);

}  // namespace sqrs

#endif
