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

#include "gtest/gtest.h"
#include "sqrs/source.h"
#include "test_util.h"

using namespace sqrs;
using sqrs::testing::random_density;

namespace {
const Complex I(0, 1);
}

TEST(qcore, pure_state_rejects_unnormalized) {
    ASSERT_THROW(PureState(Ket(1, 1)), NormalizationError);
    ASSERT_THROW(PureState(Ket(0, 0)), NormalizationError);
    ASSERT_NO_THROW(PureState(Ket(0.6, 0.8 * I)));
}

TEST(qcore, named_states_are_pauli_eigenvectors) {
    ASSERT_TRUE((pauli::y() * PureState::r().amplitudes()).isApprox(PureState::r().amplitudes(), 1e-14));
    ASSERT_TRUE((pauli::y() * PureState::l().amplitudes()).isApprox(-PureState::l().amplitudes(), 1e-14));
    ASSERT_TRUE((pauli::x() * PureState::d().amplitudes()).isApprox(PureState::d().amplitudes(), 1e-14));
    ASSERT_TRUE((pauli::x() * PureState::j().amplitudes()).isApprox(-PureState::j().amplitudes(), 1e-14));
    ASSERT_TRUE((pauli::z() * PureState::h().amplitudes()).isApprox(PureState::h().amplitudes(), 1e-14));
}

TEST(qcore, pauli_constants) {
    for (const auto &p : {pauli::x(), pauli::y(), pauli::z()}) {
        ASSERT_TRUE(p.isApprox(p.adjoint()));
        ASSERT_TRUE((p * p).isApprox(QubitOperator::Identity()));
        ASSERT_NEAR(std::abs(p.trace()), 0.0, 1e-15);
    }
    ASSERT_EQ(pauli::identity(), QubitOperator::Identity());
}

TEST(qcore, projector_examples) {
    QubitOperator h = projector(PureState::h());
    ASSERT_EQ(h(0, 0), Complex(1));
    ASSERT_EQ(h(1, 1), Complex(0));
    ASSERT_EQ(h(0, 1), Complex(0));

    QubitOperator r = projector(PureState::r());
    QubitOperator expected;
    expected << 0.5, -0.5 * I, 0.5 * I, 0.5;
    ASSERT_TRUE(r.isApprox(expected, 1e-15));

    QubitOperator d = projector(PureState::d());
    ASSERT_LT((d * d - d).norm(), 1e-12);
    for (auto s : {PureState::h(), PureState::v(), PureState::d(), PureState::j(), PureState::r(), PureState::l()}) {
        QubitOperator p = projector(s);
        ASSERT_LT((p * p - p).norm(), 1e-12);
        ASSERT_LT((p - p.adjoint()).norm(), 1e-12);
        ASSERT_NEAR(p.trace().real(), 1.0, 1e-12);
    }
}

TEST(qcore, tensor_alice_first) {
    ASSERT_EQ(tensor(pauli::identity(), pauli::identity()), PairOperator::Identity());
    // |HV> has index 2*0 + 1.
    Eigen::Vector4cd hv = Eigen::Vector4cd::Unit(1);
    ASSERT_TRUE((tensor(pauli::z(), pauli::identity()) * hv).isApprox(hv));
    ASSERT_TRUE((tensor(pauli::identity(), pauli::z()) * hv).isApprox(-hv));
}

TEST(qcore, tensor_trace_factorizes) {
    Rng rng(5);
    for (int k = 0; k < 20; k++) {
        QubitOperator a, b;
        for (int i = 0; i < 4; i++) {
            a(i / 2, i % 2) = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
            b(i / 2, i % 2) = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
        }
        ASSERT_NEAR(std::abs(tensor(a, b).trace() - a.trace() * b.trace()), 0.0, 1e-12);
    }
}

TEST(qcore, density_matrix_validation) {
    ASSERT_THROW(DensityMatrix(Eigen::MatrixXcd::Identity(3, 3) / 3.0), DimensionError);
    Eigen::MatrixXcd not_hermitian(2, 2);
    not_hermitian << 0.5, 0.1, 0.2, 0.5;
    ASSERT_THROW(DensityMatrix{not_hermitian}, InvalidStateError);
    ASSERT_THROW(DensityMatrix(Eigen::MatrixXcd::Identity(2, 2)), InvalidStateError);
    Eigen::MatrixXcd negative(2, 2);
    negative << 1.2, 0, 0, -0.2;
    ASSERT_THROW(DensityMatrix{negative}, InvalidStateError);
    Eigen::MatrixXcd nan_entry = Eigen::MatrixXcd::Identity(2, 2) / 2.0;
    nan_entry(0, 0) = std::nan("");
    ASSERT_THROW(DensityMatrix{nan_entry}, InvalidStateError);
    ASSERT_FALSE(density_matrix_violation(negative).empty());
    ASSERT_TRUE(density_matrix_violation(Eigen::MatrixXcd::Identity(4, 4) / 4.0).empty());
}

TEST(qcore, partial_trace_examples) {
    ASSERT_TRUE(partial_trace_alice(ideal_singlet()).matrix().isApprox(Eigen::MatrixXcd::Identity(2, 2) / 2.0));
    auto hv = tensor_state(DensityMatrix::from_pure(PureState::h()), DensityMatrix::from_pure(PureState::v()));
    ASSERT_TRUE(partial_trace_alice(hv).matrix().isApprox(projector(PureState::v())));
    for (double p : {0.0, 0.3, 0.99, 1.0}) {
        ASSERT_LT(frobenius_distance(partial_trace_alice(werner(p)).matrix(), Eigen::MatrixXcd::Identity(2, 2) / 2.0),
                  1e-14);
    }
    ASSERT_THROW(partial_trace_alice(DensityMatrix::maximally_mixed(2)), DimensionError);
}

TEST(qcore, partial_trace_of_product_is_bob) {
    Rng rng(17);
    for (int k = 0; k < 20; k++) {
        DensityMatrix a(random_density(2, rng));
        DensityMatrix b(random_density(2, rng));
        ASSERT_LT(frobenius_distance(partial_trace_alice(tensor_state(a, b)).matrix(), b.matrix()), 1e-14);
    }
}

TEST(qcore, fidelity_examples) {
    ASSERT_NEAR(fidelity(ideal_singlet(), ideal_singlet()), 1.0, 1e-12);
    ASSERT_NEAR(fidelity(ideal_singlet(), werner(0.98)), 0.985, 1e-12);
    ASSERT_NEAR(fidelity(DensityMatrix::from_pure(PureState::h()), DensityMatrix::from_pure(PureState::v())), 0.0,
                1e-15);
    ASSERT_THROW(fidelity(ideal_singlet(), DensityMatrix::maximally_mixed(2)), DimensionError);
}

TEST(qcore, fidelity_general_mixed_states) {
    // Commuting diagonal states: F = (sum sqrt(p_i q_i))^2.
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2, 2), b = Eigen::MatrixXcd::Zero(2, 2);
    a(0, 0) = 0.7;
    a(1, 1) = 0.3;
    b(0, 0) = 0.2;
    b(1, 1) = 0.8;
    double expected = std::pow(std::sqrt(0.14) + std::sqrt(0.24), 2);
    ASSERT_NEAR(fidelity(DensityMatrix(a), DensityMatrix(b)), expected, 1e-12);
}

TEST(qcore, fidelity_symmetric_and_maximal_only_on_equality) {
    Rng rng(23);
    for (int k = 0; k < 30; k++) {
        DensityMatrix a(random_density(4, rng));
        DensityMatrix b(random_density(4, rng));
        double fab = fidelity(a, b);
        ASSERT_NEAR(fab, fidelity(b, a), 1e-9);
        ASSERT_GE(fab, 0.0);
        ASSERT_LT(fab, 1.0 - 1e-6);
        ASSERT_NEAR(fidelity(a, a), 1.0, 1e-9);
    }
}

TEST(qcore, expectation_examples) {
    auto r = DensityMatrix::from_pure(PureState::r());
    ASSERT_NEAR(expectation(r, projector(PureState::r())), 1.0, 1e-15);
    ASSERT_NEAR(expectation(DensityMatrix::maximally_mixed(2), projector(PureState::r())), 0.5, 1e-15);
    ASSERT_NEAR(expectation(DensityMatrix::from_pure(PureState::d()), projector(PureState::r())), 0.5, 1e-15);
    ASSERT_THROW(expectation(r, PairOperator::Identity()), DimensionError);
    QubitOperator not_hermitian = QubitOperator::Zero();
    not_hermitian(0, 1) = 1.0;
    ASSERT_THROW(expectation(r, not_hermitian), NotHermitianError);
}
