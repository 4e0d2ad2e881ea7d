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

#include <sstream>

#include "gtest/gtest.h"
#include "sqrs/source.h"
#include "test_util.h"

using namespace sqrs;
using sqrs::testing::random_density;

namespace {
TomographySetting setting(char a, char b) {
    return TomographySetting{parse_polarization(a), parse_polarization(b)};
}
}  // namespace

TEST(tomography, setting_grid) {
    ASSERT_EQ(kNumSettings, 36);
    ASSERT_EQ(setting('H', 'H').index(), 0);
    ASSERT_EQ(setting('H', 'V').index(), 1);
    ASSERT_EQ(setting('L', 'L').index(), 35);
    for (int i = 0; i < kNumSettings; i++) {
        ASSERT_EQ(TomographySetting::from_index(i).index(), i);
    }
    ASSERT_EQ(polarization_name(Polarization::J), 'J');
}

TEST(tomography, setting_probabilities) {
    ASSERT_NEAR(setting_probability(ideal_singlet(), setting('H', 'H')), 0.0, 1e-15);
    ASSERT_NEAR(setting_probability(ideal_singlet(), setting('H', 'V')), 0.5, 1e-15);
    ASSERT_NEAR(setting_probability(ideal_singlet(), setting('R', 'R')), 0.0, 1e-15);
    ASSERT_NEAR(setting_probability(ideal_singlet(), setting('R', 'L')), 0.5, 1e-15);
    for (int i = 0; i < kNumSettings; i++) {
        ASSERT_NEAR(setting_probability(DensityMatrix::maximally_mixed(4), TomographySetting::from_index(i)), 0.25,
                    1e-15);
    }
}

TEST(tomography, simulate_counts_examples) {
    for (std::uint64_t seed : {1, 2, 3}) {
        auto c = simulate_counts(ideal_singlet(), 1000, seed);
        ASSERT_EQ(c.counts[setting('H', 'H').index()], 0u);
        ASSERT_EQ(c.counts[setting('V', 'V').index()], 0u);
        ASSERT_EQ(c.shots_per_setting, 1000u);
    }
    auto a = simulate_counts(werner(0.9), 500, 42);
    ASSERT_EQ(a, simulate_counts(werner(0.9), 500, 42));
    ASSERT_NE(a, simulate_counts(werner(0.9), 500, 43));

    // Binomial(n, 0.5) mean and spread at the (H, V) setting across seeds.
    double sum = 0, sq = 0;
    const int seeds = 400;
    for (int s = 0; s < seeds; s++) {
        double v = simulate_counts(ideal_singlet(), 1000, s).counts[setting('H', 'V').index()];
        sum += v;
        sq += v * v;
    }
    double mean = sum / seeds;
    double var = sq / seeds - mean * mean;
    ASSERT_NEAR(mean, 500.0, 4 * std::sqrt(250.0 / seeds));
    ASSERT_NEAR(var, 250.0, 60.0);
    ASSERT_THROW(simulate_counts(ideal_singlet(), 0, 1), TomographyError);
}

TEST(tomography, reconstruct_exact_probabilities) {
    auto r = reconstruct(expected_counts(ideal_singlet(), 1000000));
    ASSERT_GE(r.fidelity_to_singlet, 0.9999);
    Rng rng(8);
    for (int k = 0; k < 10; k++) {
        DensityMatrix rho(random_density(4, rng));
        auto rec = reconstruct(expected_counts(rho, 100000000));
        ASSERT_LT(frobenius_distance(rec.rho_hat.matrix(), rho.matrix()), 1e-6);
    }
}

TEST(tomography, reconstruct_maximally_mixed) {
    const std::uint32_t shots = 10000;
    auto r = reconstruct(simulate_counts(DensityMatrix::maximally_mixed(4), shots, 99));
    // Each Pauli correlator is averaged over at least 4 settings, so an
    // entry's standard deviation is below 1/sqrt(shots).
    double bound = 3.0 / std::sqrt(static_cast<double>(shots));
    for (int i = 0; i < 4; i++) {
        ASSERT_NEAR(r.rho_hat(i, i).real(), 0.25, bound);
        for (int j = 0; j < 4; j++) {
            if (i != j) {
                ASSERT_LE(std::abs(r.rho_hat(i, j)), bound);
            }
        }
    }
}

TEST(tomography, fidelity_to_singlet_examples) {
    ASSERT_NEAR(fidelity_to_singlet(ideal_singlet()), 1.0, 1e-15);
    ASSERT_NEAR(fidelity_to_singlet(werner(0.98)), 0.985, 1e-14);
    ASSERT_NEAR(fidelity_to_singlet(DensityMatrix::maximally_mixed(4)), 0.25, 1e-15);
}

TEST(tomography, converges_with_shots) {
    auto rho = werner(0.9);
    std::vector<double> mean_dist;
    for (std::uint32_t shots : {250u, 1000u, 4000u, 16000u}) {
        double sum = 0;
        for (std::uint64_t seed = 0; seed < 10; seed++) {
            sum += frobenius_distance(reconstruct(simulate_counts(rho, shots, seed)).rho_hat.matrix(), rho.matrix());
        }
        mean_dist.push_back(sum / 10);
    }
    for (size_t i = 1; i < mean_dist.size(); i++) {
        ASSERT_LT(mean_dist[i], mean_dist[i - 1]);
        // Quadrupled shots: distance roughly halves.
        ASSERT_NEAR(mean_dist[i - 1] / mean_dist[i], 2.0, 0.6);
    }
}

TEST(tomography, projection_is_physical_and_never_moves_away) {
    Rng rng(12);
    for (int k = 0; k < 50; k++) {
        auto truth = DensityMatrix(random_density(4, rng));
        auto r = reconstruct(simulate_counts(truth, 50, 1000 + k));
        ASSERT_TRUE(density_matrix_violation(r.rho_hat.matrix()).empty());
        ASSERT_LE(frobenius_distance(r.rho_hat.matrix(), truth.matrix()),
                  frobenius_distance(r.raw_linear_inversion, truth.matrix()) + 1e-12);
    }
}

TEST(tomography, adversarial_counts_still_give_a_state) {
    Rng rng(77);
    for (int k = 0; k < 100; k++) {
        TomographyCounts c;
        c.shots_per_setting = 1 + static_cast<std::uint32_t>(rng.next_u64() % 50);
        for (auto &v : c.counts) {
            v = static_cast<std::uint32_t>(rng.next_u64() % (c.shots_per_setting + 1));
        }
        auto r = reconstruct(c);
        ASSERT_TRUE(density_matrix_violation(r.rho_hat.matrix()).empty());
        ASSERT_NEAR(r.raw_linear_inversion.trace().real(), 1.0, 1e-9);
        ASSERT_GE(r.fidelity_to_singlet, 0.0);
        ASSERT_LE(r.fidelity_to_singlet, 1.0 + 1e-12);
    }
}

TEST(tomography, project_to_physical) {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m.diagonal() << 0.6, 0.5, 0.1, -0.2;
    Eigen::Matrix4cd p = project_to_physical(m);
    // Simplex projection of (0.6, 0.5, 0.1, -0.2): the top three stay
    // positive after subtracting (1.2 - 1) / 3, the last clips to zero.
    ASSERT_NEAR(p(0, 0).real(), 0.6 - 0.2 / 3, 1e-12);
    ASSERT_NEAR(p(1, 1).real(), 0.5 - 0.2 / 3, 1e-12);
    ASSERT_NEAR(p(2, 2).real(), 0.1 - 0.2 / 3, 1e-12);
    ASSERT_NEAR(p(3, 3).real(), 0.0, 1e-12);
}

TEST(tomography, validation) {
    TomographyCounts c;
    ASSERT_THROW(reconstruct(c), TomographyError);
    c.shots_per_setting = 10;
    c.counts[5] = 11;
    ASSERT_THROW(reconstruct(c), TomographyError);
}

TEST(tomography, csv_round_trip) {
    auto c = simulate_counts(werner(0.95), 777, 5);
    std::stringstream s;
    write_counts_csv(s, c);
    ASSERT_EQ(s.str().substr(0, s.str().find('\n')), "alice_proj,bob_proj,shots,count");
    ASSERT_EQ(read_counts_csv(s), c);
    std::stringstream bad("alice_proj,bob_proj,shots,count\nH,H,10,3\n");
    ASSERT_THROW(read_counts_csv(bad), TomographyError);
}
