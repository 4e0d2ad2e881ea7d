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

#include "sqrs/estimation.h"

#include <numbers>

#include "gtest/gtest.h"
#include "test_util.h"

using namespace sqrs;
using sqrs::testing::joint_distribution;
using sqrs::testing::random_density;

namespace {

constexpr double kPi = std::numbers::pi;

// The four singlet group curves, written out independently.
double singlet_curve(int i, double phi) {
    switch (i) {
        case 0:
            return (1 + std::cos(phi)) / 2;
        case 1:
            return (1 - std::cos(phi)) / 2;
        case 2:
            return (1 + std::sin(phi)) / 2;
        default:
            return (1 - std::sin(phi)) / 2;
    }
}

RoundRecord record(std::uint32_t id, Basis b, std::uint8_t sa, std::uint8_t sb) {
    RoundRecord r;
    r.round_id = id;
    r.alice_basis = b;
    r.s_a = sa;
    r.label = outcome_label(b, sa);
    r.s_b = sb;
    return r;
}

GroupStats exact_group(OutcomeLabel l, double p, std::uint64_t n) {
    auto n0 = static_cast<std::uint64_t>(std::llround(p * static_cast<double>(n)));
    return GroupStats{l, n0, n - n0};
}

}  // namespace

TEST(estimation, classify_synthetic) {
    std::vector<RoundRecord> rounds;
    std::uint32_t id = 0;
    for (Basis b : {Basis::PauliX, Basis::PauliY}) {
        for (std::uint8_t sa : {0, 1}) {
            rounds.push_back(record(id++, b, sa, 0));
            rounds.push_back(record(id++, b, sa, 1));
        }
    }
    auto g = classify(rounds);
    for (auto l : kAllLabels) {
        ASSERT_EQ(g[static_cast<int>(l)].label, l);
        ASSERT_EQ(g[static_cast<int>(l)].n0, 1u);
        ASSERT_EQ(g[static_cast<int>(l)].n1, 1u);
    }
    rounds[0].label = OutcomeLabel::A1;
    ASSERT_THROW(classify(rounds), ClassificationError);
    ASSERT_TRUE(std::isnan(GroupStats{}.p_exp()));
}

TEST(estimation, classify_statistics) {
    SourceConfig c;
    c.seed = 10;
    const double n = 100000;
    auto t = run_protocol(c, kPi / 3, static_cast<std::uint32_t>(n));
    auto g = classify(t.rounds());
    std::uint64_t total = 0;
    for (const auto &s : g) {
        total += s.n();
        ASSERT_NEAR(static_cast<double>(s.n()), n / 4, 4 * std::sqrt(n * 0.25 * 0.75));
    }
    ASSERT_EQ(total, static_cast<std::uint64_t>(n));
    double na1 = static_cast<double>(g[0].n());
    ASSERT_NEAR(g[0].p_exp(), 0.75, 3 * std::sqrt(0.75 * 0.25 / na1));
}

TEST(estimation, singlet_model_matches_closed_forms) {
    auto m = ProbabilityModel::singlet();
    for (int k = 0; k < 1000; k++) {
        double phi = k * kPi / 999;
        for (int i = 0; i < 4; i++) {
            ASSERT_NEAR(model_probability(m, kAllLabels[i], phi), singlet_curve(i, phi), 1e-12);
        }
    }
    ASSERT_NEAR(m.probability(OutcomeLabel::A4, kPi / 2), 0.0, 1e-15);
    for (auto l : kAllLabels) {
        ASSERT_NEAR(m.branch_probability(l), 0.5, 1e-15);
    }
}

TEST(estimation, werner_model) {
    for (double p : {0.5, 0.9, 0.99}) {
        ProbabilityModel m(werner(p));
        for (double phi : {0.0, 0.4, 1.3, 2.9}) {
            ASSERT_NEAR(m.probability(OutcomeLabel::A1, phi), (1 + p * std::cos(phi)) / 2, 1e-14);
            ASSERT_NEAR(m.probability(OutcomeLabel::A3, phi), (1 + p * std::sin(phi)) / 2, 1e-14);
            ASSERT_NEAR(m.eve_probability(phi), 0.5, 1e-14);
        }
    }
}

TEST(estimation, model_derivative_and_general_state) {
    Rng rng(6);
    for (int k = 0; k < 10; k++) {
        DensityMatrix rho(random_density(4, rng));
        ProbabilityModel m(rho);
        for (double phi : {0.2, 1.0, 2.5}) {
            auto cells = joint_distribution(rho.matrix(), phi, 1.0, 1.0);
            for (auto l : kAllLabels) {
                int b = static_cast<int>(label_basis(l));
                int sa = label_outcome(l);
                double c0 = cells[4 * b + 2 * sa], c1 = cells[4 * b + 2 * sa + 1];
                ASSERT_NEAR(m.probability(l, phi), c0 / (c0 + c1), 1e-12);
                double h = 1e-6;
                double fd = (m.probability(l, phi + h) - m.probability(l, phi - h)) / (2 * h);
                ASSERT_NEAR(m.derivative(l, phi), fd, 1e-8);
            }
        }
    }
}

TEST(estimation, degenerate_model_branch) {
    auto r = DensityMatrix::from_pure(PureState::r());
    ProbabilityModel m(tensor_state(r, r));
    ASSERT_THROW(m.probability(OutcomeLabel::A1, 0.3), DegenerateBranchError);
    ASSERT_NO_THROW(m.probability(OutcomeLabel::A2, 0.3));
}

TEST(estimation, grid_inversion_examples) {
    auto m = ProbabilityModel::singlet();
    ASSERT_NEAR(estimate_phase_grid(m, exact_group(OutcomeLabel::A1, 0.75, 1000000)), kPi / 3, 1e-5);
    ASSERT_NEAR(estimate_phase_grid(m, GroupStats{OutcomeLabel::A3, 500, 0}), kPi / 2, 1e-6);
    // At the curve's extrema the residual is quadratic in phi, so phi is
    // resolved to about sqrt(machine epsilon).
    ASSERT_NEAR(estimate_phase_grid(m, GroupStats{OutcomeLabel::A1, 500, 0}), 0.0, 1e-7);
    ASSERT_NEAR(estimate_phase_grid(m, GroupStats{OutcomeLabel::A1, 0, 500}), kPi, 1e-7);
    ASSERT_THROW(estimate_phase_grid(m, GroupStats{OutcomeLabel::A1, 0, 0}), EstimationError);
    ASSERT_THROW(estimate_phase_grid(m, GroupStats{OutcomeLabel::A1, 1, 1}, 0.0), EstimationError);
}

TEST(estimation, grid_inversion_ties) {
    // (1 + sin phi)/2 = 0.9 at phi and pi - phi.
    auto m = ProbabilityModel::singlet();
    double lo = std::asin(0.8);
    auto g = GroupStats{OutcomeLabel::A3, 9, 1};
    ASSERT_NEAR(estimate_phase_grid(m, g), lo, 1e-8);
    ASSERT_NEAR(estimate_phase_grid(m, g, kDefaultGridStep, 2.5), kPi - lo, 1e-8);
    ASSERT_NEAR(estimate_phase_grid(m, g, kDefaultGridStep, 0.5), lo, 1e-8);
}

TEST(estimation, grid_inversion_round_trip) {
    auto m = ProbabilityModel::singlet();
    for (int k = 1; k < 50; k++) {
        double phi = k * kPi / 50;
        // A1 and A2 are monotone on [0, pi].
        GroupStats g{OutcomeLabel::A1, 0, 0};
        double p = m.probability(OutcomeLabel::A1, phi);
        g.n0 = static_cast<std::uint64_t>(std::llround(p * 1e12));
        g.n1 = static_cast<std::uint64_t>(1e12) - g.n0;
        ASSERT_NEAR(estimate_phase_grid(m, g), phi, 1e-5);
    }
}

TEST(estimation, xor_decode_examples) {
    SourceConfig c;
    c.seed = 21;
    const int n = 200000;
    auto t = run_protocol(c, kPi / 3, n);
    auto s = xor_decode(t.rounds());
    ASSERT_EQ(s.x.trials + s.y.trials, static_cast<std::uint64_t>(n));
    double ny = static_cast<double>(s.y.trials), nx = static_cast<double>(s.x.trials);
    ASSERT_NEAR(s.y.fraction(), 0.75, 4 * std::sqrt(0.75 * 0.25 / ny));
    double qx = (1 + std::sqrt(3.0) / 2) / 2;
    ASSERT_NEAR(s.x.fraction(), qx, 4 * std::sqrt(qx * (1 - qx) / nx));
    auto from_groups = xor_decode(classify(t.rounds()));
    ASSERT_EQ(from_groups.x, s.x);
    ASSERT_EQ(from_groups.y, s.y);

    auto t0 = run_protocol(c, 0.0, 5000);
    auto s0 = xor_decode(t0.rounds());
    ASSERT_EQ(s0.y.zeros, s0.y.trials);

    auto m = ProbabilityModel::singlet();
    ASSERT_NEAR(m.xor_probability(Basis::PauliY, kPi / 3), 0.75, 1e-14);
    ASSERT_NEAR(m.xor_probability(Basis::PauliX, kPi / 3), qx, 1e-14);
}

TEST(estimation, xor_and_groups_agree) {
    SourceConfig c;
    c.seed = 22;
    auto m = ProbabilityModel::singlet();
    auto t = run_protocol(c, 1.2, 100000);
    auto groups = classify(t.rounds());
    auto est = estimate_phase(m, groups, xor_decode(t.rounds()));
    // Each group carries n/4 rounds of unit Fisher information.
    for (const auto &g : est.per_group) {
        ASSERT_TRUE(g.has_value());
        ASSERT_NEAR(*g, est.pooled_xor.phi, 4 * (std::sqrt(4.0 / 100000) + std::sqrt(1.0 / 100000)));
    }
    ASSERT_TRUE(est.pooled_weighted.has_value());
    ASSERT_NEAR(*est.pooled_weighted, 1.2, 4 / std::sqrt(100000.0));
}

TEST(estimation, pooled_mle_examples) {
    auto m = ProbabilityModel::singlet();
    const std::uint64_t n = 1000000000;
    XorSummary exact;
    exact.y = BernoulliSummary{n, static_cast<std::uint64_t>(std::llround(0.75 * n))};
    exact.x = BernoulliSummary{n, static_cast<std::uint64_t>(std::llround((1 + std::sqrt(3.0) / 2) / 2 * n))};
    auto e = pooled_mle(exact, m);
    ASSERT_NEAR(e.phi, kPi / 3, 1e-6);
    ASSERT_FALSE(e.low_curvature);

    XorSummary y_only;
    y_only.y = BernoulliSummary{1000, 1000};
    auto b = pooled_mle(y_only, m);
    ASSERT_NEAR(b.phi, 0.0, 1e-9);
    ASSERT_TRUE(b.low_curvature);

    ASSERT_THROW(pooled_mle(XorSummary{}, m), EstimationError);
}

TEST(estimation, pooling_reduces_variance) {
    auto m = ProbabilityModel::singlet();
    SourceConfig c;
    std::vector<double> pooled, y_only, x_only;
    for (int s = 0; s < 100; s++) {
        c.seed = 500 + s;
        auto sum = xor_decode(run_protocol(c, kPi / 4, 4000).rounds());
        pooled.push_back(pooled_mle(sum, m).phi);
        y_only.push_back(pooled_mle(XorSummary{sum.y, {}}, m).phi);
        x_only.push_back(pooled_mle(XorSummary{{}, sum.x}, m).phi);
    }
    auto var = [](const std::vector<double> &v) {
        double mean = 0, sq = 0;
        for (double x : v) {
            mean += x;
        }
        mean /= v.size();
        for (double x : v) {
            sq += (x - mean) * (x - mean);
        }
        return sq / (v.size() - 1);
    };
    ASSERT_LE(var(pooled), std::min(var(y_only), var(x_only)));
}

TEST(estimation, three_point_slope_examples) {
    ASSERT_NEAR(three_point_slope({0.0, 1.0}, {0.5, 0.75}, {1.0, 0.5}), -0.5, 1e-15);
    double h = 0.1 * kPi;
    auto f = [](double phi) { return (1 + std::cos(phi)) / 2; };
    double s = three_point_slope({h, f(h)}, {2 * h, f(2 * h)}, {3 * h, f(3 * h)});
    ASSERT_NEAR(s, -std::sin(2 * h) / 2, 0.5 * h * h / 6);
    double eps = 0.01;
    double perturbed = three_point_slope({h, f(h) - eps}, {2 * h, f(2 * h)}, {3 * h, f(3 * h) + eps});
    ASSERT_LE(std::abs(perturbed - s), eps / h + 1e-12);
    ASSERT_THROW(three_point_slope({0.1, 0}, {0.1, 0}, {0.2, 0}), EstimationError);
    ASSERT_THROW(three_point_slope({0.3, 0}, {0.2, 0}, {0.1, 0}), EstimationError);
    // Uneven spacing: least squares, not a chord.
    ASSERT_NEAR(three_point_slope({0.0, 0.0}, {1.0, 1.0}, {3.0, 3.0}), 1.0, 1e-15);
}

TEST(estimation, cfi_examples) {
    ASSERT_NEAR(cfi(0.5, 0.5), 1.0, 1e-15);
    ASSERT_EQ(cfi(0.3, 0.0), 0.0);
    auto m = ProbabilityModel::singlet();
    for (int k = 1; k < 200; k++) {
        double phi = k * kPi / 200;
        for (auto l : kAllLabels) {
            double p = m.probability(l, phi);
            if (p > 0 && p < 1) {
                ASSERT_NEAR(cfi(p, m.derivative(l, phi)), 1.0, 1e-9);
            }
        }
    }
    try {
        cfi(1.0, 0.0);
        FAIL();
    } catch (const BoundaryProbabilityError &e) {
        ASSERT_EQ(e.probability, 1.0);
        ASSERT_EQ(e.slope, 0.0);
    }
    ASSERT_THROW(cfi(0.0, 0.1), BoundaryProbabilityError);
}

TEST(estimation, sampling_floor) {
    std::array<double, 3> phases{0.1, 0.2, 0.3};
    ASSERT_NEAR(sampling_floor(1000, phases), 1.0 / (1000 * 0.02), 1e-9);
}

TEST(estimation, alice_cfi_substitutes_boundary_values) {
    std::vector<SweepPoint> pts(4);
    for (int k = 0; k < 4; k++) {
        pts[k].phi_nominal = 0.1 * k;
        for (auto l : kAllLabels) {
            pts[k].groups[static_cast<int>(l)] = GroupStats{l, 50, 50};
        }
    }
    // A1 at the center sits at p = 1; its right neighbour is interior.
    pts[1].groups[0] = GroupStats{OutcomeLabel::A1, 100, 0};
    pts[0].groups[0] = GroupStats{OutcomeLabel::A1, 100, 0};
    pts[2].groups[0] = GroupStats{OutcomeLabel::A1, 90, 10};
    pts[3].groups[0] = GroupStats{OutcomeLabel::A1, 80, 20};
    // A2 is at the boundary at every point.
    for (int k = 0; k < 4; k++) {
        pts[k].groups[1] = GroupStats{OutcomeLabel::A2, 0, 100};
    }
    auto e = alice_cfi(pts, 1);
    ASSERT_EQ(e[0].flag, CfiFlag::Substituted);
    ASSERT_NEAR(e[0].p, 0.9, 1e-15);
    ASSERT_NEAR(e[0].slope, (0.8 - 1.0) / 0.2, 1e-12);
    ASSERT_EQ(e[1].flag, CfiFlag::Degenerate);
    ASSERT_EQ(e[2].flag, CfiFlag::Ok);
    ASSERT_EQ(e[2].fisher, 0.0);
    ASSERT_THROW(alice_cfi(pts, 0), EstimationError);
    ASSERT_THROW(alice_cfi(pts, 3), EstimationError);
}

TEST(estimation, eve_report_needs_three_points) {
    auto m = ProbabilityModel::singlet();
    std::vector<SweepPoint> pts(2);
    std::vector<double> axis{0.1, 0.2};
    ASSERT_THROW(eve_report(pts, axis, m), EstimationError);
}

TEST(estimation, post_selected_model_matches_enumeration) {
    Rng rng(19);
    for (int k = 0; k < 10; k++) {
        DensityMatrix rho(random_density(4, rng));
        DetectorEfficiency det{0.6 + 0.4 * rng.uniform(), 0.6 + 0.4 * rng.uniform()};
        PostSelectedModel model(rho, det);
        for (double phi : {0.3, 1.4, 2.2}) {
            auto cells = joint_distribution(rho.matrix(), phi, det.eta0, det.eta1);
            double eve = 0;
            for (int b = 0; b < 2; b++) {
                for (int sa = 0; sa < 2; sa++) {
                    double c0 = cells[4 * b + 2 * sa], c1 = cells[4 * b + 2 * sa + 1];
                    auto l = outcome_label(static_cast<Basis>(b), sa);
                    ASSERT_NEAR(model.group_probability(l, phi), c0 / (c0 + c1), 1e-12);
                    eve += c0;
                }
            }
            ASSERT_NEAR(model.eve_probability(phi), eve, 1e-12);
            double h = 1e-6;
            ASSERT_NEAR(model.eve_derivative(phi),
                        (model.eve_probability(phi + h) - model.eve_probability(phi - h)) / (2 * h), 1e-8);
            for (auto l : kAllLabels) {
                ASSERT_NEAR(model.group_derivative(l, phi),
                            (model.group_probability(l, phi + h) - model.group_probability(l, phi - h)) / (2 * h),
                            1e-8);
            }
        }
    }
}

TEST(estimation, post_selected_singlet_cfi) {
    PostSelectedModel ideal(ideal_singlet(), DetectorEfficiency{});
    for (double phi : {0.3, 1.0, 2.0, 3.0}) {
        auto r = ideal.analytic_cfi(phi, 1e-5);
        for (const auto &e : r.alice) {
            ASSERT_NEAR(e.fisher, 1.0, 1e-9);
        }
        ASSERT_NEAR(r.eve.fisher, 0.0, 1e-20);
        ASSERT_EQ(r.method, DerivativeMethod::Analytic);
    }
    // Werner mixing and Bob-side dephasing keep Bob's marginal at I/2, so
    // Eve's curve stays flat even with unequal detectors.
    NoiseModel n;
    n.werner_p = 0.99;
    n.dephasing_gamma = 0.05;
    PostSelectedModel noisy(shared_state(n), DetectorEfficiency{1.0, 0.98});
    for (double phi : {0.5, 2.0}) {
        ASSERT_LT(std::abs(noisy.eve_derivative(phi)), 1e-13);
    }
}
