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

#include "sqrs/protocol.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>

#include "sqrs/csv.h"

namespace sqrs {

namespace {

constexpr double kDegenerateBranch = 1e-15;
constexpr std::uint64_t kMaxAttemptsPerRound = 1ULL << 24;

PairOperator alice_projector_pair(Basis basis, std::uint8_t s_a) {
    return tensor(projector(alice_projection(basis, s_a)), pauli::identity());
}

// Cached per-run sampling table. Draw order matches steer() followed by
// bob_measure_y(), preceded by one uniform for the basis.
struct RoundSampler {
    std::array<double, 2> p_alice_zero{};         // by basis
    std::array<double, kNumLabels> p_bob_zero{};  // by label, before detection
    DetectorEfficiency detector;

    RoundSampler(const DensityMatrix &state, const DetectorEfficiency &det, double phi) : detector(det) {
        for (Basis b : {Basis::PauliX, Basis::PauliY}) {
            double p0 = alice_outcome_zero_probability(state, b);
            p_alice_zero[static_cast<int>(b)] = p0;
            for (std::uint8_t s : {std::uint8_t{0}, std::uint8_t{1}}) {
                double branch = s == 0 ? p0 : 1.0 - p0;
                if (branch < kDegenerateBranch) {
                    continue;
                }
                auto steered = steer_branch(state, b, s);
                p_bob_zero[static_cast<int>(outcome_label(b, s))] =
                    bob_zero_probability(phase_channel(steered.bob_state, phi));
            }
        }
    }

    RoundRecord draw(Rng &rng, std::uint32_t round_id, std::uint64_t &attempts) const {
        for (std::uint64_t k = 0; k < kMaxAttemptsPerRound; k++) {
            attempts++;
            RoundRecord r;
            r.round_id = round_id;
            r.alice_basis = rng.uniform() < 0.5 ? Basis::PauliY : Basis::PauliX;
            double p0 = p_alice_zero[static_cast<int>(r.alice_basis)];
            r.s_a = rng.uniform() < p0 ? 0 : 1;
            r.label = outcome_label(r.alice_basis, r.s_a);
            r.s_b = rng.uniform() < p_bob_zero[static_cast<int>(r.label)] ? 0 : 1;
            double eta = r.s_b == 0 ? detector.eta0 : detector.eta1;
            r.detected = rng.uniform() < eta;
            if (r.detected) {
                return r;
            }
        }
        throw Error("no detection event after " + std::to_string(kMaxAttemptsPerRound) + " emissions");
    }
};

}  // namespace

OutcomeLabel outcome_label(Basis basis, std::uint8_t s_a) {
    if (s_a > 1) {
        throw Error("outcome bit must be 0 or 1");
    }
    if (basis == Basis::PauliY) {
        return s_a == 1 ? OutcomeLabel::A1 : OutcomeLabel::A2;
    }
    return s_a == 1 ? OutcomeLabel::A3 : OutcomeLabel::A4;
}

Basis label_basis(OutcomeLabel label) {
    return (label == OutcomeLabel::A1 || label == OutcomeLabel::A2) ? Basis::PauliY : Basis::PauliX;
}

std::uint8_t label_outcome(OutcomeLabel label) {
    return (label == OutcomeLabel::A1 || label == OutcomeLabel::A3) ? 1 : 0;
}

PureState alice_projection(Basis basis, std::uint8_t s_a) {
    if (basis == Basis::PauliY) {
        return s_a == 0 ? PureState::r() : PureState::l();
    }
    return s_a == 0 ? PureState::d() : PureState::j();
}

const char *basis_name(Basis b) {
    return b == Basis::PauliX ? "X" : "Y";
}

Basis parse_basis(const std::string &s) {
    if (s == "X") {
        return Basis::PauliX;
    }
    if (s == "Y") {
        return Basis::PauliY;
    }
    throw ClassificationError("unknown basis '" + s + "'");
}

const char *label_name(OutcomeLabel label) {
    static const char *names[] = {"A1", "A2", "A3", "A4"};
    return names[static_cast<int>(label)];
}

OutcomeLabel parse_label(const std::string &s) {
    for (auto l : kAllLabels) {
        if (s == label_name(l)) {
            return l;
        }
    }
    throw ClassificationError("unknown outcome label '" + s + "'");
}

size_t EveView::zeros() const {
    return static_cast<size_t>(std::count_if(entries.begin(), entries.end(), [](const EveEntry &e) {
        return e.s_b == 0;
    }));
}

double alice_outcome_zero_probability(const DensityMatrix &rho, Basis basis) {
    if (rho.dim() != 4) {
        throw DimensionError("steering expects a two-qubit state");
    }
    return std::clamp(expectation(rho, alice_projector_pair(basis, 0)), 0.0, 1.0);
}

SteeringBranch steer_branch(const DensityMatrix &rho, Basis basis, std::uint8_t s_a) {
    if (rho.dim() != 4) {
        throw DimensionError("steering expects a two-qubit state");
    }
    PairOperator p = alice_projector_pair(basis, s_a);
    PairOperator projected = PairOperator(rho.matrix()) * p;
    double prob = projected.trace().real();
    if (prob < kDegenerateBranch) {
        throw DegenerateBranchError(std::string("steering branch ") + label_name(outcome_label(basis, s_a)) +
                                    " has probability " + std::to_string(prob));
    }
    QubitOperator bob = partial_trace_alice(projected) / prob;
    bob = (bob + bob.adjoint()) * 0.5;
    return SteeringBranch{prob, DensityMatrix(bob)};
}

SteerResult steer(const DensityMatrix &rho, Basis basis, Rng &rng) {
    double p0 = alice_outcome_zero_probability(rho, basis);
    std::uint8_t s_a = rng.uniform() < p0 ? 0 : 1;
    auto branch = steer_branch(rho, basis, s_a);
    return SteerResult{s_a, branch.probability, branch.bob_state};
}

DensityMatrix phase_channel(const DensityMatrix &rho_b, double phi) {
    if (rho_b.dim() != 2) {
        throw DimensionError("phase_channel acts on a single qubit");
    }
    double theta = std::fmod(phi, 2 * std::numbers::pi);
    QubitOperator u = QubitOperator::Zero();
    u(0, 0) = std::polar(1.0, -theta / 2);
    u(1, 1) = std::polar(1.0, theta / 2);
    QubitOperator out = u * QubitOperator(rho_b.matrix()) * u.adjoint();
    return DensityMatrix((out + out.adjoint()) * 0.5);
}

double bob_zero_probability(const DensityMatrix &rho_b) {
    static const QubitOperator r = projector(PureState::r());
    return std::clamp(expectation(rho_b, r), 0.0, 1.0);
}

BobReadout bob_measure_y(const DensityMatrix &rho_b, const DetectorEfficiency &detector, Rng &rng) {
    detector.validate();
    double p0 = bob_zero_probability(rho_b);
    std::uint8_t s_b = rng.uniform() < p0 ? 0 : 1;
    double eta = s_b == 0 ? detector.eta0 : detector.eta1;
    bool detected = rng.uniform() < eta;
    return BobReadout{s_b, detected};
}

Transcript run_protocol(const DensityMatrix &state, const DetectorEfficiency &detector, std::uint64_t seed, double phi,
                        std::uint32_t n, std::uint16_t phase_point_id) {
    if (n == 0) {
        throw ConfigError("run_protocol needs at least one round");
    }
    if (state.dim() != 4) {
        throw DimensionError("run_protocol expects a two-qubit state");
    }
    if (!std::isfinite(phi)) {
        throw ConfigError("phase must be finite");
    }
    detector.validate();
    RoundSampler sampler(state, detector, phi);
    std::vector<RoundRecord> rounds;
    rounds.reserve(n);
    std::uint64_t attempts = 0;
    for (std::uint32_t j = 0; j < n; j++) {
        Rng rng = Rng::substream({seed, phase_point_id, j});
        rounds.push_back(sampler.draw(rng, j, attempts));
    }
    SourceConfig snapshot;
    snapshot.seed = seed;
    snapshot.noise.detector = detector;
    return Transcript(std::move(rounds), phi, snapshot, phase_point_id, attempts);
}

Transcript run_protocol(const SourceConfig &config, double phi, std::uint32_t n, std::uint16_t phase_point_id) {
    config.noise.validate();
    auto t = run_protocol(shared_state(config.noise), config.noise.detector, config.seed, phi, n, phase_point_id);
    return Transcript(std::vector<RoundRecord>(t.rounds().begin(), t.rounds().end()), phi, config, phase_point_id,
                      t.emitted());
}

EveView eve_view(const Transcript &t) {
    EveView v;
    v.phase_point_id = t.phase_point_id();
    v.entries.reserve(t.size());
    for (const auto &r : t.rounds()) {
        v.entries.push_back(EveEntry{r.round_id, r.s_b});
    }
    return v;
}

void write_alice_csv(std::ostream &out, std::span<const RoundRecord> rounds) {
    out << "round_id,alice_basis,s_A,s_B\n";
    for (const auto &r : rounds) {
        out << r.round_id << ',' << basis_name(r.alice_basis) << ',' << int(r.s_a) << ',' << int(r.s_b) << '\n';
    }
}

std::vector<RoundRecord> read_alice_csv(std::istream &in) {
    auto table = csv::read(in);
    if (!table.has_column("alice_basis") || !table.has_column("s_A")) {
        throw ClassificationError("records carry no alice_basis/s_A secrets");
    }
    size_t cid = table.column("round_id");
    size_t cbasis = table.column("alice_basis");
    size_t csa = table.column("s_A");
    size_t csb = table.column("s_B");
    std::vector<RoundRecord> out;
    out.reserve(table.rows.size());
    for (const auto &row : table.rows) {
        RoundRecord r;
        r.round_id = static_cast<std::uint32_t>(csv::parse_uint(row[cid]));
        r.alice_basis = parse_basis(row[cbasis]);
        r.s_a = static_cast<std::uint8_t>(csv::parse_uint(row[csa]));
        r.s_b = static_cast<std::uint8_t>(csv::parse_uint(row[csb]));
        if (r.s_a > 1 || r.s_b > 1) {
            throw ClassificationError("outcome bits must be 0 or 1");
        }
        r.label = outcome_label(r.alice_basis, r.s_a);
        out.push_back(r);
    }
    return out;
}

void write_eve_csv(std::ostream &out, const EveView &view) {
    out << "round_id,s_B\n";
    for (const auto &e : view.entries) {
        out << e.round_id << ',' << int(e.s_b) << '\n';
    }
}

EveView read_eve_csv(std::istream &in) {
    auto table = csv::read(in);
    size_t cid = table.column("round_id");
    size_t csb = table.column("s_B");
    EveView v;
    for (const auto &row : table.rows) {
        auto b = csv::parse_uint(row[csb]);
        if (b > 1) {
            throw Error("s_B must be 0 or 1");
        }
        v.entries.push_back(EveEntry{static_cast<std::uint32_t>(csv::parse_uint(row[cid])), static_cast<std::uint8_t>(b)});
    }
    return v;
}

}  // namespace sqrs
