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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sqrs/source.h"

namespace sqrs {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTieTolerance = 1e-9;
constexpr double kRefineTolerance = 1e-12;
constexpr double kDegenerateBranch = 1e-15;
constexpr double kProbabilityEdge = 1e-12;

size_t idx(OutcomeLabel l) {
    return static_cast<size_t>(l);
}

// Golden-section search for a minimum of f on [lo, hi].
template <typename F>
double golden_section_min(F &&f, double lo, double hi) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > kRefineTolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // The bracket endpoints themselves may be the minimum (e.g. phi = 0).
    double best = (a + b) / 2;
    double fbest = f(best);
    for (double x : {lo, hi}) {
        double fx = f(x);
        if (fx < fbest) {
            best = x;
            fbest = fx;
        }
    }
    return best;
}

std::vector<double> phase_grid(double step) {
    if (!(step > 0) || !std::isfinite(step)) {
        throw EstimationError("grid step must be positive");
    }
    auto n = static_cast<size_t>(std::ceil(kPi / step));
    std::vector<double> grid;
    grid.reserve(n + 1);
    for (size_t k = 0; k <= n; k++) {
        grid.push_back(std::min(static_cast<double>(k) * step, kPi));
    }
    if (grid.back() < kPi) {
        grid.push_back(kPi);
    }
    return grid;
}

double clamp01(double p) {
    return std::clamp(p, 0.0, 1.0);
}

bool interior(double p) {
    return p > kProbabilityEdge && p < 1.0 - kProbabilityEdge;
}

// Three-point CFI centered at k on (phi, p) series, with the boundary
// substitution rule.
CfiEntry series_cfi(std::span<const double> phi, std::span<const double> p, size_t k) {
    auto at = [&](size_t c) -> std::optional<CfiEntry> {
        if (c == 0 || c + 1 >= phi.size()) {
            return std::nullopt;
        }
        double slope = three_point_slope({phi[c - 1], p[c - 1]}, {phi[c], p[c]}, {phi[c + 1], p[c + 1]});
        try {
            return CfiEntry{phi[c], p[c], slope, cfi(p[c], slope), CfiFlag::Ok};
        } catch (const BoundaryProbabilityError &) {
            return std::nullopt;
        }
    };
    if (k == 0 || k + 1 >= phi.size()) {
        throw EstimationError("centering index needs a neighbour on each side");
    }
    if (auto e = at(k)) {
        return *e;
    }
    for (size_t c : {k + 1, k - 1}) {
        if (auto e = at(c)) {
            e->flag = CfiFlag::Substituted;
            return *e;
        }
    }
    double slope = three_point_slope({phi[k - 1], p[k - 1]}, {phi[k], p[k]}, {phi[k + 1], p[k + 1]});
    return CfiEntry{phi[k], p[k], slope, kNaN, CfiFlag::Degenerate};
}

double ratio(const std::array<CfiEntry, kNumLabels> &alice, const CfiEntry &eve, double floor) {
    double best = 0.0;
    for (const auto &e : alice) {
        if (std::isfinite(e.fisher)) {
            best = std::max(best, e.fisher);
        }
    }
    double denom = floor;
    if (std::isfinite(eve.fisher)) {
        denom = std::max(eve.fisher, floor);
    }
    if (denom <= 0) {
        return std::numeric_limits<double>::infinity();
    }
    return best / denom;
}

}  // namespace

double GroupStats::p_exp() const {
    if (n() == 0) {
        return kNaN;
    }
    return static_cast<double>(n0) / static_cast<double>(n());
}

GroupTable classify(std::span<const RoundRecord> rounds) {
    GroupTable t;
    for (auto l : kAllLabels) {
        t[idx(l)].label = l;
    }
    for (const auto &r : rounds) {
        if (r.s_a > 1 || r.s_b > 1) {
            throw ClassificationError("outcome bits must be 0 or 1");
        }
        if (outcome_label(r.alice_basis, r.s_a) != r.label) {
            throw ClassificationError("round " + std::to_string(r.round_id) + " label disagrees with basis and s_A");
        }
        auto &g = t[idx(r.label)];
        (r.s_b == 0 ? g.n0 : g.n1)++;
    }
    return t;
}

ProbabilityModel::ProbabilityModel(const DensityMatrix &rho_hat) : rho_(rho_hat) {
    if (rho_.dim() != 4) {
        throw DimensionError("probability model needs a two-qubit state");
    }
    for (auto l : kAllLabels) {
        Basis b = label_basis(l);
        std::uint8_t s = label_outcome(l);
        double p0 = alice_outcome_zero_probability(rho_, b);
        double branch = s == 0 ? p0 : 1.0 - p0;
        branch_[idx(l)] = branch;
        if (branch >= kDegenerateBranch) {
            probes_[idx(l)] = QubitOperator(steer_branch(rho_, b, s).bob_state.matrix());
        }
    }
}

ProbabilityModel ProbabilityModel::singlet() {
    return ProbabilityModel(ideal_singlet());
}

double ProbabilityModel::branch_probability(OutcomeLabel label) const {
    return branch_[idx(label)];
}

const QubitOperator &ProbabilityModel::probe(OutcomeLabel label) const {
    const auto &p = probes_[idx(label)];
    if (!p) {
        throw DegenerateBranchError(std::string("model has no state for degenerate branch ") + label_name(label));
    }
    return *p;
}

double ProbabilityModel::probability(OutcomeLabel label, double phi) const {
    const auto &m = probe(label);
    Complex rotated = m(0, 1) * std::polar(1.0, -phi);
    return clamp01(0.5 * (m(0, 0) + m(1, 1)).real() - rotated.imag());
}

double ProbabilityModel::derivative(OutcomeLabel label, double phi) const {
    const auto &m = probe(label);
    return (m(0, 1) * std::polar(1.0, -phi)).real();
}

double ProbabilityModel::xor_probability(Basis basis, double phi) const {
    // XOR = 0 exactly when s_B = s_A xor 1.
    OutcomeLabel one = outcome_label(basis, 1);
    OutcomeLabel zero = outcome_label(basis, 0);
    double q = 0.0;
    if (branch_[idx(one)] >= kDegenerateBranch) {
        q += branch_[idx(one)] * probability(one, phi);
    }
    if (branch_[idx(zero)] >= kDegenerateBranch) {
        q += branch_[idx(zero)] * (1.0 - probability(zero, phi));
    }
    return clamp01(q);
}

double ProbabilityModel::xor_derivative(Basis basis, double phi) const {
    OutcomeLabel one = outcome_label(basis, 1);
    OutcomeLabel zero = outcome_label(basis, 0);
    double dq = 0.0;
    if (branch_[idx(one)] >= kDegenerateBranch) {
        dq += branch_[idx(one)] * derivative(one, phi);
    }
    if (branch_[idx(zero)] >= kDegenerateBranch) {
        dq -= branch_[idx(zero)] * derivative(zero, phi);
    }
    return dq;
}

double ProbabilityModel::eve_probability(double phi) const {
    double sum = 0.0;
    int n = 0;
    for (auto l : kAllLabels) {
        if (probes_[idx(l)]) {
            sum += probability(l, phi);
            n++;
        }
    }
    return sum / n;
}

double model_probability(const ProbabilityModel &model, OutcomeLabel label, double phi) {
    return model.probability(label, phi);
}

double estimate_phase_grid(const ProbabilityModel &model, const GroupStats &group, double grid_step,
                           std::optional<double> hint) {
    if (group.n() == 0) {
        throw EstimationError(std::string("group ") + label_name(group.label) + " is empty");
    }
    auto grid = phase_grid(grid_step);
    double target = group.p_exp();
    auto residual = [&](double phi) {
        return std::abs(model.probability(group.label, phi) - target);
    };
    std::vector<double> r(grid.size());
    for (size_t k = 0; k < grid.size(); k++) {
        r[k] = residual(grid[k]);
    }

    struct Candidate {
        double phi;
        double residual;
    };
    std::vector<Candidate> candidates;
    size_t last = grid.size() - 1;
    for (size_t k = 0; k <= last; k++) {
        bool left = k == 0 || r[k] < r[k - 1];
        bool right = k == last || r[k] <= r[k + 1];
        if (left && right) {
            double lo = grid[k == 0 ? 0 : k - 1];
            double hi = grid[k == last ? last : k + 1];
            double phi = golden_section_min(residual, lo, hi);
            candidates.push_back({phi, residual(phi)});
        }
    }
    double best = std::min_element(candidates.begin(), candidates.end(), [](auto &a, auto &b) {
                      return a.residual < b.residual;
                  })->residual;
    std::optional<Candidate> chosen;
    for (const auto &c : candidates) {
        if (c.residual > best + kTieTolerance) {
            continue;
        }
        if (!chosen) {
            chosen = c;
        } else if (hint && std::abs(c.phi - *hint) < std::abs(chosen->phi - *hint)) {
            chosen = c;
        }
    }
    return chosen->phi;
}

double BernoulliSummary::fraction() const {
    if (trials == 0) {
        return kNaN;
    }
    return static_cast<double>(zeros) / static_cast<double>(trials);
}

XorSummary xor_decode(std::span<const RoundRecord> rounds) {
    XorSummary s;
    for (const auto &r : rounds) {
        auto &b = r.alice_basis == Basis::PauliY ? s.y : s.x;
        b.trials++;
        if ((r.s_a ^ r.s_b ^ 1) == 0) {
            b.zeros++;
        }
    }
    return s;
}

XorSummary xor_decode(const GroupTable &groups) {
    XorSummary s;
    for (auto l : kAllLabels) {
        const auto &g = groups[idx(l)];
        auto &b = label_basis(l) == Basis::PauliY ? s.y : s.x;
        b.trials += g.n();
        b.zeros += label_outcome(l) == 1 ? g.n0 : g.n1;
    }
    return s;
}

PooledEstimate pooled_mle(const XorSummary &summary, const ProbabilityModel &model, double grid_step) {
    if (summary.x.trials == 0 && summary.y.trials == 0) {
        throw EstimationError("pooled estimate needs at least one round");
    }
    auto neg_loglik = [&](double phi) {
        double ll = 0.0;
        for (Basis b : {Basis::PauliY, Basis::PauliX}) {
            const auto &s = summary[b];
            if (s.trials == 0) {
                continue;
            }
            double q = std::clamp(model.xor_probability(b, phi), 1e-300, 1.0);
            double qc = std::clamp(1.0 - model.xor_probability(b, phi), 1e-300, 1.0);
            if (s.zeros > 0) {
                ll += static_cast<double>(s.zeros) * std::log(q);
            }
            if (s.trials > s.zeros) {
                ll += static_cast<double>(s.trials - s.zeros) * std::log(qc);
            }
        }
        return -ll;
    };
    auto grid = phase_grid(grid_step);
    size_t best = 0;
    double best_value = neg_loglik(grid[0]);
    for (size_t k = 1; k < grid.size(); k++) {
        double v = neg_loglik(grid[k]);
        if (v < best_value) {
            best = k;
            best_value = v;
        }
    }
    double lo = grid[best == 0 ? 0 : best - 1];
    double hi = grid[best + 1 == grid.size() ? best : best + 1];
    double phi = golden_section_min(neg_loglik, lo, hi);

    double info = 0.0;
    for (Basis b : {Basis::PauliY, Basis::PauliX}) {
        const auto &s = summary[b];
        double q = model.xor_probability(b, phi);
        if (s.trials == 0 || !interior(q)) {
            continue;
        }
        double dq = model.xor_derivative(b, phi);
        info += static_cast<double>(s.trials) * dq * dq / (q * (1.0 - q));
    }
    double total = static_cast<double>(summary.x.trials + summary.y.trials);
    return PooledEstimate{phi, info, info <= 1e-6 * total};
}

double PhaseEstimate::mean_of_groups() const {
    double sum = 0.0;
    int n = 0;
    for (const auto &e : per_group) {
        if (e) {
            sum += *e;
            n++;
        }
    }
    return n == 0 ? kNaN : sum / n;
}

PhaseEstimate estimate_phase(const ProbabilityModel &model, const GroupTable &groups, const XorSummary &xor_summary,
                             double grid_step) {
    PhaseEstimate out{};
    out.grid_resolution = grid_step;
    out.pooled_xor = pooled_mle(xor_summary, model, grid_step);
    double weight_sum = 0.0;
    double weighted = 0.0;
    for (auto l : kAllLabels) {
        const auto &g = groups[idx(l)];
        if (g.n() == 0) {
            continue;
        }
        double phi = estimate_phase_grid(model, g, grid_step, out.pooled_xor.phi);
        out.per_group[idx(l)] = phi;
        try {
            double f = cfi(model.probability(l, phi), model.derivative(l, phi));
            weighted += static_cast<double>(g.n()) * f * phi;
            weight_sum += static_cast<double>(g.n()) * f;
        } catch (const BoundaryProbabilityError &) {
        }
    }
    if (weight_sum > 0) {
        out.pooled_weighted = weighted / weight_sum;
    }
    return out;
}

double three_point_slope(SamplePoint minus, SamplePoint center, SamplePoint plus) {
    if (!(minus.phi < center.phi && center.phi < plus.phi)) {
        throw EstimationError("three-point slope needs strictly increasing phases");
    }
    double mean_phi = (minus.phi + center.phi + plus.phi) / 3.0;
    double mean_p = (minus.p + center.p + plus.p) / 3.0;
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto &pt : {minus, center, plus}) {
        sxy += (pt.phi - mean_phi) * (pt.p - mean_p);
        sxx += (pt.phi - mean_phi) * (pt.phi - mean_phi);
    }
    return sxy / sxx;
}

double cfi(double p, double slope) {
    if (!std::isfinite(slope)) {
        throw EstimationError("slope is not finite");
    }
    if (!(p > 0.0 && p < 1.0)) {
        throw BoundaryProbabilityError(p, slope);
    }
    return slope * slope / (p * (1.0 - p));
}

double sampling_floor(std::uint64_t n, std::span<const double, 3> phases) {
    double mean = (phases[0] + phases[1] + phases[2]) / 3.0;
    double sxx = 0.0;
    for (double p : phases) {
        sxx += (p - mean) * (p - mean);
    }
    if (n == 0 || sxx <= 0) {
        return std::numeric_limits<double>::infinity();
    }
    return 1.0 / (static_cast<double>(n) * sxx);
}

const char *derivative_method_name(DerivativeMethod m) {
    return m == DerivativeMethod::Analytic ? "analytic" : "three_point";
}

const char *cfi_flag_name(CfiFlag f) {
    switch (f) {
        case CfiFlag::Ok:
            return "ok";
        case CfiFlag::Substituted:
            return "substituted";
        case CfiFlag::Degenerate:
            return "degenerate";
    }
    return "?";
}

std::array<CfiEntry, kNumLabels> alice_cfi(std::span<const SweepPoint> points, std::size_t k) {
    std::vector<double> phi;
    for (const auto &pt : points) {
        phi.push_back(pt.phi_nominal);
    }
    std::array<CfiEntry, kNumLabels> out;
    for (auto l : kAllLabels) {
        std::vector<double> p;
        for (const auto &pt : points) {
            p.push_back(pt.groups[idx(l)].p_exp());
        }
        out[idx(l)] = series_cfi(phi, p, k);
    }
    return out;
}

EveReport eve_report(std::span<const SweepPoint> points, std::span<const double> alice_phase_axis,
                     const ProbabilityModel &model) {
    if (points.size() < 3) {
        throw EstimationError("Eve's report needs at least three phase points");
    }
    if (alice_phase_axis.size() != points.size()) {
        throw EstimationError("phase axis and sweep differ in length");
    }
    EveReport r;
    for (size_t k = 0; k < points.size(); k++) {
        r.phase_axis.push_back(alice_phase_axis[k]);
        r.p_exp.push_back(points[k].eve.fraction());
        r.p_model.push_back(model.eve_probability(alice_phase_axis[k]));
    }
    return r;
}

CfiEntry eve_cfi(const EveReport &report, std::size_t k) {
    return series_cfi(report.phase_axis, report.p_exp, k);
}

CfiReport cfi_report(std::span<const SweepPoint> points, const EveReport &eve, std::size_t k) {
    CfiReport r;
    r.center_index = k;
    r.method = DerivativeMethod::ThreePoint;
    r.alice = alice_cfi(points, k);
    r.eve = eve_cfi(eve, k);
    std::array<double, 3> axis{eve.phase_axis[k - 1], eve.phase_axis[k], eve.phase_axis[k + 1]};
    r.eve_floor = sampling_floor(points[k].eve.trials, axis);
    r.asymmetry_ratio = ratio(r.alice, r.eve, r.eve_floor);
    return r;
}

PostSelectedModel::PostSelectedModel(const DensityMatrix &state, const DetectorEfficiency &detector)
    : model_(state), detector_(detector) {
    detector_.validate();
    for (auto l : kAllLabels) {
        prior_[idx(l)] = 0.5 * model_.branch_probability(l);
    }
}

double PostSelectedModel::group_probability(OutcomeLabel label, double phi) const {
    double p = model_.probability(label, phi);
    double d = detector_.eta0 * p + detector_.eta1 * (1.0 - p);
    return clamp01(detector_.eta0 * p / d);
}

double PostSelectedModel::group_derivative(OutcomeLabel label, double phi) const {
    double p = model_.probability(label, phi);
    double d = detector_.eta0 * p + detector_.eta1 * (1.0 - p);
    return detector_.eta0 * detector_.eta1 * model_.derivative(label, phi) / (d * d);
}

double PostSelectedModel::eve_probability(double phi) const {
    double num = 0.0;
    double den = 0.0;
    for (auto l : kAllLabels) {
        if (prior_[idx(l)] < kDegenerateBranch) {
            continue;
        }
        double p = model_.probability(l, phi);
        num += prior_[idx(l)] * detector_.eta0 * p;
        den += prior_[idx(l)] * (detector_.eta0 * p + detector_.eta1 * (1.0 - p));
    }
    return clamp01(num / den);
}

double PostSelectedModel::eve_derivative(double phi) const {
    double num = 0.0;
    double den = 0.0;
    double dnum = 0.0;
    double dden = 0.0;
    for (auto l : kAllLabels) {
        double w = prior_[idx(l)];
        if (w < kDegenerateBranch) {
            continue;
        }
        double p = model_.probability(l, phi);
        double dp = model_.derivative(l, phi);
        num += w * detector_.eta0 * p;
        den += w * (detector_.eta0 * p + detector_.eta1 * (1.0 - p));
        dnum += w * detector_.eta0 * dp;
        dden += w * (detector_.eta0 - detector_.eta1) * dp;
    }
    return (dnum * den - num * dden) / (den * den);
}

CfiReport PostSelectedModel::analytic_cfi(double phi, double eve_floor) const {
    auto entry = [&](double p, double slope) {
        try {
            return CfiEntry{phi, p, slope, cfi(p, slope), CfiFlag::Ok};
        } catch (const BoundaryProbabilityError &) {
            return CfiEntry{phi, p, slope, kNaN, CfiFlag::Degenerate};
        }
    };
    CfiReport r;
    r.method = DerivativeMethod::Analytic;
    for (auto l : kAllLabels) {
        r.alice[idx(l)] = entry(group_probability(l, phi), group_derivative(l, phi));
    }
    r.eve = entry(eve_probability(phi), eve_derivative(phi));
    r.eve_floor = eve_floor;
    r.asymmetry_ratio = ratio(r.alice, r.eve, eve_floor);
    return r;
}

}  // namespace sqrs
