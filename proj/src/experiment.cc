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

#include "sqrs/experiment.h"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>
#include <thread>

#include "sqrs/csv.h"

namespace sqrs {

namespace fs = std::filesystem;

namespace {

constexpr const char *kHeaderPrefix = "# sqrs v1";

std::string join_doubles(const std::vector<double> &v) {
    std::string out;
    for (size_t i = 0; i < v.size(); i++) {
        out += (i ? "," : "") + csv::fmt(v[i]);
    }
    return out;
}

std::string join_indices(const std::vector<size_t> &v) {
    std::string out;
    for (size_t i = 0; i < v.size(); i++) {
        out += (i ? "," : "") + std::to_string(v[i]);
    }
    return out;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "0x%016" PRIx64, v);
    return buf;
}

std::string trim(const std::string &s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename F>
auto config_value(const std::string &key, const std::string &value, F &&parse) {
    try {
        return parse(value);
    } catch (const Error &) {
        throw ConfigError("bad value for " + key + ": '" + value + "'");
    }
}

std::uint32_t parse_u32(const std::string &key, const std::string &value) {
    auto v = config_value(key, value, csv::parse_uint);
    if (v > 0xFFFFFFFFULL) {
        throw ConfigError(key + " out of range: " + value);
    }
    return static_cast<std::uint32_t>(v);
}

size_t idx(OutcomeLabel l) {
    return static_cast<size_t>(l);
}

const char *b_series = "B";

std::string entry_row(const CfiEntry &e, const char *series) {
    double f = e.flag == CfiFlag::Degenerate ? std::nan("") : e.fisher;
    return csv::fmt(e.phase) + "," + series + "," + csv::fmt(e.p) + "," + csv::fmt(e.slope) + "," + csv::fmt(f) +
           "\n";
}

std::string cfi_preamble(const ExperimentConfig &cfg) {
    return cfg.header() + "\n# centering=" + join_indices(cfg.centering) + "\nphase,series,P,slope,F\n";
}

nlohmann::json entry_json(const CfiEntry &e) {
    nlohmann::json j;
    j["phase"] = e.phase;
    j["P"] = e.p;
    j["slope"] = e.slope;
    j["F"] = e.flag == CfiFlag::Degenerate ? nlohmann::json(nullptr) : nlohmann::json(e.fisher);
    j["flag"] = cfi_flag_name(e.flag);
    return j;
}

nlohmann::json optional_json(std::optional<double> v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string render(const auto &fn) {
    std::ostringstream s;
    fn(s);
    return s.str();
}

void write_tomography_files(const ExperimentConfig &cfg, const TomographyCounts &counts,
                            const ReconstructionResult &result) {
    fs::create_directories(cfg.output_dir);
    write_file_atomic(cfg.output_dir / "counts.csv", render([&](std::ostream &o) {
                          o << cfg.header() << "\n";
                          write_counts_csv(o, counts);
                      }));
    write_file_atomic(cfg.output_dir / "rho_hat.csv", render([&](std::ostream &o) {
                          o << cfg.header() << "\n";
                          o << "# fidelity_to_singlet=" << csv::fmt(result.fidelity_to_singlet) << "\n";
                          write_rho_csv(o, result.rho_hat);
                      }));
}

void write_sweep_files(const ExperimentConfig &cfg, const ProbabilityModel &model, const SweepReport &report) {
    fs::create_directories(cfg.output_dir);
    write_file_atomic(cfg.output_dir / "sweep.csv", render([&](std::ostream &o) {
                          write_sweep_csv(o, cfg, model, report);
                      }));
    write_file_atomic(cfg.output_dir / "estimates.csv", render([&](std::ostream &o) {
                          write_estimates_csv(o, cfg, report);
                      }));
    write_file_atomic(cfg.output_dir / "cfi.csv", render([&](std::ostream &o) {
                          write_cfi_csv(o, cfg, report);
                      }));
    write_file_atomic(cfg.output_dir / "report.json", render([&](std::ostream &o) {
                          write_report_json(o, cfg, report);
                      }));
}

SweepManifest manifest_of(const ExperimentConfig &cfg) {
    return SweepManifest{cfg.hash(), cfg.seed, cfg.rounds_per_phase, cfg.phases};
}

}  // namespace

std::vector<double> default_phases() {
    std::vector<double> out;
    for (int k = 0; k <= 10; k++) {
        out.push_back(k * std::numbers::pi / 10);
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void ExperimentConfig::validate() const {
    if (phases.size() < 3) {
        throw ConfigError("a sweep needs at least three phases");
    }
    if (phases.size() > 0xFFFF) {
        throw ConfigError("too many phases");
    }
    for (size_t i = 0; i < phases.size(); i++) {
        if (!(phases[i] >= 0.0 && phases[i] <= std::numbers::pi)) {
            throw ConfigError("phase " + csv::fmt(phases[i]) + " outside [0, pi]");
        }
        if (i > 0 && !(phases[i] > phases[i - 1])) {
            throw ConfigError("phases must be strictly increasing");
        }
    }
    if (rounds_per_phase == 0) {
        throw ConfigError("rounds must be positive");
    }
    if (tomography_shots == 0) {
        throw ConfigError("shots must be positive");
    }
    noise.validate();
    if (!(grid_step > 0.0 && grid_step <= 0.1)) {
        throw ConfigError("grid_step must be in (0, 0.1]");
    }
    for (size_t c : centering) {
        if (c < 1 || c + 1 >= phases.size()) {
            throw ConfigError("centering index " + std::to_string(c) + " needs a phase on each side");
        }
    }
    if (!(abort_threshold >= 0.0 && abort_threshold <= 1.0)) {
        throw ConfigError("abort_threshold must be in [0, 1]");
    }
    if (threads == 0) {
        throw ConfigError("threads must be positive");
    }
}

void ExperimentConfig::set(const std::string &key, const std::string &value) {
    auto dbl = [&](const std::string &v) {
        return config_value(key, v, csv::parse_double);
    };
    if (key == "phases") {
        phases.clear();
        for (const auto &p : csv::split(value)) {
            phases.push_back(dbl(trim(p)));
        }
    } else if (key == "rounds") {
        rounds_per_phase = parse_u32(key, value);
    } else if (key == "shots") {
        tomography_shots = parse_u32(key, value);
    } else if (key == "werner_p") {
        noise.werner_p = dbl(value);
    } else if (key == "gamma") {
        noise.dephasing_gamma = dbl(value);
    } else if (key == "eta0") {
        noise.detector.eta0 = dbl(value);
    } else if (key == "eta1") {
        noise.detector.eta1 = dbl(value);
    } else if (key == "seed") {
        seed = config_value(key, value, csv::parse_uint);
    } else if (key == "grid_step") {
        grid_step = dbl(value);
    } else if (key == "ideal") {
        if (value != "0" && value != "1" && value != "true" && value != "false") {
            throw ConfigError("ideal must be 0 or 1");
        }
        ideal = value == "1" || value == "true";
    } else if (key == "centering") {
        centering.clear();
        for (const auto &c : csv::split(value)) {
            centering.push_back(static_cast<size_t>(config_value(key, trim(c), csv::parse_uint)));
        }
    } else if (key == "abort_threshold") {
        abort_threshold = dbl(value);
    } else if (key == "out") {
        output_dir = value;
    } else if (key == "threads") {
        threads = parse_u32(key, value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

std::string ExperimentConfig::canonical() const {
    std::string s;
    s += "phases=" + join_doubles(phases);
    s += " rounds=" + std::to_string(rounds_per_phase);
    s += " shots=" + std::to_string(tomography_shots);
    s += " werner_p=" + csv::fmt(noise.werner_p);
    s += " gamma=" + csv::fmt(noise.dephasing_gamma);
    s += " eta0=" + csv::fmt(noise.detector.eta0);
    s += " eta1=" + csv::fmt(noise.detector.eta1);
    s += " seed=" + std::to_string(seed);
    s += " grid_step=" + csv::fmt(grid_step);
    s += std::string(" ideal=") + (ideal ? "1" : "0");
    return s;
}

std::uint64_t ExperimentConfig::hash() const {
    return fnv1a64(canonical());
}

std::string ExperimentConfig::header() const {
    return std::string(kHeaderPrefix) + " config_hash=" + hex64(hash()) + " " + canonical();
}

ExperimentConfig load_config(std::istream &in, ExperimentConfig base) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + " is not key=value");
        }
        base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

ExperimentConfig config_from_header(const std::string &line) {
    if (line.rfind(kHeaderPrefix, 0) != 0) {
        throw ConfigError("not an sqrs v1 header: '" + line + "'");
    }
    std::istringstream tokens(line.substr(std::string(kHeaderPrefix).size()));
    ExperimentConfig cfg;
    std::optional<std::uint64_t> claimed;
    std::string tok;
    while (tokens >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("bad header token '" + tok + "'");
        }
        auto key = tok.substr(0, eq);
        auto value = tok.substr(eq + 1);
        if (key == "config_hash") {
            claimed = config_value(key, value, csv::parse_uint);
        } else {
            cfg.set(key, value);
        }
    }
    if (!claimed || *claimed != cfg.hash()) {
        throw ConfigError("header config_hash does not match its settings");
    }
    return cfg;
}

DensityMatrix nature_state(const ExperimentConfig &cfg) {
    return shared_state(cfg.noise);
}

TomographyCounts simulate_tomography(const ExperimentConfig &cfg) {
    return simulate_counts(nature_state(cfg), cfg.tomography_shots, cfg.seed);
}

Transcript simulate_phase(const ExperimentConfig &cfg, std::size_t k) {
    if (k >= cfg.phases.size()) {
        throw ConfigError("phase index out of range");
    }
    return run_protocol(nature_state(cfg), cfg.noise.detector, cfg.seed, cfg.phases[k], cfg.rounds_per_phase,
                        static_cast<std::uint16_t>(k));
}

ReconstructionResult calibrate(const TomographyCounts &counts, double abort_threshold) {
    auto result = reconstruct(counts);
    if (result.fidelity_to_singlet < abort_threshold) {
        throw CalibrationAbort(result.fidelity_to_singlet, abort_threshold);
    }
    return result;
}

std::vector<RoundRecord> alice_records(const ExperimentConfig &cfg, std::size_t k, const SensingOutcomes &announced) {
    if (announced.phase_point_id != k) {
        throw TransportError("outcomes for phase point " + std::to_string(announced.phase_point_id) +
                             " where " + std::to_string(k) + " was expected");
    }
    if (announced.s_b.size() != cfg.rounds_per_phase) {
        throw TransportError("phase point " + std::to_string(k) + " announced " +
                             std::to_string(announced.s_b.size()) + " rounds, expected " +
                             std::to_string(cfg.rounds_per_phase));
    }
    auto t = simulate_phase(cfg, k);
    std::vector<RoundRecord> rounds(t.rounds().begin(), t.rounds().end());
    for (size_t j = 0; j < rounds.size(); j++) {
        rounds[j].s_b = announced.s_b[j];
    }
    return rounds;
}

SweepPoint summarize(double phi_nominal, std::span<const RoundRecord> rounds) {
    SweepPoint p;
    p.phi_nominal = phi_nominal;
    p.groups = classify(rounds);
    p.eve.trials = rounds.size();
    for (const auto &r : rounds) {
        p.eve.zeros += r.s_b == 0;
    }
    return p;
}

std::vector<SweepPoint> simulate_sweep(const ExperimentConfig &cfg) {
    cfg.validate();
    std::vector<SweepPoint> out(cfg.phases.size());
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (size_t k = next++; k < out.size(); k = next++) {
            try {
                auto t = simulate_phase(cfg, k);
                out[k] = summarize(cfg.phases[k], t.rounds());
            } catch (...) {
                std::lock_guard lock(failure_mu);
                failure = std::current_exception();
            }
        }
    };
    unsigned n = std::min<unsigned>(cfg.threads, static_cast<unsigned>(out.size()));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n; i++) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto &t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

SweepReport analyze(const ExperimentConfig &cfg, const ProbabilityModel &model, std::vector<SweepPoint> points) {
    SweepReport r;
    r.points = std::move(points);
    std::vector<double> axis;
    for (const auto &p : r.points) {
        r.estimates.push_back(estimate_phase(model, p.groups, xor_decode(p.groups), cfg.grid_step));
        axis.push_back(r.estimates.back().mean_of_groups());
    }
    r.eve = eve_report(r.points, axis, model);
    for (size_t c : cfg.centering) {
        r.cfi.push_back(cfi_report(r.points, r.eve, c));
    }
    return r;
}

std::vector<CfiEntry> eve_cfi_from_views(const ExperimentConfig &cfg, const ProbabilityModel &model,
                                         const SweepReport &alice, std::vector<EveView> views) {
    std::map<std::uint16_t, EveView> by_id;
    for (auto &v : views) {
        auto [it, inserted] = by_id.emplace(v.phase_point_id, v);
        if (!inserted && !(it->second == v)) {
            throw TransportError("tap holds two different views of phase point " + std::to_string(v.phase_point_id));
        }
    }
    if (by_id.size() != cfg.phases.size() || by_id.rbegin()->first + 1u != cfg.phases.size()) {
        throw TransportError("tap does not cover every phase point");
    }
    std::vector<SweepPoint> points;
    for (const auto &[id, v] : by_id) {
        SweepPoint p;
        p.phi_nominal = cfg.phases[id];
        p.eve.trials = v.size();
        p.eve.zeros = v.zeros();
        points.push_back(p);
    }
    auto report = eve_report(points, alice.eve.phase_axis, model);
    std::vector<CfiEntry> out;
    for (size_t c : cfg.centering) {
        out.push_back(eve_cfi(report, c));
    }
    return out;
}

void write_rho_csv(std::ostream &out, const DensityMatrix &rho) {
    out << "row,col,re,im\n";
    for (int r = 0; r < rho.dim(); r++) {
        for (int c = 0; c < rho.dim(); c++) {
            out << r << ',' << c << ',' << csv::fmt(rho(r, c).real()) << ',' << csv::fmt(rho(r, c).imag()) << '\n';
        }
    }
}

DensityMatrix read_rho_csv(std::istream &in) {
    auto t = csv::read(in);
    size_t cr = t.column("row"), cc = t.column("col"), cre = t.column("re"), cim = t.column("im");
    if (t.rows.size() != 16) {
        throw DimensionError("rho_hat must have 16 entries");
    }
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    for (const auto &row : t.rows) {
        auto r = csv::parse_uint(row[cr]);
        auto c = csv::parse_uint(row[cc]);
        if (r > 3 || c > 3) {
            throw DimensionError("rho_hat index out of range");
        }
        m(static_cast<int>(r), static_cast<int>(c)) = Complex(csv::parse_double(row[cre]), csv::parse_double(row[cim]));
    }
    return DensityMatrix(m);
}

void write_sweep_csv(std::ostream &out, const ExperimentConfig &cfg, const ProbabilityModel &model,
                     const SweepReport &report) {
    out << cfg.header() << "\nphi_k,group,n0,n1,p_exp,p_model\n";
    for (size_t k = 0; k < report.points.size(); k++) {
        const auto &p = report.points[k];
        for (auto l : kAllLabels) {
            const auto &g = p.groups[idx(l)];
            out << csv::fmt(p.phi_nominal) << ',' << label_name(l) << ',' << g.n0 << ',' << g.n1 << ','
                << csv::fmt(g.p_exp()) << ',' << csv::fmt(model.probability(l, p.phi_nominal)) << '\n';
        }
        out << csv::fmt(p.phi_nominal) << ',' << b_series << ',' << p.eve.zeros << ',' << p.eve.trials - p.eve.zeros
            << ',' << csv::fmt(p.eve.fraction()) << ',' << csv::fmt(report.eve.p_model[k]) << '\n';
    }
}

std::vector<SweepPoint> read_sweep_csv(std::istream &in) {
    auto t = csv::read(in);
    size_t cphi = t.column("phi_k"), cg = t.column("group"), c0 = t.column("n0"), c1 = t.column("n1");
    std::vector<SweepPoint> out;
    for (const auto &row : t.rows) {
        double phi = csv::parse_double(row[cphi]);
        if (out.empty() || out.back().phi_nominal != phi) {
            out.emplace_back();
            out.back().phi_nominal = phi;
        }
        auto &p = out.back();
        auto n0 = csv::parse_uint(row[c0]);
        auto n1 = csv::parse_uint(row[c1]);
        if (row[cg] == b_series) {
            p.eve = BernoulliSummary{n0 + n1, n0};
        } else {
            auto l = parse_label(row[cg]);
            p.groups[idx(l)] = GroupStats{l, n0, n1};
        }
    }
    return out;
}

void write_estimates_csv(std::ostream &out, const ExperimentConfig &cfg, const SweepReport &report) {
    out << cfg.header() << "\nphi_k,estimator,n,phi_hat,flag\n";
    for (size_t k = 0; k < report.points.size(); k++) {
        const auto &p = report.points[k];
        const auto &e = report.estimates[k];
        std::string phi = csv::fmt(p.phi_nominal);
        std::uint64_t total = 0;
        for (auto l : kAllLabels) {
            const auto &g = p.groups[idx(l)];
            total += g.n();
            const auto &v = e.per_group[idx(l)];
            out << phi << ',' << label_name(l) << ',' << g.n() << ',' << csv::fmt(v ? *v : std::nan("")) << ','
                << (v ? "ok" : "empty") << '\n';
        }
        out << phi << ",pooled_xor," << total << ',' << csv::fmt(e.pooled_xor.phi) << ','
            << (e.pooled_xor.low_curvature ? "low_curvature" : "ok") << '\n';
        out << phi << ",pooled_weighted," << total << ','
            << csv::fmt(e.pooled_weighted ? *e.pooled_weighted : std::nan("")) << ','
            << (e.pooled_weighted ? "ok" : "undefined") << '\n';
        out << phi << ",mean," << total << ',' << csv::fmt(e.mean_of_groups()) << ",ok\n";
    }
}

void write_cfi_csv(std::ostream &out, const ExperimentConfig &cfg, const SweepReport &report) {
    out << cfi_preamble(cfg);
    for (const auto &c : report.cfi) {
        for (auto l : kAllLabels) {
            out << entry_row(c.alice[idx(l)], label_name(l));
        }
        out << entry_row(c.eve, b_series);
    }
}

void write_eve_cfi_csv(std::ostream &out, const ExperimentConfig &cfg, std::span<const CfiEntry> rows) {
    out << cfi_preamble(cfg);
    for (const auto &e : rows) {
        out << entry_row(e, b_series);
    }
}

void write_report_json(std::ostream &out, const ExperimentConfig &cfg, const SweepReport &report) {
    nlohmann::json j;
    j["format"] = "sqrs-report/1";
    j["config_hash"] = hex64(cfg.hash());
    j["seed"] = cfg.seed;
    j["config"] = cfg.canonical();
    j["centering"] = cfg.centering;
    nlohmann::json phases = nlohmann::json::array();
    for (size_t k = 0; k < report.points.size(); k++) {
        const auto &p = report.points[k];
        const auto &e = report.estimates[k];
        nlohmann::json ph;
        ph["phi_k"] = p.phi_nominal;
        for (auto l : kAllLabels) {
            const auto &g = p.groups[idx(l)];
            ph["groups"][label_name(l)] = {{"n0", g.n0}, {"n1", g.n1}, {"phi_hat", optional_json(e.per_group[idx(l)])}};
        }
        ph["eve"] = {{"n0", p.eve.zeros},
                     {"n1", p.eve.trials - p.eve.zeros},
                     {"phase_axis", report.eve.phase_axis[k]},
                     {"p_model", report.eve.p_model[k]}};
        ph["pooled_xor"] = {{"phi_hat", e.pooled_xor.phi},
                            {"fisher_information", e.pooled_xor.fisher_information},
                            {"low_curvature", e.pooled_xor.low_curvature}};
        ph["pooled_weighted"] = optional_json(e.pooled_weighted);
        phases.push_back(ph);
    }
    j["phases"] = phases;
    nlohmann::json cfis = nlohmann::json::array();
    for (const auto &c : report.cfi) {
        nlohmann::json cj;
        cj["center_index"] = c.center_index;
        cj["method"] = derivative_method_name(c.method);
        for (auto l : kAllLabels) {
            cj["alice"][label_name(l)] = entry_json(c.alice[idx(l)]);
        }
        cj["eve"] = entry_json(c.eve);
        cj["eve_floor"] = c.eve_floor;
        cj["asymmetry_ratio"] = c.asymmetry_ratio;
        cfis.push_back(cj);
    }
    j["cfi"] = cfis;
    out << j.dump(2) << "\n";
}

void write_file_atomic(const fs::path &path, const std::string &contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw Error("cannot write " + tmp.string());
        }
        f << contents;
        if (!f.flush()) {
            throw Error("write failed: " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw Error("cannot read " + path.string());
    }
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

ReconstructionResult cmd_tomography(const ExperimentConfig &cfg) {
    cfg.validate();
    auto counts = simulate_tomography(cfg);
    auto result = reconstruct(counts);
    write_tomography_files(cfg, counts, result);
    if (result.fidelity_to_singlet < cfg.abort_threshold) {
        throw CalibrationAbort(result.fidelity_to_singlet, cfg.abort_threshold);
    }
    return result;
}

ProbabilityModel alice_model(const ExperimentConfig &cfg) {
    if (cfg.ideal) {
        return ProbabilityModel::singlet();
    }
    auto path = cfg.output_dir / "rho_hat.csv";
    if (!fs::exists(path)) {
        throw ConfigError("no rho_hat.csv in " + cfg.output_dir.string() + "; run tomography first or pass --ideal");
    }
    std::ifstream in(path);
    return ProbabilityModel(read_rho_csv(in));
}

SweepReport cmd_sweep(const ExperimentConfig &cfg) {
    cfg.validate();
    auto model = alice_model(cfg);
    auto report = analyze(cfg, model, simulate_sweep(cfg));
    write_sweep_files(cfg, model, report);
    return report;
}

SweepReport cmd_cfi(const ExperimentConfig &cfg) {
    auto path = cfg.output_dir / "sweep.csv";
    if (!fs::exists(path)) {
        throw ConfigError("no sweep.csv in " + cfg.output_dir.string() + "; run sweep first");
    }
    std::ifstream in(path);
    auto table_head = std::string();
    std::getline(in, table_head);
    ExperimentConfig data = config_from_header(table_head);
    data.output_dir = cfg.output_dir;
    data.centering = cfg.centering;
    data.validate();
    in.seekg(0);
    auto points = read_sweep_csv(in);
    if (points.size() != data.phases.size()) {
        throw ConfigError("sweep.csv does not match its header");
    }
    auto model = alice_model(data);
    auto report = analyze(data, model, std::move(points));
    write_file_atomic(data.output_dir / "cfi.csv", render([&](std::ostream &o) {
                          write_cfi_csv(o, data, report);
                      }));
    write_file_atomic(data.output_dir / "report.json", render([&](std::ostream &o) {
                          write_report_json(o, data, report);
                      }));
    return report;
}

void serve_bob(const ExperimentConfig &cfg, FrameSink &sink, const BobOptions &opts) {
    cfg.validate();
    if (opts.start_phase >= cfg.phases.size()) {
        throw ConfigError("start phase out of range");
    }
    if (opts.start_phase == 0 && !cfg.ideal) {
        sink.send(encode_message(simulate_tomography(cfg)));
    }
    sink.send(encode_message(manifest_of(cfg)));
    for (size_t k = opts.start_phase; k < cfg.phases.size(); k++) {
        auto frame = encode_message(SensingOutcomes::from_view(eve_view(simulate_phase(cfg, k))));
        if (opts.stop_after && k > *opts.stop_after) {
            if (opts.truncate_on_stop) {
                sink.send(std::span(frame).first(frame.size() / 2));
            }
            sink.close();
            return;
        }
        sink.send(frame);
    }
    sink.close();
}

SweepReport run_alice(const ExperimentConfig &cfg, std::unique_ptr<FrameSource> source, const AliceOptions &opts) {
    cfg.validate();
    fs::path dir = cfg.output_dir / "received";
    if (!opts.resume) {
        fs::remove_all(dir);
        if (opts.eve_tap) {
            fs::remove(*opts.eve_tap);
        }
    }
    fs::create_directories(dir);

    const SweepManifest expected = manifest_of(cfg);
    std::optional<TomographyCounts> tomo;
    bool have_manifest = false;
    std::vector<std::optional<SensingOutcomes>> outcomes(cfg.phases.size());

    auto resume_point = [&]() -> std::optional<std::uint16_t> {
        size_t k = 0;
        while (k < outcomes.size() && outcomes[k]) {
            k++;
        }
        return k == 0 ? std::nullopt : std::optional<std::uint16_t>(static_cast<std::uint16_t>(k - 1));
    };

    // Returns the checkpoint name for a newly accepted message.
    auto accept = [&](const Message &m) -> std::optional<std::string> {
        if (auto *c = std::get_if<TomographyCounts>(&m)) {
            if (tomo && !(*tomo == *c)) {
                throw TransportError("conflicting tomography reports");
            }
            bool fresh = !tomo;
            tomo = *c;
            return fresh ? std::optional<std::string>("tomography.bin") : std::nullopt;
        }
        if (auto *mf = std::get_if<SweepManifest>(&m)) {
            if (!(*mf == expected)) {
                throw ConfigError("sender's sweep manifest differs from the local configuration");
            }
            bool fresh = !have_manifest;
            have_manifest = true;
            return fresh ? std::optional<std::string>("manifest.bin") : std::nullopt;
        }
        const auto &s = std::get<SensingOutcomes>(m);
        if (!have_manifest) {
            throw TransportError("outcomes arrived before the sweep manifest");
        }
        if (s.phase_point_id >= outcomes.size()) {
            throw PayloadError("phase point id " + std::to_string(s.phase_point_id) + " out of range");
        }
        auto &slot = outcomes[s.phase_point_id];
        if (slot && !(*slot == s)) {
            throw TransportError("conflicting outcomes for phase point " + std::to_string(s.phase_point_id));
        }
        bool fresh = !slot;
        slot = s;
        char name[32];
        std::snprintf(name, sizeof(name), "phase_%05u.bin", static_cast<unsigned>(s.phase_point_id));
        return fresh ? std::optional<std::string>(name) : std::nullopt;
    };

    if (opts.resume) {
        std::vector<fs::path> files;
        for (const auto &e : fs::directory_iterator(dir)) {
            if (e.path().extension() == ".bin") {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end(), [](const fs::path &a, const fs::path &b) {
            // manifest before phases; tomography first.
            auto rank = [](const fs::path &p) {
                auto n = p.filename().string();
                return n == "tomography.bin" ? 0 : n == "manifest.bin" ? 1 : 2;
            };
            return std::make_pair(rank(a), a.filename()) < std::make_pair(rank(b), b.filename());
        });
        for (const auto &f : files) {
            auto bytes = read_file(f);
            accept(decode_message(decode(std::span(reinterpret_cast<const std::uint8_t *>(bytes.data()), bytes.size()))));
        }
    }

    std::shared_ptr<EveTap> tap;
    if (opts.eve_tap) {
        tap = std::make_shared<EveTap>();
        source = std::make_unique<TappedSource>(std::move(source), tap);
    }
    auto flush_tap = [&] {
        if (tap) {
            auto bytes = tap->bytes();
            std::ofstream f(*opts.eve_tap, std::ios::binary | std::ios::app);
            f.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        }
    };

    AliceLink link(std::move(source));
    try {
        while (true) {
            std::optional<Message> m;
            try {
                m = link.receive();
            } catch (const ConnectionLostError &e) {
                throw ConnectionLostError(e.what(), resume_point());
            }
            if (!m) {
                break;
            }
            if (auto name = accept(*m)) {
                const auto &frame = link.last_frame();
                write_file_atomic(dir / *name, std::string(frame.begin(), frame.end()));
            }
        }
    } catch (...) {
        flush_tap();
        throw;
    }
    flush_tap();

    size_t have = std::count_if(outcomes.begin(), outcomes.end(), [](const auto &o) {
        return o.has_value();
    });
    if (have != outcomes.size() || (!cfg.ideal && !tomo)) {
        throw ConnectionLostError("stream ended with " + std::to_string(have) + " of " +
                                      std::to_string(outcomes.size()) + " phase points received",
                                  resume_point());
    }

    std::optional<ProbabilityModel> model;
    if (cfg.ideal) {
        model = ProbabilityModel::singlet();
    } else {
        auto result = reconstruct(*tomo);
        write_tomography_files(cfg, *tomo, result);
        if (result.fidelity_to_singlet < cfg.abort_threshold) {
            throw CalibrationAbort(result.fidelity_to_singlet, cfg.abort_threshold);
        }
        model = ProbabilityModel(result.rho_hat);
    }

    std::vector<SweepPoint> points;
    for (size_t k = 0; k < outcomes.size(); k++) {
        auto rounds = alice_records(cfg, k, *outcomes[k]);
        points.push_back(summarize(cfg.phases[k], rounds));
    }
    auto report = analyze(cfg, *model, std::move(points));
    write_sweep_files(cfg, *model, report);

    if (opts.eve_tap) {
        auto bytes = read_file(*opts.eve_tap);
        auto views = parse_eve_views(std::span(reinterpret_cast<const std::uint8_t *>(bytes.data()), bytes.size()));
        auto rows = eve_cfi_from_views(cfg, *model, report, std::move(views));
        write_file_atomic(cfg.output_dir / "eve_cfi.csv", render([&](std::ostream &o) {
                              write_eve_cfi_csv(o, cfg, rows);
                          }));
    }
    return report;
}

}  // namespace sqrs
