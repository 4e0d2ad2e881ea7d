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

#ifndef SQRS_EXPERIMENT_H
#define SQRS_EXPERIMENT_H

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqrs/estimation.h"
#include "sqrs/protocol.h"
#include "sqrs/tomography.h"
#include "sqrs/transport.h"

namespace sqrs {

/// k * pi / 10 for k = 0..10.
std::vector<double> default_phases();

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

/// Everything that determines an experiment's output files.
///
/// Config files are flat UTF-8 `key=value` lines ('#' starts a comment).
/// Keys: phases (comma separated radians), rounds, shots, werner_p, gamma,
/// eta0, eta1, seed, grid_step, ideal, centering (comma separated indices),
/// abort_threshold, out, threads.
struct ExperimentConfig {
    std::vector<double> phases = default_phases();
    std::uint32_t rounds_per_phase = 100000;
    std::uint32_t tomography_shots = 10000;
    NoiseModel noise;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
    double grid_step = kDefaultGridStep;
    /// Alice models the exact singlet instead of a tomography estimate.
    bool ideal = false;
    std::vector<std::size_t> centering{2, 7};
    double abort_threshold = 0.95;
    unsigned threads = 1;

    /// Throws ConfigError.
    void validate() const;

    /// Sets one key from its text form. Throws ConfigError for unknown keys
    /// and malformed values.
    void set(const std::string &key, const std::string &value);

    /// Space separated key=value pairs of every setting that affects the
    /// data: phases rounds shots werner_p gamma eta0 eta1 seed grid_step
    /// ideal.
    std::string canonical() const;
    std::uint64_t hash() const;

    /// "# sqrs v1 config_hash=0x... <canonical()>". Every output file starts
    /// with it.
    std::string header() const;
};

/// Applies `key=value` lines on top of `base`.
ExperimentConfig load_config(std::istream &in, ExperimentConfig base = {});

/// Rebuilds the data-affecting part of a config from a file header line.
/// Throws ConfigError when the embedded hash does not match.
ExperimentConfig config_from_header(const std::string &line);

// ---- Bob's side: nature and the apparatus ----

/// The pair state the source actually emits.
DensityMatrix nature_state(const ExperimentConfig &cfg);

TomographyCounts simulate_tomography(const ExperimentConfig &cfg);

/// Rounds at phase index k, on substream (seed, k, round).
Transcript simulate_phase(const ExperimentConfig &cfg, std::size_t k);

// ---- Alice's side ----

/// Reconstructs rho-hat and enforces the calibration threshold. Throws
/// CalibrationAbort.
ReconstructionResult calibrate(const TomographyCounts &counts, double abort_threshold);

/// Alice's own records at phase index k (her basis and outcome per round)
/// combined with Bob's announced bits. Throws TransportError when the
/// announcement does not fit the configured sweep.
std::vector<RoundRecord> alice_records(const ExperimentConfig &cfg, std::size_t k, const SensingOutcomes &announced);

SweepPoint summarize(double phi_nominal, std::span<const RoundRecord> rounds);

/// simulate_phase and summarize for every phase, on cfg.threads threads.
std::vector<SweepPoint> simulate_sweep(const ExperimentConfig &cfg);

struct SweepReport {
    std::vector<SweepPoint> points;
    std::vector<PhaseEstimate> estimates;
    EveReport eve;
    std::vector<CfiReport> cfi;  // one per centering index
};

SweepReport analyze(const ExperimentConfig &cfg, const ProbabilityModel &model, std::vector<SweepPoint> points);

/// Eve's CFI rows computed from tapped outcome views, on the phase axis of
/// Alice's estimates. Views may arrive in any order.
std::vector<CfiEntry> eve_cfi_from_views(const ExperimentConfig &cfg, const ProbabilityModel &model,
                                         const SweepReport &alice, std::vector<EveView> views);

// ---- files ----

/// CSV with columns row,col,re,im.
void write_rho_csv(std::ostream &out, const DensityMatrix &rho);
DensityMatrix read_rho_csv(std::istream &in);

/// sweep.csv: phi_k,group,n0,n1,p_exp,p_model. Groups A1..A4, then B for
/// Eve's view of the same rounds.
void write_sweep_csv(std::ostream &out, const ExperimentConfig &cfg, const ProbabilityModel &model,
                     const SweepReport &report);
std::vector<SweepPoint> read_sweep_csv(std::istream &in);

/// estimates.csv: phi_k,estimator,n,phi_hat,flag. Estimators A1..A4,
/// pooled_xor, pooled_weighted and mean.
void write_estimates_csv(std::ostream &out, const ExperimentConfig &cfg, const SweepReport &report);

/// cfi.csv: phase,series,P,slope,F.
void write_cfi_csv(std::ostream &out, const ExperimentConfig &cfg, const SweepReport &report);
void write_eve_cfi_csv(std::ostream &out, const ExperimentConfig &cfg, std::span<const CfiEntry> rows);

void write_report_json(std::ostream &out, const ExperimentConfig &cfg, const SweepReport &report);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path &path, const std::string &contents);
std::string read_file(const std::filesystem::path &path);

// ---- drivers ----

/// Simulated tomography; writes counts.csv and rho_hat.csv. Throws
/// CalibrationAbort after writing both.
ReconstructionResult cmd_tomography(const ExperimentConfig &cfg);

/// Alice's model: the exact singlet with cfg.ideal, otherwise rho_hat.csv
/// from the output directory (ConfigError when absent).
ProbabilityModel alice_model(const ExperimentConfig &cfg);

/// Single-process sweep; writes sweep.csv, estimates.csv, cfi.csv and
/// report.json.
SweepReport cmd_sweep(const ExperimentConfig &cfg);

/// Recomputes the CFI table from sweep.csv in the output directory with
/// cfg.centering; rewrites cfi.csv and report.json.
SweepReport cmd_cfi(const ExperimentConfig &cfg);

struct BobOptions {
    std::size_t start_phase = 0;
    /// Stop after sending this phase index, leaving the stream broken.
    std::optional<std::size_t> stop_after;
    /// With stop_after: emit the first half of the next frame before
    /// stopping, the way a killed process would.
    bool truncate_on_stop = true;
};

/// Bob's process: tomography report (unless ideal), the sweep manifest, then
/// one SensingOutcomes message per phase.
void serve_bob(const ExperimentConfig &cfg, FrameSink &sink, const BobOptions &opts = {});

struct AliceOptions {
    /// Load frames checkpointed by an earlier, interrupted run.
    bool resume = false;
    /// Append every received frame to this file.
    std::optional<std::filesystem::path> eve_tap;
};

/// Alice's process: receives, checkpoints each frame under
/// <out>/received/, then writes the same files as cmd_tomography and
/// cmd_sweep. With eve_tap also writes eve_cfi.csv from the tapped bytes.
/// Throws ConnectionLostError when the stream ends early.
SweepReport run_alice(const ExperimentConfig &cfg, std::unique_ptr<FrameSource> source,
                      const AliceOptions &opts = {});

}  // namespace sqrs

#endif
