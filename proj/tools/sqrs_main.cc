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

#include <CLI11/CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "sqrs/csv.h"
#include "sqrs/experiment.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCalibration = 3;
constexpr int kExitTransport = 4;

struct Settings {
    std::optional<std::string> config_file;
    // flag name -> config key, filled in flag order.
    std::vector<std::pair<std::string, std::string>> overrides;
    bool ideal = false;
    std::string endpoint = "127.0.0.1:7878";
    std::optional<std::string> port_file;
    std::size_t start_phase = 0;
    std::optional<std::size_t> stop_after;
    std::optional<std::string> eve_tap;
    bool resume = false;
};

void add_experiment_flags(CLI::App *cmd, Settings &s) {
    static const std::pair<const char *, const char *> kFlags[] = {
        {"--phases", "phases"},       {"--rounds", "rounds"},
        {"--shots", "shots"},         {"--werner-p", "werner_p"},
        {"--gamma", "gamma"},         {"--eta0", "eta0"},
        {"--eta1", "eta1"},           {"--seed", "seed"},
        {"--grid-step", "grid_step"}, {"--out", "out"},
        {"--centering", "centering"}, {"--abort-threshold", "abort_threshold"},
        {"--threads", "threads"},
    };
    cmd->add_option("--config", s.config_file, "key=value config file; flags override it");
    for (const auto &[flag, key] : kFlags) {
        std::string k = key;
        cmd->add_option_function<std::string>(
            flag, [&s, k](const std::string &v) { s.overrides.emplace_back(k, v); }, "config key " + k);
    }
    cmd->add_flag("--ideal", s.ideal, "model the exact singlet instead of a tomography estimate");
}

sqrs::ExperimentConfig build_config(const Settings &s) {
    sqrs::ExperimentConfig cfg;
    if (s.config_file) {
        std::ifstream in(*s.config_file);
        if (!in) {
            throw sqrs::ConfigError("cannot open config file " + *s.config_file);
        }
        cfg = sqrs::load_config(in, cfg);
    }
    for (const auto &[k, v] : s.overrides) {
        cfg.set(k, v);
    }
    if (s.ideal) {
        cfg.ideal = true;
    }
    cfg.validate();
    return cfg;
}

void print_cfi(const sqrs::SweepReport &r) {
    for (const auto &c : r.cfi) {
        std::printf("phi_%zu:", c.center_index);
        for (int i = 0; i < sqrs::kNumLabels; i++) {
            std::printf(" F_A%d=%.4g", i + 1, r.cfi.empty() ? 0.0 : c.alice[i].fisher);
        }
        std::printf(" F_B=%.3g floor=%.3g ratio=%.4g\n", c.eve.fisher, c.eve_floor, c.asymmetry_ratio);
    }
}

int run(const std::string &command, const Settings &s) {
    auto cfg = build_config(s);
    if (command == "tomography") {
        auto r = sqrs::cmd_tomography(cfg);
        std::printf("fidelity_to_singlet=%.6f\n", r.fidelity_to_singlet);
    } else if (command == "sweep") {
        print_cfi(sqrs::cmd_sweep(cfg));
    } else if (command == "cfi") {
        print_cfi(sqrs::cmd_cfi(cfg));
    } else if (command == "serve-bob") {
        sqrs::TcpListener listener(sqrs::Endpoint::parse(s.endpoint));
        if (s.port_file) {
            sqrs::write_file_atomic(*s.port_file, std::to_string(listener.port()) + "\n");
        }
        std::fprintf(stderr, "bob: listening on port %u\n", static_cast<unsigned>(listener.port()));
        auto sink = listener.accept();
        sqrs::BobOptions opts;
        opts.start_phase = s.start_phase;
        opts.stop_after = s.stop_after;
        sqrs::serve_bob(cfg, *sink, opts);
    } else if (command == "run-alice") {
        sqrs::AliceOptions opts;
        opts.resume = s.resume;
        if (s.eve_tap) {
            opts.eve_tap = *s.eve_tap;
        }
        try {
            print_cfi(sqrs::run_alice(cfg, sqrs::connect_source(sqrs::Endpoint::parse(s.endpoint)), opts));
        } catch (const sqrs::ConnectionLostError &e) {
            std::size_t next = e.last_phase_point_id ? *e.last_phase_point_id + 1u : 0u;
            std::fprintf(stderr, "error: %s\nresume: restart the sender with --start-phase %zu and rerun with --resume\n",
                         e.what(), next);
            return kExitTransport;
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Steering-based quantum remote sensing simulator"};
    app.require_subcommand(1);
    Settings s;

    auto *tomo = app.add_subcommand("tomography", "simulate tomography and write counts.csv, rho_hat.csv");
    auto *sweep = app.add_subcommand("sweep", "run the phase sweep and write sweep.csv, estimates.csv, cfi.csv");
    auto *cfi = app.add_subcommand("cfi", "recompute cfi.csv from sweep.csv in --out");
    auto *bob = app.add_subcommand("serve-bob", "sensing party: simulate and stream outcomes to Alice");
    auto *alice = app.add_subcommand("run-alice", "analysing party: receive outcomes and write the reports");
    for (auto *c : {tomo, sweep, cfi, bob, alice}) {
        add_experiment_flags(c, s);
    }
    for (auto *c : {bob, alice}) {
        c->add_option("--endpoint", s.endpoint, "host:port")->capture_default_str();
    }
    bob->add_option("--port-file", s.port_file, "write the bound port here (useful with port 0)");
    bob->add_option("--start-phase", s.start_phase, "first phase index to send");
    bob->add_option("--stop-after", s.stop_after, "break the stream after this phase index");
    alice->add_option("--eve-tap", s.eve_tap, "append the received bytes here and write eve_cfi.csv");
    alice->add_flag("--resume", s.resume, "continue from frames checkpointed in <out>/received");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        return run(app.get_subcommands().front()->get_name(), s);
    } catch (const sqrs::ConfigError &e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const sqrs::CalibrationAbort &e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitCalibration;
    } catch (const sqrs::TransportError &e) {
        std::fprintf(stderr, "transport error: %s\n", e.what());
        return kExitTransport;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
}
