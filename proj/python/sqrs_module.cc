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

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sqrs/experiment.h"

namespace py = pybind11;
using namespace sqrs;

namespace {

py::bytes to_py(const Bytes &b) {
    return py::bytes(reinterpret_cast<const char *>(b.data()), b.size());
}

Bytes from_py(const py::bytes &b) {
    std::string s = b;
    return Bytes(s.begin(), s.end());
}

py::dict round_dict(const RoundRecord &r) {
    py::dict d;
    d["round_id"] = r.round_id;
    d["alice_basis"] = basis_name(r.alice_basis);
    d["s_A"] = r.s_a;
    d["label"] = label_name(r.label);
    d["s_B"] = r.s_b;
    return d;
}

py::dict entry_dict(const CfiEntry &e) {
    py::dict d;
    d["phase"] = e.phase;
    d["P"] = e.p;
    d["slope"] = e.slope;
    d["F"] = e.fisher;
    d["flag"] = cfi_flag_name(e.flag);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Steering-based quantum remote sensing: simulation and estimation core.";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<InvalidStateError>(m, "InvalidStateError", base.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<BoundaryProbabilityError>(m, "BoundaryProbabilityError", base.ptr());
    py::register_exception<EstimationError>(m, "EstimationError", base.ptr());
    py::register_exception<CalibrationAbort>(m, "CalibrationAbort", base.ptr());
    auto transport = py::register_exception<TransportError>(m, "TransportError", base.ptr());
    py::register_exception<TruncatedFrameError>(m, "TruncatedFrameError", transport.ptr());
    py::register_exception<BadMagicError>(m, "BadMagicError", transport.ptr());
    py::register_exception<UnsupportedVersionError>(m, "UnsupportedVersionError", transport.ptr());
    py::register_exception<UnknownKindError>(m, "UnknownKindError", transport.ptr());
    py::register_exception<ChecksumMismatchError>(m, "ChecksumMismatchError", transport.ptr());
    py::register_exception<PayloadError>(m, "PayloadError", transport.ptr());

    py::class_<DensityMatrix>(m, "DensityMatrix")
        .def(py::init([](const Eigen::MatrixXcd &mat) { return DensityMatrix(mat); }))
        .def_property_readonly("dim", &DensityMatrix::dim)
        .def_property_readonly("matrix", [](const DensityMatrix &d) { return Eigen::MatrixXcd(d.matrix()); })
        .def("purity", &DensityMatrix::purity);

    m.def("ideal_singlet", &ideal_singlet);
    m.def("werner", &werner, py::arg("p"));
    m.def("fidelity", [](const DensityMatrix &a, const DensityMatrix &b) { return fidelity(a, b); });
    m.def("fidelity_to_singlet", &fidelity_to_singlet);

    py::class_<NoiseModel>(m, "NoiseModel")
        .def(py::init([](double werner_p, double gamma, double eta0, double eta1) {
                 NoiseModel n;
                 n.werner_p = werner_p;
                 n.dephasing_gamma = gamma;
                 n.detector = DetectorEfficiency{eta0, eta1};
                 n.validate();
                 return n;
             }),
             py::arg("werner_p") = 1.0, py::arg("gamma") = 0.0, py::arg("eta0") = 1.0, py::arg("eta1") = 1.0)
        .def_readonly("werner_p", &NoiseModel::werner_p)
        .def_readonly("gamma", &NoiseModel::dephasing_gamma);
    m.def("shared_state", &shared_state);

    m.def(
        "run_protocol",
        [](const NoiseModel &noise, std::uint64_t seed, double phi, std::uint32_t n, std::uint16_t phase_point_id) {
            auto t = run_protocol(SourceConfig{noise, seed}, phi, n, phase_point_id);
            py::list rounds;
            for (const auto &r : t.rounds()) {
                rounds.append(round_dict(r));
            }
            return rounds;
        },
        py::arg("noise"), py::arg("seed"), py::arg("phi"), py::arg("n"), py::arg("phase_point_id") = 0);

    py::class_<ProbabilityModel>(m, "ProbabilityModel")
        .def(py::init<const DensityMatrix &>())
        .def_static("singlet", &ProbabilityModel::singlet)
        .def("probability", [](const ProbabilityModel &pm, const std::string &label,
                               double phi) { return pm.probability(parse_label(label), phi); })
        .def("derivative", [](const ProbabilityModel &pm, const std::string &label,
                              double phi) { return pm.derivative(parse_label(label), phi); })
        .def("eve_probability", &ProbabilityModel::eve_probability);

    m.def(
        "estimate_phase",
        [](const ProbabilityModel &pm, const std::string &label, std::uint64_t n0, std::uint64_t n1,
           double grid_step) {
            auto l = parse_label(label);
            return estimate_phase_grid(pm, GroupStats{l, n0, n1}, grid_step);
        },
        py::arg("model"), py::arg("label"), py::arg("n0"), py::arg("n1"), py::arg("grid_step") = kDefaultGridStep);
    m.def("cfi", &cfi, py::arg("p"), py::arg("slope"));
    m.def(
        "three_point_slope",
        [](std::array<double, 3> phi, std::array<double, 3> p) {
            return three_point_slope({phi[0], p[0]}, {phi[1], p[1]}, {phi[2], p[2]});
        },
        py::arg("phi"), py::arg("p"));

    m.def(
        "simulate_tomography",
        [](const DensityMatrix &rho, std::uint32_t shots, std::uint64_t seed) {
            auto c = simulate_counts(rho, shots, seed);
            return std::vector<std::uint32_t>(c.counts.begin(), c.counts.end());
        },
        py::arg("rho"), py::arg("shots"), py::arg("seed"));
    m.def(
        "reconstruct",
        [](const std::vector<std::uint32_t> &counts, std::uint32_t shots) {
            if (counts.size() != kNumSettings) {
                throw DimensionError("expected 36 counts");
            }
            TomographyCounts c;
            c.shots_per_setting = shots;
            std::copy(counts.begin(), counts.end(), c.counts.begin());
            return reconstruct(c).rho_hat;
        },
        py::arg("counts"), py::arg("shots"));

    m.def(
        "encode_frame", [](int kind, const py::bytes &payload) {
            return to_py(encode(static_cast<MessageKind>(kind), from_py(payload)));
        },
        py::arg("kind"), py::arg("payload"));
    m.def("decode_frame", [](const py::bytes &frame) {
        auto e = decode(from_py(frame));
        return py::make_tuple(static_cast<int>(e.kind), to_py(e.payload));
    });
    m.def(
        "encode_outcomes",
        [](std::uint16_t phase_point_id, const std::vector<std::uint8_t> &s_b) {
            return to_py(encode_message(SensingOutcomes{phase_point_id, s_b}));
        },
        py::arg("phase_point_id"), py::arg("s_b"));
    m.def("decode_outcomes", [](const py::bytes &frame) {
        auto msg = decode_message(decode(from_py(frame)));
        const auto *s = std::get_if<SensingOutcomes>(&msg);
        if (s == nullptr) {
            throw PayloadError("frame does not carry sensing outcomes");
        }
        return py::make_tuple(s->phase_point_id, s->s_b);
    });

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init([](const py::kwargs &kw) {
            ExperimentConfig c;
            for (auto item : kw) {
                c.set(py::str(item.first), py::str(item.second));
            }
            return c;
        }))
        .def("set", &ExperimentConfig::set)
        .def("validate", &ExperimentConfig::validate)
        .def("canonical", &ExperimentConfig::canonical)
        .def("hash", &ExperimentConfig::hash)
        .def("header", &ExperimentConfig::header)
        .def_readonly("phases", &ExperimentConfig::phases)
        .def_readonly("output_dir", &ExperimentConfig::output_dir);

    m.def("cmd_tomography", [](const ExperimentConfig &cfg) { return cmd_tomography(cfg).fidelity_to_singlet; });
    m.def("cmd_sweep", [](const ExperimentConfig &cfg) {
        auto r = cmd_sweep(cfg);
        py::list out;
        for (const auto &c : r.cfi) {
            py::dict d;
            d["center_index"] = c.center_index;
            py::dict alice;
            for (auto l : kAllLabels) {
                alice[label_name(l)] = entry_dict(c.alice[static_cast<int>(l)]);
            }
            d["alice"] = alice;
            d["eve"] = entry_dict(c.eve);
            d["eve_floor"] = c.eve_floor;
            d["asymmetry_ratio"] = c.asymmetry_ratio;
            out.append(d);
        }
        return out;
    });
}
