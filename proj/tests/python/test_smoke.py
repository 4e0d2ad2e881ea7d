# Copyright 2026 The SQRS Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import math
import pathlib
import struct
import zlib

import numpy as np
import pytest

import sqrs

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def test_singlet_state():
    rho = sqrs.ideal_singlet()
    assert rho.dim == 4
    m = rho.matrix
    assert m[1, 1].real == pytest.approx(0.5)
    assert m[1, 2].real == pytest.approx(-0.5)
    assert rho.purity() == pytest.approx(1.0)
    assert sqrs.fidelity_to_singlet(sqrs.werner(0.98)) == pytest.approx(0.985)


def test_density_matrix_validation():
    with pytest.raises(sqrs.InvalidStateError):
        sqrs.DensityMatrix(np.diag([0.5, 0.6, 0.0, -0.1]).astype(complex))


def test_model_matches_closed_forms():
    model = sqrs.ProbabilityModel.singlet()
    for phi in np.linspace(0.0, math.pi, 17):
        assert model.probability("A1", phi) == pytest.approx((1 + math.cos(phi)) / 2, abs=1e-12)
        assert model.probability("A2", phi) == pytest.approx((1 - math.cos(phi)) / 2, abs=1e-12)
        assert model.probability("A3", phi) == pytest.approx((1 + math.sin(phi)) / 2, abs=1e-12)
        assert model.probability("A4", phi) == pytest.approx((1 - math.sin(phi)) / 2, abs=1e-12)
        assert model.eve_probability(phi) == pytest.approx(0.5, abs=1e-12)


def test_cfi():
    model = sqrs.ProbabilityModel.singlet()
    phi = 0.7
    assert sqrs.cfi(model.probability("A1", phi), model.derivative("A1", phi)) == pytest.approx(1.0)
    with pytest.raises(sqrs.BoundaryProbabilityError):
        sqrs.cfi(1.0, 0.0)
    assert sqrs.three_point_slope([0.0, 1.0, 2.0], [1.0, 3.0, 5.0]) == pytest.approx(2.0)


def test_run_protocol_and_estimate():
    rounds = sqrs.run_protocol(sqrs.NoiseModel(), seed=5, phi=math.pi / 3, n=20000)
    assert len(rounds) == 20000
    assert set(rounds[0]) == {"round_id", "alice_basis", "s_A", "label", "s_B"}
    a1 = [r["s_B"] for r in rounds if r["label"] == "A1"]
    n0 = a1.count(0)
    phi_hat = sqrs.estimate_phase(sqrs.ProbabilityModel.singlet(), "A1", n0, len(a1) - n0)
    assert abs(phi_hat - math.pi / 3) < 4 / math.sqrt(len(a1))
    assert rounds == sqrs.run_protocol(sqrs.NoiseModel(), seed=5, phi=math.pi / 3, n=20000)


def test_tomography():
    counts = sqrs.simulate_tomography(sqrs.werner(0.99), 10000, 3)
    assert len(counts) == 36
    rho_hat = sqrs.reconstruct(counts, 10000)
    assert sqrs.fidelity_to_singlet(rho_hat) == pytest.approx(0.9925, abs=0.006)


def test_wire_fixture():
    data = (FIXTURES / "sensing_outcomes.bin").read_bytes()
    phase_id, bits = sqrs.decode_outcomes(data)
    assert phase_id == 0x0102
    assert bits == [1, 0, 1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 1]
    assert sqrs.encode_outcomes(phase_id, bits) == data


def test_frame_layout_matches_independent_encoder():
    payload = b"\x01\x02\x03"
    header = b"SQRS" + bytes([1, sqrs.SWEEP_MANIFEST]) + struct.pack(">I", len(payload))
    expected = header + struct.pack(">I", zlib.crc32(header + payload)) + payload
    assert sqrs.encode_frame(sqrs.SWEEP_MANIFEST, payload) == expected
    assert sqrs.decode_frame(expected) == (sqrs.SWEEP_MANIFEST, payload)
    corrupted = bytearray(expected)
    corrupted[-1] ^= 1
    with pytest.raises(sqrs.ChecksumMismatchError):
        sqrs.decode_frame(bytes(corrupted))
    with pytest.raises(sqrs.TransportError):
        sqrs.decode_frame(b"SQRS")


def test_config_and_sweep(tmp_path):
    cfg = sqrs.ExperimentConfig(ideal="1", rounds="20000", seed="9", out=str(tmp_path))
    assert cfg.header().startswith("# sqrs v1 config_hash=0x%016x " % cfg.hash())
    with pytest.raises(sqrs.ConfigError):
        sqrs.ExperimentConfig(bogus="1")
    report = sqrs.cmd_sweep(cfg)
    assert [r["center_index"] for r in report] == [2, 7]
    for r in report:
        for entry in r["alice"].values():
            assert 0.7 < entry["F"] < 1.3
        assert r["eve"]["F"] < 1e-2
    for name in ("sweep.csv", "estimates.csv", "cfi.csv"):
        assert (tmp_path / name).read_text().startswith(cfg.header())
    report_json = json.loads((tmp_path / "report.json").read_text())
    assert report_json["config_hash"] == "0x%016x" % cfg.hash()


def test_calibration_abort(tmp_path):
    cfg = sqrs.ExperimentConfig(werner_p="0.8", shots="2000", abort_threshold="0.99", out=str(tmp_path))
    with pytest.raises(sqrs.CalibrationAbort):
        sqrs.cmd_tomography(cfg)
