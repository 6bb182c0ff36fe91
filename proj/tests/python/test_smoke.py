# Copyright 2026 The genksr Authors
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

import numpy as np
import pytest

import genksr


def dense(inst):
    mats = {
        "I": np.eye(2),
        "X": np.array([[0, 1], [1, 0]]),
        "Y": np.array([[0, -1j], [1j, 0]]),
        "Z": np.diag([1.0, -1.0]),
    }
    dim = 2 ** inst.n_qubits
    h = np.zeros((dim, dim), dtype=complex)
    for coeff, label in inst.terms:
        m = np.eye(1)
        for ch in reversed(label):  # qubit 0 is the least significant bit
            m = np.kron(m, mats[ch])
        h += coeff * m
    return h


def test_two_site_heisenberg():
    inst = genksr.build_heisenberg_1d(2, [1.0])
    assert len(inst.terms) == 3
    e0, overlap = genksr.ground_state(inst)
    assert e0 == pytest.approx(-3.0, abs=1e-10)
    assert overlap == pytest.approx(0.5, abs=1e-10)


def test_ground_state_matches_numpy():
    inst = genksr.build_xxz_chain(6, 0.7, True)
    e0, _ = genksr.ground_state(inst)
    assert e0 == pytest.approx(np.linalg.eigvalsh(dense(inst))[0], abs=1e-9)
    assert inst.norm_bound >= abs(np.linalg.eigvalsh(dense(inst))).max() - 1e-12


def test_kqd_curve_is_variational():
    inst = genksr.sample_instances("heis1d", 6, 1, seed=3)[0]
    e0, _ = genksr.ground_state(inst)
    curve = genksr.kqd_exact_curve(inst, 8, exact_propagator=True)
    assert len(curve) == 8
    assert min(curve) >= e0 - 1e-9
    assert abs(curve[-1] - e0) < abs(curve[0] - e0)


def test_shadow_and_skqd_curves():
    inst = genksr.build_heisenberg_1d(4, [1.0, 0.5, 1.5])
    shadow = genksr.kqd_shadow_curve(inst, 4, 2000, seed=1)
    assert len(shadow) == 4 and all(math.isfinite(e) for e in shadow)
    skqd = genksr.skqd_curve(inst, 4, 200, seed=1)
    e0, _ = genksr.ground_state(inst)
    energies = [e for e, _ in skqd]
    assert all(a >= b - 1e-12 for a, b in zip(energies, energies[1:]))
    assert energies[-1] >= e0 - 1e-9


def test_sample_complexity_ratio():
    assert genksr.sample_complexity(0.1, 12, 2) == 100 * genksr.sample_complexity(1.0, 12, 2)


def test_instance_json_round_trip():
    inst = genksr.build_j1j2_2d(4, 1.0, 0.5)
    back = genksr.instance_from_json(inst.to_json())
    assert back.terms == inst.terms
    assert json.loads(inst.to_json())["family"] == "j1j2_2d"


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        genksr.build_heisenberg_1d(4, [1.0])
    with pytest.raises(ValueError):
        genksr.gen_data({"d_train": 3, "d_eval": 2})


def test_pipeline_round_trip(tmp_path):
    cfg = genksr.default_config()
    cfg.update(
        {
            "family": {"name": "heis1d", "n_qubits": 4, "periodic": False},
            "split": {"n_train": 2, "n_test": 1},
            "shots": 50,
            "d_train": 2,
            "d_eval": 3,
            "out": str(tmp_path),
        }
    )
    cfg["model"].update({"d_model": 8, "n_blocks": 1, "n_heads": 2, "mlp_hidden": 8, "gcn_hidden": 8})
    cfg["training"].update({"max_epochs": 2, "batch_size": 16})
    genksr.gen_data(cfg)
    trace = genksr.train(cfg)
    assert len(trace) == 2 and all(math.isfinite(t[2]) for t in trace)
    genksr.generate(cfg)
    rmse = genksr.evaluate(cfg)
    assert rmse["exact_sim"] == 0.0
    assert set(rmse) == {"exact_sim", "classical_shadow", "model"}
    assert "classical_shadow" in genksr.report(cfg)
    assert (tmp_path / "curves_model.csv").exists()
