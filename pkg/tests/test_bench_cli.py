import csv
import json

import pytest

from hasimoto import bench_cli
from hasimoto.bench_cli import ExperimentConfig, main
from hasimoto.errors import ConfigError
from hasimoto.frames import from_document

FAST_VERIFY = {
    "verify_backends": [{"name": "grassmann", "n0": 3, "k0": 1}],
    "grids": [65, 129],
    "M": 65,
    "trials": 2,
    "contraction_trials": 50,
}

FAST_EQUIV = {"grids": [33, 65], "M": 33, "T": 0.01, "samples": 2, "gauge_steps": 20}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _report(out, command):
    return json.loads((out / f"{command}.json").read_text())


# ---------------------------------------------------------------- config

@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"M": 4},
    {"grids": []},
    {"T": -1.0},
    {"params": {"alpha": 0.0}},
    {"params": {"a": 0.0, "b": 0.0, "c": 0.0, "lambda": 0.0}},
    {"backend": {"name": "torus"}},
    {"backend": {"name": "grassmann", "n0": 3}},
    {"q_scheme": "chebyshev"},
    {"tolerances": {"nonsense": 1.0}},
    {"seed": -1},
    {"perturb": {"slot": [0, 0]}},
])
def test_config_validation(raw):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(raw)


def test_config_hash_is_stable_and_sensitive():
    a = ExperimentConfig.from_dict({"seed": 1})
    assert a.digest() == ExperimentConfig.from_dict({"seed": 1}).digest()
    assert a.digest() != ExperimentConfig.from_dict({"seed": 2}).digest()


def test_parameter_forms():
    cfg = ExperimentConfig.from_dict({"params": {"a": 1.0, "b": 2.0, "c": 0.5, "lambda": -1.0}})
    p = cfg.flow_params()
    assert (p.a, p.b, p.c, p.lam) == (1.0, 2.0, 0.5, -1.0)
    assert ExperimentConfig().flow_params().source == (0.0, 1.0, 0.0)


# ---------------------------------------------------------------- exit codes

def test_missing_config_file(tmp_path):
    assert main(["verify", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["verify", "--config", str(p), "--out", str(tmp_path)]) == 2


def test_bad_tolerance_scale(tmp_path):
    assert main(["verify", "--tol-scale", "0", "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def explode(cfg, tol_scale=1.0):
        raise FloatingPointError("overflow")

    monkeypatch.setitem(bench_cli.COMMANDS, "verify", explode)
    assert main(["verify", "--out", str(tmp_path)]) == 3


def test_equivalence_requires_hamiltonian_coefficients(tmp_path):
    cfg = {**FAST_EQUIV, "params": {"a": 1.0, "b": 1.0, "c": 0.3, "lambda": 0.0}}
    assert main(["equiv", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == 2


# ---------------------------------------------------------------- commands

def test_verify_passes_and_reports_metadata(tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "--config", _write(tmp_path, FAST_VERIFY), "--out", str(out), "--seed", "11"]) == 0
    rep = _report(out, "verify")
    assert rep["pass"] is True
    assert rep["config"]["seed"] == 11
    assert len(rep["config_hash"]) == 64
    assert {"hasimoto", "numpy", "scipy"} <= set(rep["versions"])
    names = {c["name"] for c in rep["checks"]}
    assert "G31:identity:tsu3" in names
    assert "specialization:grassmann(k0=1)=constk(K=4)" in names
    text = (out / "verify.json").read_text()
    assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"


def test_verify_detects_injected_perturbation(tmp_path):
    cfg = {**FAST_VERIFY, "perturb": {"slot": [0, 0, 0, 1], "size": 1e-6}}
    out = tmp_path / "p"
    assert main(["verify", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 1
    failed = {c["name"] for c in _report(out, "verify")["checks"] if not c["pass"]}
    assert "perturbed:G31:tsu3" in failed


def test_tolerance_scale_is_recorded(tmp_path):
    out = tmp_path / "s"
    main(["verify", "--config", _write(tmp_path, FAST_VERIFY), "--out", str(out), "--tol-scale", "10"])
    rep = _report(out, "verify")
    assert rep["tolerances"]["identity"] == pytest.approx(1e-9)


def test_equiv_with_zero_data_has_zero_discrepancy(tmp_path):
    cfg = {**FAST_EQUIV, "initial": {"kind": "zero"}}
    out = tmp_path / "z"
    assert main(["equiv", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    for run in _report(out, "equiv")["data"]["runs"]:
        assert run["discrepancy_abs"] == 0.0
        assert run["discrepancy_phase_aligned"] == 0.0


def test_equiv_parallel_workers_match_serial(tmp_path):
    serial = bench_cli.cmd_equiv(ExperimentConfig.from_dict(FAST_EQUIV)).data["runs"]
    parallel = bench_cli.cmd_equiv(ExperimentConfig.from_dict({**FAST_EQUIV, "workers": 2})).data["runs"]
    assert serial == parallel


def test_run_is_deterministic_and_snapshots_roundtrip(tmp_path):
    cfg = _write(tmp_path, {"M": 33, "T": 0.01, "samples": 2})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg, "--out", str(a)]) == 0
    assert main(["run", "--config", cfg, "--out", str(b)]) == 0
    for name in ("timeseries.csv", "snapshots.json", "run.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = list(csv.reader((a / "timeseries.csv").open()))
    assert rows[0] == ["t", "energy", "mass", "constraint"]
    assert len(rows) == 4
    snaps = json.loads((a / "snapshots.json").read_text())
    curve, prof = from_document(snaps[-1])
    assert curve.M == 33 and prof.n == 1


def test_run_transformed_system(tmp_path):
    cfg = _write(tmp_path, {"M": 33, "T": 0.01, "samples": 1, "system": "q",
                            "backend": {"name": "grassmann", "n0": 3, "k0": 1}})
    out = tmp_path / "q"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    rows = list(csv.reader((out / "timeseries.csv").open()))
    assert rows[1][1] == "" and float(rows[1][2]) > 0


def test_convergence(tmp_path):
    cfg = _write(tmp_path, {"backend": {"name": "grassmann", "n0": 3, "k0": 1}, "grids": [129, 257]})
    out = tmp_path / "c"
    assert main(["convergence", "--config", cfg, "--out", str(out)]) == 0
    data = _report(out, "convergence")["data"]
    assert {"roundtrip", "block_identity", "transported_s_deviation"} <= set(data)
