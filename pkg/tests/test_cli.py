"""Command-line interface: artifacts, determinism, exit codes."""

import json
import os

import numpy as np
import pytest

from spiderdiff.cli import run


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_simulate_writes_artifacts_and_manifest(tmp_path):
    out = str(tmp_path / "run")
    code = run(["simulate", "--paths", "20", "--n-freeze", "2",
                "--n-fine", "8", "--seed", "3", "--out", out])
    assert code == 0
    manifest = json.loads(read(os.path.join(out, "manifest.json")))
    assert manifest["command"] == "simulate"
    assert manifest["config"]["seed"] == 3
    for name in manifest["artifacts"]:
        assert os.path.exists(os.path.join(out, name))
    assert "run.log" not in manifest["artifacts"]
    assert os.path.exists(os.path.join(out, "run.log"))


def test_simulate_is_byte_deterministic(tmp_path):
    args = ["simulate", "--paths", "15", "--n-freeze", "2", "--n-fine", "8",
            "--seed", "11"]
    out1 = str(tmp_path / "same")
    assert run(args + ["--out", out1]) == 0
    blobs = {n: read(os.path.join(out1, n))
             for n in json.loads(read(os.path.join(out1, "manifest.json")))["artifacts"]}
    # rerun into the same directory name elsewhere
    os.rename(out1, str(tmp_path / "first"))
    assert run(args + ["--out", out1]) == 0
    for n, blob in blobs.items():
        assert read(os.path.join(out1, n)) == blob, n


def test_config_file_and_flag_override(tmp_path):
    cfgfile = tmp_path / "c.json"
    cfgfile.write_text(json.dumps({"paths": 12, "seed": 4, "n_freeze": 2,
                                   "n_fine": 4}))
    out = str(tmp_path / "o")
    code = run(["simulate", "--config", str(cfgfile), "--seed", "9",
                "--out", out])
    assert code == 0
    manifest = json.loads(read(os.path.join(out, "manifest.json")))
    assert manifest["config"]["paths"] == 12
    assert manifest["config"]["seed"] == 9     # flag beats config file


def test_unknown_config_key_is_rejected(tmp_path):
    cfgfile = tmp_path / "c.json"
    cfgfile.write_text(json.dumps({"pathz": 10}))
    assert run(["simulate", "--config", str(cfgfile),
                "--out", str(tmp_path / "o")]) == 1


def test_malformed_config_is_rejected(tmp_path):
    cfgfile = tmp_path / "c.json"
    cfgfile.write_text("{not json")
    assert run(["simulate", "--config", str(cfgfile),
                "--out", str(tmp_path / "o")]) == 1


def test_invalid_parameter_exits_one(tmp_path):
    assert run(["simulate", "--n-freeze", "0",
                "--out", str(tmp_path / "o")]) == 1


def test_kernel_subcommand_masses_sum_to_one(tmp_path):
    out = str(tmp_path / "k")
    code = run(["kernel", "--x", "0.0", "--t", "0.5", "--ny", "10",
                "--nl", "10", "--out", out])
    assert code == 0
    rep = json.loads(read(os.path.join(out, "masses.json")))
    assert rep["total_mass"] == pytest.approx(1.0, abs=1e-4)
    assert rep["atom_mass"] == 0.0
    with open(os.path.join(out, "kernel.csv")) as fh:
        header = fh.readline().strip()
    assert header == "y,branch,ell,density"


def test_kernel_from_interior_has_atom(tmp_path):
    out = str(tmp_path / "k2")
    code = run(["kernel", "--x", "1.0", "--branch", "1", "--t", "1.0",
                "--ny", "8", "--nl", "8", "--out", out])
    assert code == 0
    rep = json.loads(read(os.path.join(out, "masses.json")))
    assert rep["atom_mass"] > 0.3
    assert rep["total_mass"] == pytest.approx(1.0, abs=1e-3)


def test_pde_subcommand(tmp_path):
    out = str(tmp_path / "p")
    code = run(["pde", "--M-x", "24", "--M-l", "8", "--M-t", "12",
                "--X-max", "4", "--L-max", "2", "--T", "0.5", "--out", out])
    assert code == 0
    rep = json.loads(read(os.path.join(out, "report.json")))
    assert "compat_residual" in rep and "trace_t0_l0" in rep
    u = np.genfromtxt(os.path.join(out, "solution_t0.csv"), delimiter=",",
                      names=True)
    assert len(u) == 2 * 25 * 9
    assert np.isfinite(u["u"]).all()


def test_skew_subcommand(tmp_path):
    out = str(tmp_path / "s")
    code = run(["skew", "--alpha", "0.7", "--paths", "10", "--n-freeze", "2",
                "--n-fine", "8", "--out", out])
    assert code == 0
    rep = json.loads(read(os.path.join(out, "summary.json")))
    assert rep["beta"] == pytest.approx(0.4, abs=1e-12)
    assert os.path.exists(os.path.join(out, "skew_paths.csv"))


def test_verify_skorokhod_suite(tmp_path):
    out = str(tmp_path / "v")
    code = run(["verify", "--suite", "skorokhod", "--paths", "200",
                "--out", out])
    assert code == 0
    rep = json.loads(read(os.path.join(out, "report.json")))
    assert rep["ok"]
    assert rep["max_monotone_defect"] == 0.0


def test_verify_martingale_suite_exit_codes(tmp_path):
    out = str(tmp_path / "vm")
    code = run(["verify", "--suite", "martingale", "--paths", "2000",
                "--n-freeze", "8", "--n-fine", "32", "--out", out])
    rep = json.loads(read(os.path.join(out, "report.json")))
    assert code == (0 if rep["ok"] else 3)
    assert rep["rows"]


def test_verify_unknown_suite_exits_one(tmp_path):
    assert run(["verify", "--suite", "nope",
                "--out", str(tmp_path / "o")]) == 1


def test_compare_fk_subcommand(tmp_path):
    out = str(tmp_path / "fk")
    code = run(["compare-fk", "--M-x", "40", "--M-l", "16", "--M-t", "20",
                "--X-max", "4", "--L-max", "2", "--T", "0.5",
                "--x0", "0.5", "--l0", "0.1", "--n-freeze", "8",
                "--n-fine", "16", "--paths", "2000", "--out", out])
    rep = json.loads(read(os.path.join(out, "report.json")))
    assert code == (0 if rep["ok"] else 3)
    assert rep["discrepancy"] == pytest.approx(
        abs(rep["pde_value"] - rep["mc_mean"]), abs=1e-12)
