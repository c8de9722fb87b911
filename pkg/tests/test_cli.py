import json
import os
import subprocess
import sys

import numpy as np
import pytest

from dismetrics import load_posteriors
from dismetrics.cli import main


def run(*args, env=None):
    full_env = dict(os.environ, **(env or {}))
    return subprocess.run([sys.executable, "-m", "dismetrics", *map(str, args)],
                          capture_output=True, text=True, env=full_env)


@pytest.fixture(scope="module")
def perfect(tmp_path_factory):
    d = tmp_path_factory.mktemp("perfect")
    assert main(["synth", "--preset", "perfect", "--seed", "7", "--out", str(d)]) == 0
    return d


def test_synth_writes_world(perfect):
    assert (perfect / "posteriors.bin").exists() and (perfect / "factors.csv").exists()


def test_synth_is_deterministic(perfect, tmp_path):
    assert main(["synth", "--preset", "perfect", "--seed", "7", "--out", str(tmp_path)]) == 0
    for name in ("posteriors.bin", "factors.csv"):
        assert (tmp_path / name).read_bytes() == (perfect / name).read_bytes()


def test_synth_noise_only(tmp_path):
    assert main(["synth", "--preset", "noise-only", "--format", "csv", "--out", str(tmp_path)]) == 0
    assert np.all(load_posteriors(tmp_path / "posteriors.csv").stds == 1.0)


def test_synth_unknown_preset(tmp_path):
    assert main(["synth", "--preset", "spiral", "--out", str(tmp_path)]) == 3


def test_evaluate_perfect_world(perfect, tmp_path):
    code = main(["evaluate", "--posteriors", str(perfect / "posteriors.bin"),
                 "--factors", str(perfect / "factors.csv"), "--out", str(tmp_path), "--quiet"])
    assert code == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["rmig_normalized"]["per_factor"] == pytest.approx([1.0] * 3, abs=0.02)
    for name in ("report.csv", "manifest.json", "informativeness_bars.csv", "misjed_heatmap.csv"):
        assert (tmp_path / name).exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["bins"] == 100


def test_evaluate_without_factors(perfect, tmp_path):
    code = main(["evaluate", "--posteriors", str(perfect / "posteriors.bin"),
                 "--bins", "100", "--range", "-4", "4", "--out", str(tmp_path), "--quiet"])
    assert code == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["rmig"] == {"skipped": "missing factors"}
    assert rep["informativeness"] and rep["misjed"] and rep["sepin_at_k"]


def test_evaluate_bad_grid(perfect, tmp_path):
    r = run("evaluate", "--posteriors", perfect / "posteriors.bin", "--bins", 1, "--out", tmp_path)
    assert r.returncode == 3
    assert "DegenerateGrid" in r.stderr


def test_evaluate_bad_input(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("mu_0,sigma_0\n0,0\n")
    assert main(["evaluate", "--posteriors", str(p), "--out", str(tmp_path)]) == 2
    assert main(["evaluate", "--posteriors", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 2


def test_oracle_check_passes():
    r = run("oracle-check", "--preset", "perfect", "--seeds", 2)
    assert r.returncode == 0, r.stdout + r.stderr
    assert "PASS" in r.stdout


def test_oracle_check_negative_control():
    r = run("oracle-check", "--preset", "mixed", "--seeds", 1, "--corrupt-range", -3, 5)
    assert r.returncode == 1
    assert "FAIL" in r.stdout


def test_oracle_check_too_large():
    r = run("oracle-check", "--preset", "perfect", "--cardinalities", "200,200,200")
    assert r.returncode == 3
