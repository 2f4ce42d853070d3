import math
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

import mopx

ROOT = Path(__file__).resolve().parents[2]


def test_schedule():
    s = mopx.make_schedule("sh", 30, 300)
    assert s["R"] == 5
    assert s["pulls_per_round"] == [60] * 5
    assert s["keep_counts"] == [15, 8, 4, 2, 1]


def test_gaps_abcd():
    mu = np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.6], [0.4, 0.4]])
    assert mopx.pareto_front(mu) == [0, 1, 2]
    gaps = [e["gap"] for e in mopx.pareto_gaps(mu)]
    assert gaps == pytest.approx([0.4, 0.4, 0.2, 0.2], abs=1e-12)


def test_constrained_example():
    mu = np.array([[0.8, 0.6], [0.9, 0.4], [0.6, 0.7]])
    g = mopx.constrained_gaps(mu, 0.5)
    assert g[0]["class"] == "optimal"
    assert mopx.hardness(mu, 0.5) == pytest.approx(100.0)


def test_hypervolume():
    pts = np.array([[0.8, 0.2], [0.5, 0.5], [0.2, 0.8]])
    assert mopx.hypervolume(pts, np.zeros(2)) == pytest.approx(0.37)


def test_errors_map_to_python():
    with pytest.raises(mopx.ConfigError):
        mopx.make_schedule("sh", 1, 10)
    with pytest.raises(mopx.Error):
        mopx.make_schedule("bogus", 4, 10)


def test_zero_noise_runs():
    mu = np.array([[0.8, 0.6], [0.9, 0.4], [0.6, 0.7], [0.3, 0.9]])
    r = mopx.run_algorithm(mu, 0.0, budget=64, tau=0.5, seed=3)
    assert r["selected"] == [0]
    assert r["pulls_used"] <= 64
    p = mopx.run_algorithm(mu, 0.0, algorithm="genpsi", mode="pareto", scheduler="sr", budget=64)
    assert sorted(p["selected"]) == mopx.pareto_front(mu)


def test_pca_and_design():
    rng = np.random.default_rng(0)
    emb = rng.normal(size=(10, 6))
    feats, basis, mean, var = mopx.pca(emb, 3)
    assert feats.shape == (10, 3)
    assert np.allclose(basis.T @ basis, np.eye(3), atol=1e-10)
    w, obj, d_act = mopx.solve_g_optimal(feats, 0.1)
    assert d_act == 3
    assert 3 - 1e-9 <= obj <= 3.3 + 1e-9
    assert w.sum() == pytest.approx(1.0)


def test_theorem_bound():
    assert mopx.theorem_bound(8, 2, 1.0, 270, 25.0) == pytest.approx(144 * math.exp(-0.075), abs=1e-9)


def test_golden_through_python():
    raw, summary, failures = mopx.run_experiment(str(ROOT / "tests" / "golden" / "config.json"))
    assert failures == 0
    assert summary == (ROOT / "tests" / "golden" / "summary.csv").read_text()


@pytest.mark.skipif("MOPX_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_schedule():
    out = subprocess.run([os.environ["MOPX_CLI"], "schedule", "--k", "30", "--budget", "300"],
                         capture_output=True, text=True, check=True)
    assert '"R": 5' in out.stdout
