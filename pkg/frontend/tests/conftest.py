import csv
import json
from pathlib import Path

import pytest


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


@pytest.fixture
def benchmark_dir(tmp_path):
    """A small synthetic benchmark artifact matching the documented schema."""
    d = tmp_path / "benchmark"
    d.mkdir()
    xs = [i / 20 for i in range(21)]
    thr = 0.3
    rows = []
    for x in xs:
        w = max(thr - x, 0.0) ** 4
        rows.append([x, x + w, 2.0 * max(thr - x, 0.0) ** 2, w])
    _write_csv(d / "benchmark.csv", ["x", "v", "control", "v_minus_identity"],
               rows)
    (d / "benchmark.json").write_text(json.dumps({
        "params": {"r": 7.0, "c": 15.0, "side": "a", "domain_hi": 1.0, "n": 21},
        "threshold": thr,
        "boundary_mode": "smooth_pasting",
        "shape": "convex",
        "v0": rows[0][1],
        "residual": 1e-9,
    }))
    return d


@pytest.fixture
def equilibrium_dir(tmp_path):
    d = tmp_path / "equilibrium"
    d.mkdir()
    xs = [i / 20 for i in range(21)]
    rows = [[x, max(0.3 - x, 0.0), max(x - 0.7, 0.0), min(x + 0.05, 1.0),
             min(1.05 - x, 1.0)] for x in xs]
    _write_csv(d / "equilibrium.csv", ["x", "a_star", "b_star", "v_a", "v_b"],
               rows)
    (d / "equilibrium.json").write_text(json.dumps({
        "params": {"ra": 7.0, "ca": 15.0, "rb": 7.0, "cb": 15.0, "n": 21},
        "regime": "accommodating",
        "xbar": None,
        "x_a0": 0.3, "x_b0": 0.7,
        "stable_lo": 0.3, "stable_hi": 0.7,
        "kinks": {"a": None, "b": None, "convex_a": None, "convex_b": None},
        "verification": {},
        "pass": True,
    }))
    return d


@pytest.fixture
def simulation_dir(tmp_path):
    d = tmp_path / "simulation"
    d.mkdir()
    rows = [[0.1 * (k + 1), 0.2 + 0.01 * k, 0.3 - 0.01 * k,
             min(0.05 * k, 1.0), 0.001, 0.0005] for k in range(10)]
    _write_csv(d / "sim_checkpoints.csv",
               ["t", "mean", "mean_abs_dist", "frac_converged",
                "mean_increment", "se"], rows)
    (d / "sim.json").write_text(json.dumps({
        "config": {"x0": 0.1, "dt": 1e-4, "t_max": 1.0, "n_paths": 100,
                   "seed": 42, "freeze_eps": 1e-8},
        "region": "a_side",
        "stable_lo": 0.5, "stable_hi": 0.5,
        "terminal": {"mean": 0.45, "std": 0.05, "min": 0.2, "max": 0.5,
                     "convergence_fraction": 0.9, "frozen_fraction": 0.8},
        "containment_ok": True,
        "submartingale_ok": True,
    }))
    return d


@pytest.fixture
def sweep_dir(tmp_path):
    d = tmp_path / "sweep"
    d.mkdir()
    rows = [
        [200.0, 0.45, 0.71, "accommodating", 0.45, 0.71, "", ""],
        [100.0, 0.56, 0.71, "accommodating", 0.56, 0.71, "true", "true"],
        [30.0, 0.84, 0.71, "deterrence", 0.71, 0.84, "true", ""],
    ]
    _write_csv(d / "sweep.csv",
               ["r2c_a", "x_a0", "x_b0", "regime", "stable_lo", "stable_hi",
                "sso_ok", "containment_ok"], rows)
    (d / "sweep.json").write_text(json.dumps({
        "params_b": {"rb": 7.0, "cb": 15.0},
        "axis": [200.0, 100.0, 30.0],
        "theta": 50.3767,
        "theta_reason": None,
        "regime_flips": 1,
        "all_sso_ok": True,
        "all_containment_ok": True,
    }))
    return d
