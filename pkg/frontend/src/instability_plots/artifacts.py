"""Loading and validation of solver artifacts.

Each figure family reads one CSV table plus one JSON summary, as documented in
the solver's docs/formats.md.  Validation is structural (required columns and
keys); offending columns are named in the error.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path


class ArtifactError(ValueError):
    pass


FAMILY_FILES = {
    "benchmark": ("benchmark.csv", "benchmark.json"),
    "equilibrium": ("equilibrium.csv", "equilibrium.json"),
    "simulation": ("sim_checkpoints.csv", "sim.json"),
    "sweep": ("sweep.csv", "sweep.json"),
}

REQUIRED_COLUMNS = {
    "benchmark": ["x", "v", "control", "v_minus_identity"],
    "equilibrium": ["x", "a_star", "b_star", "v_a", "v_b"],
    "simulation": ["t", "mean", "mean_abs_dist", "frac_converged",
                   "mean_increment", "se"],
    "sweep": ["r2c_a", "x_a0", "x_b0", "regime", "stable_lo", "stable_hi",
              "sso_ok", "containment_ok"],
}

REQUIRED_KEYS = {
    "benchmark": ["params", "threshold", "boundary_mode"],
    "equilibrium": ["params", "regime", "stable_lo", "stable_hi", "pass"],
    "simulation": ["config", "region", "stable_lo", "stable_hi",
                   "containment_ok"],
    "sweep": ["params_b", "axis", "theta"],
}


@dataclass
class Artifact:
    family: str
    table: dict[str, list]       # column name -> values (floats where numeric)
    summary: dict
    source: Path


def _resolve(family: str, inputs: list[Path]) -> tuple[Path, Path]:
    csv_name, json_name = FAMILY_FILES[family]
    if len(inputs) == 1 and inputs[0].is_dir():
        return inputs[0] / csv_name, inputs[0] / json_name
    csv_path = json_path = None
    for p in inputs:
        if p.suffix == ".csv":
            csv_path = p
        elif p.suffix == ".json":
            json_path = p
    if csv_path is None or json_path is None:
        raise ArtifactError(
            f"family {family!r} needs {csv_name} and {json_name} "
            f"(or a directory containing them); got {[str(p) for p in inputs]}"
        )
    return csv_path, json_path


def load(family: str, inputs: list[Path]) -> Artifact:
    if family not in FAMILY_FILES:
        raise ArtifactError(f"unknown family {family!r}")
    csv_path, json_path = _resolve(family, inputs)
    for p in (csv_path, json_path):
        if not p.exists():
            raise ArtifactError(f"input file missing: {p}")

    with open(csv_path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS[family]:
            if col not in header:
                raise ArtifactError(
                    f"{csv_path}: missing required column {col!r}"
                )
        rows = list(reader)
    table: dict[str, list] = {col: [] for col in header}
    for row in rows:
        for col in header:
            raw = row[col]
            try:
                table[col].append(float(raw))
            except (TypeError, ValueError):
                table[col].append(raw)

    try:
        summary = json.loads(Path(json_path).read_text())
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{json_path}: invalid JSON: {exc}") from exc
    for key in REQUIRED_KEYS[family]:
        if key not in summary:
            raise ArtifactError(f"{json_path}: missing required key {key!r}")
    return Artifact(family=family, table=table, summary=summary,
                    source=csv_path.parent)


def load_style(path: Path | None) -> dict[str, str]:
    if path is None:
        return {}
    out: dict[str, str] = {}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ArtifactError(f"{path}: line {ln} is not key=value: {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out
