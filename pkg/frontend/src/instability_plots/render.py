"""Deterministic figure rendering for the four artifact families.

Output is byte-stable across reruns for identical inputs and style: a fixed
svg.hashsalt, no embedded dates, and a pinned creator string.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .artifacts import Artifact, ArtifactError, load, load_style  # noqa: E402

_HASHSALT = "instability-plots"

COLOR_A = "#1f5fa8"
COLOR_B = "#c23b22"
COLOR_NEUTRAL = "#555555"
COLOR_SHADE = "#d9e4f1"


@dataclass
class PlotSpec:
    family: str
    inputs: list[Path]
    output: Path
    style: dict[str, str] = field(default_factory=dict)
    overlays: list[Path] = field(default_factory=list)


def _flag(style: dict[str, str], key: str, default: bool) -> bool:
    raw = style.get(key)
    if raw is None:
        return default
    return raw.lower() in ("1", "true", "yes", "on")


def _footer(fig, summary: dict, family: str) -> None:
    if family in ("benchmark",):
        p = summary["params"]
        txt = (f"r={p['r']:g} c={p['c']:g} side={p['side']} "
               f"n={p['n']} domain_hi={p['domain_hi']:g}")
    elif family == "equilibrium":
        p = summary["params"]
        txt = (f"ra={p['ra']:g} ca={p['ca']:g} rb={p['rb']:g} cb={p['cb']:g} "
               f"n={p['n']} regime={summary['regime']}")
    elif family == "simulation":
        c = summary["config"]
        txt = (f"x0={c['x0']:g} dt={c['dt']:g} t_max={c['t_max']:g} "
               f"paths={c['n_paths']} seed={c['seed']}")
    else:
        p = summary["params_b"]
        theta = summary.get("theta")
        txt = (f"rb={p['rb']:g} cb={p['cb']:g} "
               f"theta={'n/a' if theta is None else format(theta, '.4f')}")
    fig.text(0.99, 0.01, txt, ha="right", va="bottom",
             fontsize=7, color=COLOR_NEUTRAL)


def _render_benchmark(art: Artifact, spec: PlotSpec, fig, axes) -> None:
    t = art.table
    ax_v, ax_a = axes
    ax_v.plot(t["x"], t["v"], color=COLOR_A, label="value")
    if _flag(spec.style, "identity_line", True):
        side = art.summary["params"]["side"]
        ident = t["x"] if side == "a" else [1.0 - x for x in t["x"]]
        ax_v.plot(t["x"], ident, color=COLOR_NEUTRAL, linewidth=0.8,
                  linestyle="--", label="identity")
    thr = art.summary["threshold"]
    for ax in (ax_v, ax_a):
        ax.axvline(thr, color=COLOR_NEUTRAL, linewidth=0.8, linestyle=":")
    for extra in spec.overlays:
        other = load("benchmark", [extra])
        ax_v.plot(other.table["x"], other.table["v"], color=COLOR_A,
                  linewidth=0.7, alpha=0.5)
        ax_a.plot(other.table["x"], other.table["control"], color=COLOR_A,
                  linewidth=0.7, alpha=0.5)
    ax_a.plot(t["x"], t["control"], color=COLOR_A, label="control")
    ax_v.set_ylabel("value")
    ax_a.set_ylabel("control")
    ax_a.set_xlabel("x")
    ax_v.legend(loc="best", fontsize=8)


def _render_equilibrium(art: Artifact, spec: PlotSpec, fig, axes) -> None:
    t = art.table
    ax_s, ax_v = axes
    lo, hi = art.summary["stable_lo"], art.summary["stable_hi"]
    if _flag(spec.style, "shade", True):
        for ax in (ax_s, ax_v):
            if lo < hi:
                ax.axvspan(lo, hi, color=COLOR_SHADE, zorder=0)
            else:
                ax.axvline(lo, color=COLOR_SHADE, linewidth=3, zorder=0)
    ax_s.plot(t["x"], t["a_star"], color=COLOR_A, label="a*")
    ax_s.plot(t["x"], t["b_star"], color=COLOR_B, label="b*")
    ax_v.plot(t["x"], t["v_a"], color=COLOR_A, label="v_a")
    ax_v.plot(t["x"], t["v_b"], color=COLOR_B, label="v_b")
    if _flag(spec.style, "identity_line", False):
        ax_v.plot(t["x"], t["x"], color=COLOR_NEUTRAL, linewidth=0.8,
                  linestyle="--")
    ax_s.set_ylabel("strategy")
    ax_v.set_ylabel("value")
    ax_v.set_xlabel("x")
    ax_s.legend(loc="best", fontsize=8)
    ax_v.legend(loc="best", fontsize=8)


def _render_simulation(art: Artifact, spec: PlotSpec, fig, axes) -> None:
    t = art.table
    ax_d, ax_f = axes
    ax_d.plot(t["t"], t["mean_abs_dist"], color=COLOR_A, marker=".",
              markersize=3)
    ax_d.set_ylabel("mean distance to stable set")
    ax_d.set_xscale("log")
    ax_f.plot(t["t"], t["frac_converged"], color=COLOR_B, marker=".",
              markersize=3)
    ax_f.set_ylabel("fraction converged")
    ax_f.set_ylim(-0.02, 1.02)
    ax_f.set_xscale("log")
    ax_f.set_xlabel("t")


def _render_sweep(art: Artifact, spec: PlotSpec, fig, axes) -> None:
    t = art.table
    (ax,) = axes
    ax.plot(t["r2c_a"], t["x_a0"], color=COLOR_A, marker=".", label="x_a0")
    ax.plot(t["r2c_a"], t["x_b0"], color=COLOR_B, marker=".", label="x_b0")
    ax.fill_between(t["r2c_a"], t["stable_lo"], t["stable_hi"],
                    color=COLOR_SHADE, label="stable set")
    theta = art.summary.get("theta")
    if theta is not None:
        ax.axvline(theta, color=COLOR_NEUTRAL, linewidth=0.8, linestyle=":")
    ax.set_xscale("log")
    ax.set_xlabel("r_a^2 c_a")
    ax.set_ylabel("x")
    ax.legend(loc="best", fontsize=8)


_RENDERERS = {
    "benchmark": (_render_benchmark, 2),
    "equilibrium": (_render_equilibrium, 2),
    "simulation": (_render_simulation, 2),
    "sweep": (_render_sweep, 1),
}


def render(spec: PlotSpec) -> Path:
    art = load(spec.family, spec.inputs)
    fn, n_axes = _RENDERERS[spec.family]
    with plt.rc_context({"svg.hashsalt": _HASHSALT}):
        fig, axes = plt.subplots(
            n_axes, 1, figsize=(6.4, 4.8), sharex=(n_axes > 1)
        )
        if n_axes == 1:
            axes = (axes,)
        try:
            fn(art, spec, fig, axes)
            title = spec.style.get("title")
            if title:
                fig.suptitle(title)
            _footer(fig, art.summary, spec.family)
            spec.output.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(
                spec.output,
                metadata=_stable_metadata(spec.output),
            )
        finally:
            plt.close(fig)
    return spec.output


def _stable_metadata(output: Path) -> dict:
    if output.suffix.lower() == ".svg":
        return {"Date": None, "Creator": _HASHSALT}
    if output.suffix.lower() == ".png":
        return {"Software": _HASHSALT}
    return {}
