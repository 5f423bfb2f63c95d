"""CSV series for redrawing the well, stationary-state and perturbation figures.

Each call writes ``<kind>.csv`` (one ``x`` column plus one column per series)
into the output directory and records it in ``manifest.json`` there.
Cells outside a series' region are left empty.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import ChrononError
from .models import QuenchScenario, front_mix, perturbed_state

__all__ = ["PLOT_KINDS", "emit_plot_data", "plot_series"]

PLOT_KINDS = ("fig1a", "fig1b", "fig1c", "fig2")


def plot_series(
    scenario: QuenchScenario,
    kind: str,
    *,
    dt_since: float = 0.5,
    v: float = 1.0,
    epsilon: float = 0.05,
    d: float = 0.1,
) -> tuple[dict[str, np.ndarray], dict]:
    """Series (name -> values on the grid) and scalar annotations for one figure."""
    g = scenario.grid
    x = g.x
    well = scenario.well
    psi0 = scenario.psi0.amplitudes
    psi1 = scenario.psi1.amplitudes
    if kind == "fig1a":
        return {"potential": well.potential(x, "pre"), "abs_psi0": np.abs(psi0)}, {"E0": scenario.E0}
    if kind == "fig1b":
        return {
            "potential": well.potential(x, "post"),
            "abs_psi0": np.abs(psi0),
            "abs_psi1": np.abs(psi1),
        }, {"E0": scenario.E0, "E1": scenario.E1}
    if kind == "fig1c":
        mixed = front_mix(scenario.psi0, scenario.psi1, well.x_A, v, dt_since, "rightward")
        reached = (x >= well.x_A) & (x <= well.x_A + v * dt_since)
        return {
            "psi0_region": np.where(reached, np.nan, np.abs(psi0)),
            "psi1_region": np.where(reached, np.abs(psi1), np.nan),
            "potential": well.potential(x, "post"),
        }, {
            "front_position": well.x_A + v * dt_since,
            "dt_since": dt_since,
            "v": v,
            "norm_sq": mixed.norm_sq,
        }
    if kind == "fig2":
        pert = perturbed_state(scenario.psi0, well.x_A, epsilon, d)
        return {
            "psi0": psi0.real,
            "psi_delta": pert.amplitudes.real,
            "difference": (pert.amplitudes - psi0).real,
        }, {"epsilon": epsilon, "d": d, "x_A": well.x_A}
    raise ChrononError(f"unknown plot kind {kind!r}; expected one of {', '.join(PLOT_KINDS)}")


def _cell(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def emit_plot_data(scenario: QuenchScenario, kind: str, out_dir, **params) -> Path:
    """Write one figure's series and register it in the manifest; returns the CSV path."""
    series, notes = plot_series(scenario, kind, **params)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        names = list(series)
        lines = [",".join(["x", *names])]
        cols = [series[n] for n in names]
        for i, xi in enumerate(scenario.grid.x.tolist()):
            lines.append(",".join([repr(xi), *(_cell(c[i]) for c in cols)]))
        path = out / f"{kind}.csv"
        path.write_text("\n".join(lines) + "\n")
        manifest_path = out / "manifest.json"
        manifest = json.loads(manifest_path.read_text()) if manifest_path.exists() else {}
        manifest[kind] = {
            "file": path.name,
            "x": "x",
            "series": names,
            "annotations": {k: float(v) for k, v in notes.items()},
        }
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise ChrononError(f"cannot write plot data to {out}: {exc}") from None
    return path
