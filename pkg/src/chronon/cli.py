"""``chronon`` command line.

Every subcommand reads one run configuration (``--config``, a preset, and
``CHRONON_*`` environment overrides), validates it for that subcommand, runs,
and writes its outputs under ``--out``. Exit status: 0 success, 1 invalid
input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    causality_check,
    locate_front_points,
    norm_check,
    normalization_audit,
    planck_limits,
    residual_check,
)
from .config import PRESETS, RunConfig, load_config
from .core import (
    ChrononError,
    NoBoundStateError,
    ValidationError,
    Wavefunction,
    build_hamiltonian,
    evolve,
    solve_stationary,
    wavefunction_to_csv,
)
from .experiments import (
    SignalingConfig,
    estimate_v_bound,
    run_detector_scan,
    run_probability_protocol,
    run_signaling,
)
from .models import CausalityError, DiscreteDelay
from .plotdata import emit_plot_data

COMMANDS = ("eigen", "evolve", "paradox", "signal", "experiment", "scan", "vbound", "limits")
MODEL_KINDS = ("instantaneous", "front", "local", "delay")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _flat_csv(obj, prefix="") -> list[tuple[str, str]]:
    rows = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            rows += _flat_csv(obj[k], f"{prefix}{k}.")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            rows += _flat_csv(v, f"{prefix}{i}.")
    else:
        rows.append((prefix[:-1], "" if obj is None else (repr(obj) if isinstance(obj, float) else str(obj))))
    return rows


class _Writer:
    def __init__(self, out: Path, formats: str):
        self.out = out
        self.formats = formats
        self.written: list[Path] = []

    def _put(self, name: str, text: str) -> None:
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.written.append(path)

    def csv(self, name: str, text: str) -> None:
        if self.formats in ("csv", "both"):
            self._put(name, text)

    def report(self, name: str, payload: dict) -> None:
        """A JSON report; with csv-only output it is flattened to key,value rows."""
        if self.formats in ("json", "both"):
            self._put(f"{name}.json", dumps(payload))
        if self.formats == "csv":
            rows = _flat_csv(_clean(payload))
            self._put(f"{name}.csv", "key,value\n" + "".join(f"{k},{v}\n" for k, v in rows))


def _envelope(cfg: RunConfig, seed: int | None, command: str, body: dict) -> dict:
    return {"command": command, "config": cfg.to_dict(), "seed": seed, **body}


# -- subcommands -----------------------------------------------------------


def cmd_eigen(cfg: RunConfig, seed: int, w: _Writer, args) -> None:
    well = cfg.well_config()
    grid = cfg.grid_for(well)
    rows = ["phase,level,energy,residual"]
    columns: dict[str, np.ndarray] = {}
    levels = []
    for phase in ("pre", "post"):
        h = build_hamiltonian(grid, well, phase)
        for k in range(1, cfg.analysis.levels + 1):
            try:
                E, psi = solve_stationary(h, k)
            except NoBoundStateError:
                break
            r = h.residual(psi, E)
            rows.append(f"{phase},{k},{E!r},{r!r}")
            columns[f"{phase}_{k}"] = psi.amplitudes.real
            levels.append({"phase": phase, "level": k, "energy": E, "residual": r})
    buf = io.StringIO()
    names = list(columns)
    buf.write(",".join(["x", *names]) + "\n")
    for i, x in enumerate(grid.x.tolist()):
        buf.write(",".join([repr(x), *(repr(float(columns[n][i])) for n in names)]) + "\n")
    w.csv("eigen.csv", "\n".join(rows) + "\n")
    w.csv("eigen_states.csv", buf.getvalue())
    w.report("eigen", _envelope(cfg, None, "eigen", {"levels": levels}))
    if w.formats in ("csv", "both") and levels:
        scn = cfg.scenario("instantaneous")
        for kind in ("fig1a", "fig1b"):
            emit_plot_data(scn, kind, w.out / "plots")


def cmd_evolve(cfg: RunConfig, seed: int, w: _Writer, args) -> None:
    ev = cfg.evolution
    well = cfg.well_config()
    grid = cfg.grid_for(well)
    h0 = build_hamiltonian(grid, well, "pre")
    _, psi = solve_stationary(h0, cfg.well.level)
    h = h0 if ev.hamiltonian == "pre" else build_hamiltonian(grid, well, "post")
    psi = psi.at(well.t1)
    rows = ["step,time,norm_sq,defect,energy"]

    def record(step: int, p: Wavefunction) -> None:
        n = p.norm_sq
        rows.append(f"{step},{p.timestamp!r},{n!r},{abs(n - 1.0)!r},{h.expectation(p)!r}")
        w.csv(f"snapshots/psi_{step:08d}.csv", wavefunction_to_csv(p))

    record(0, psi)
    done = 0
    while done < ev.steps:
        n = min(ev.snapshot_every, ev.steps - done)
        psi = evolve(psi, h, ev.dt, n)
        done += n
        record(done, psi)
    w.csv("evolve.csv", "\n".join(rows) + "\n")
    w.report("evolve", _envelope(cfg, None, "evolve", {"final_norm_sq": psi.norm_sq, "steps": ev.steps}))


def cmd_paradox(cfg: RunConfig, seed: int, w: _Writer, args) -> None:
    kind = args.model or cfg.model.kind
    base = cfg.scenario("instantaneous")
    well = base.well
    fp = locate_front_points(
        base.psi0, base.psi1, cfg.detector_width, cfg.analysis.n_assumed,
        cfg.analysis.k_sigma, x_A=well.x_A, L=well.L,
    )
    horizon = fp.L_prime if not fp.empty else 0.0
    scn = base.with_model(cfg.make_model(kind, horizon if horizon > 0 else None))
    times = [well.t1 + t for t in cfg.analysis.times]
    audit = normalization_audit(scn, times)
    dt_probe = cfg.analysis.dt_probe if cfg.analysis.dt_probe > 0 else None
    c_ok, c_info = causality_check(scn, times, horizon)
    n_ok, _ = norm_check(scn, times)
    r_ok, r_info = residual_check(scn, times, dt_probe)
    w.csv("norm_audit.csv", audit.to_csv())
    w.csv("front_points.csv", fp.to_csv())
    w.report(
        "paradox",
        _envelope(
            cfg, None, "paradox",
            {
                "model": scn.model.name,
                "max_defect": audit.max_defect,
                "norm_audit": {"times": audit.times, "norm_sq": audit.norms},
                "front_points": fp.to_dict(),
                "residual": r_info,
                "causality": c_info,
                "verdicts": {
                    "causality": "PASS" if c_ok else "FAIL",
                    "norm": "PASS" if n_ok else "FAIL",
                    "residual": "PASS" if r_ok else "FAIL",
                },
            },
        ),
    )
    if w.formats in ("csv", "both"):
        a = cfg.analysis
        emit_plot_data(base, "fig1c", w.out / "plots", dt_since=a.fig_dt_since, v=cfg.model.v)
        emit_plot_data(base, "fig2", w.out / "plots", epsilon=cfg.model.epsilon, d=a.fig_d)


def cmd_signal(cfg: RunConfig, seed: int, w: _Writer, args) -> None:
    scn = cfg.scenario()
    s = cfg.signal
    sc = SignalingConfig(
        scn, cfg.experiment.l, cfg.experiment_region(), s.n, s.delta_t, s.bit, cfg.experiment.alpha
    )
    res = run_signaling(sc, seed)
    w.report("signal", _envelope(cfg, seed, "signal", {"model": scn.model.name, **res.to_dict()}))


def cmd_experiment(cfg: RunConfig, seed: int, w: _Writer, args) -> None:
    scn = cfg.scenario()
    e = cfg.experiment
    rep = run_probability_protocol(
        scn, cfg.experiment_region(), e.l, e.t_x, e.t_y, e.n_per_phase, seed,
        alpha=e.alpha, config=cfg.to_dict(),
    )
    w.report("experiment", {"command": "experiment", "model": scn.model.name, **rep.to_dict()})


def cmd_scan(cfg: RunConfig, seed: int, w: _Writer, args) -> None:
    scn = cfg.scenario()
    s = cfg.scan
    t1 = scn.well.t1
    table = run_detector_scan(
        scn, s.window_width, [t1 + t for t in s.times], s.positions, s.n, seed,
        alpha=cfg.experiment.alpha,
    )
    w.csv("scan.csv", table.to_csv())
    w.report("scan", _envelope(cfg, seed, "scan", {"model": scn.model.name, "summary": table.summary()}))


def cmd_vbound(cfg: RunConfig, seed: int, w: _Writer, args) -> None:
    scn = cfg.scenario()
    if isinstance(scn.model, DiscreteDelay):
        L_prime = scn.model.L_prime
    else:
        fp = locate_front_points(
            scn.psi0, scn.psi1, cfg.detector_width, cfg.analysis.n_assumed,
            cfg.analysis.k_sigma, x_A=scn.well.x_A, L=scn.well.L,
        )
        L_prime = fp.L_prime if not fp.empty else scn.well.L
    t1 = scn.well.t1
    res = estimate_v_bound(
        scn, cfg.experiment_region(), [t1 + t for t in cfg.vbound.schedule], cfg.vbound.n,
        seed, L_prime, alpha=cfg.experiment.alpha,
    )
    w.report("vbound", _envelope(cfg, seed, "vbound", {"model": scn.model.name, **res.to_dict()}))


def cmd_limits(cfg: RunConfig, seed: int, w: _Writer, args) -> None:
    payload = planck_limits().to_dict()
    sys.stdout.write(dumps(payload))
    if w.formats in ("json", "both"):
        w._put("limits.json", dumps(payload))
    if w.formats == "csv":
        w.report("limits", payload)


HANDLERS = {
    "eigen": cmd_eigen,
    "evolve": cmd_evolve,
    "paradox": cmd_paradox,
    "signal": cmd_signal,
    "experiment": cmd_experiment,
    "scan": cmd_scan,
    "vbound": cmd_vbound,
    "limits": cmd_limits,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML run configuration (flat dotted keys)")
    common.add_argument("--preset", choices=sorted(PRESETS), default="reference")
    common.add_argument("--seed", type=int, help="base seed (overrides run.seed)")
    common.add_argument("--out", help="output directory (overrides run.out)")
    common.add_argument("--format", choices=("csv", "json", "both"), help="output formats")
    parser = _Parser(prog="chronon", description="Square-well quench laboratory.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "eigen": "stationary states before and after the quench",
        "evolve": "Crank-Nicolson evolution with wavefunction snapshots",
        "paradox": "norm audit, equation residual and front points for one model",
        "signal": "superluminal signaling attempt",
        "experiment": "p0 / px / py protocol with verdict",
        "scan": "detector-position scan",
        "vbound": "upper bounds on the response speed",
        "limits": "Planck-scale response time and register speed",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "paradox":
            p.add_argument("--model", choices=MODEL_KINDS, help="override model.kind")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("chronon: error: a subcommand is required", file=sys.stderr)
        return 1
    try:
        cfg = load_config(args.config, preset=args.preset)
        if args.seed is not None:
            cfg.run.seed = args.seed
        if args.out is not None:
            cfg.run.out = args.out
        if args.format is not None:
            cfg.run.formats = args.format
        if args.command == "paradox" and args.model:
            cfg.model.kind = args.model
        cfg.validate(args.command)
        writer = _Writer(Path(cfg.run.out), cfg.run.formats)
        HANDLERS[args.command](cfg, cfg.run.seed, writer, args)
    except (ValidationError, CausalityError) as exc:
        print(f"chronon: invalid input: {exc}", file=sys.stderr)
        return 1
    except (ChrononError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"chronon: runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
