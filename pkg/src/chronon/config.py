"""Run configuration: one flat TOML document with dotted keys per run.

    well.v1 = 400.0
    model.kind = "front"
    model.v = 1.0

Every key has a default; the defaults describe the reference scenario
(L = 1, V0 = 200, V1 = 400, 2048 grid points). Environment variables
``CHRONON_<SECTION>__<KEY>`` override the file, e.g. ``CHRONON_WELL__V1=300``.
"""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import Grid, ValidationError, WellConfig
from .models import (
    DiscreteDelay,
    Front,
    Instantaneous,
    LocalPerturbation,
    QuenchScenario,
)

__all__ = ["ConfigError", "RunConfig", "load_config", "ENV_PREFIX", "PRESETS"]

ENV_PREFIX = "CHRONON_"


class ConfigError(ValidationError):
    pass


@dataclass
class GridSection:
    n_points: int = 2048
    margin: float = 2.0


@dataclass
class WellSection:
    x_a: float = 0.0
    x_b: float = 1.0
    v0: float = 200.0
    v1: float = 400.0
    t1: float = 0.0
    level: int = 1


@dataclass
class ModelSection:
    kind: str = "front"
    c_sim: float = 1.0
    v: float = 1.0
    direction: str = "bidirectional"
    epsilon: float = 0.05
    growth_speed: float = 1.0
    d_max: float = 0.0  # 0 -> L/4
    l_prime: float = 0.0  # 0 -> statistical L' from the analysis section
    offset: float = 0.0


@dataclass
class EvolutionSection:
    dt: float = 1e-4
    steps: int = 1000
    snapshot_every: int = 250
    hamiltonian: str = "post"


@dataclass
class AnalysisSection:
    n_assumed: int = 1_000_000
    k_sigma: float = 3.0
    detector_width: float = 0.0  # 0 -> L/50
    times: list = field(default_factory=lambda: [0.25 * k for k in range(17)])
    dt_probe: float = 0.0  # 0 -> 0.25 / ||H||
    levels: int = 3
    fig_dt_since: float = 0.5
    fig_d: float = 0.1


@dataclass
class ExperimentSection:
    l: float = 0.5
    detector_width: float = 0.0  # 0 -> L/50
    t_x: float = 0.3
    t_y: float = 0.75
    n_per_phase: int = 100_000
    alpha: float = 0.001


@dataclass
class SignalSection:
    n: int = 100_000
    delta_t: float = 0.3
    bit: int = 1


@dataclass
class ScanSection:
    window_width: float = 0.1
    positions: list = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    times: list = field(default_factory=lambda: [0.25 * k for k in range(1, 13)])
    n: int = 100_000


@dataclass
class VBoundSection:
    schedule: list = field(default_factory=lambda: [0.25 * 1.5**k for k in range(10)])
    n: int = 100_000


@dataclass
class RunSection:
    seed: int = 20240101
    out: str = "chronon-out"
    formats: str = "both"


_SECTIONS = {
    "run": RunSection,
    "grid": GridSection,
    "well": WellSection,
    "model": ModelSection,
    "evolution": EvolutionSection,
    "analysis": AnalysisSection,
    "experiment": ExperimentSection,
    "signal": SignalSection,
    "scan": ScanSection,
    "vbound": VBoundSection,
}


def _coerce(section: str, key: str, default: Any, value: Any) -> Any:
    where = f"{section}.{key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list")
        return [float(v) for v in value]
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    return value


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    grid: GridSection = field(default_factory=GridSection)
    well: WellSection = field(default_factory=WellSection)
    model: ModelSection = field(default_factory=ModelSection)
    evolution: EvolutionSection = field(default_factory=EvolutionSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    signal: SignalSection = field(default_factory=SignalSection)
    scan: ScanSection = field(default_factory=ScanSection)
    vbound: VBoundSection = field(default_factory=VBoundSection)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        cfg = cls()
        for name, values in data.items():
            if name not in _SECTIONS:
                raise ConfigError(f"unknown config section {name!r}")
            if not isinstance(values, dict):
                raise ConfigError(f"config section {name!r} must hold dotted keys")
            sec = getattr(cfg, name)
            known = {f.name: f for f in dataclasses.fields(sec)}
            for key, value in values.items():
                k = key.lower()
                if k not in known:
                    raise ConfigError(f"unknown config key {name}.{key}")
                setattr(sec, k, _coerce(name, k, getattr(sec, k), value))
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # -- derived objects ------------------------------------------------

    def well_config(self) -> WellConfig:
        w = self.well
        try:
            return WellConfig(w.x_a, w.x_b, w.v0, w.v1, w.t1)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from None

    def grid_for(self, well: WellConfig) -> Grid:
        try:
            return Grid.for_well(well, self.grid.n_points, self.grid.margin)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def detector_width(self) -> float:
        dw = self.analysis.detector_width
        return dw if dw > 0 else (self.well.x_b - self.well.x_a) / 50

    def make_model(self, kind: str | None = None, l_prime: float | None = None):
        m = self.model
        kind = (kind or m.kind).lower()
        L = self.well.x_b - self.well.x_a
        if kind == "instantaneous":
            return Instantaneous()
        if kind == "front":
            return Front(m.v, m.direction)
        if kind == "local":
            return LocalPerturbation(m.epsilon, m.growth_speed, m.d_max if m.d_max > 0 else L / 4)
        if kind == "delay":
            lp = m.l_prime if m.l_prime > 0 else l_prime
            if lp is None or lp <= 0:
                raise ConfigError("model.l_prime must be positive for the delay model")
            return DiscreteDelay(m.v, lp, m.offset)
        raise ConfigError(f"model.kind must be one of instantaneous|front|local|delay, got {kind!r}")

    def validate(self, command: str) -> None:
        """Check every constraint the command depends on before computing."""
        well = self.well_config()
        grid = self.grid_for(well)
        if grid.dx > well.L / 64:
            raise ConfigError(f"grid under-resolved: dx={grid.dx:.4g} > L/64")
        m = self.model
        if m.kind.lower() not in ("instantaneous", "front", "local", "delay"):
            raise ConfigError(f"model.kind must be one of instantaneous|front|local|delay, got {m.kind!r}")
        if m.c_sim <= 0:
            raise ConfigError("model.c_sim must be positive")
        for label, speed in (("model.v", m.v), ("model.growth_speed", m.growth_speed)):
            if not 0 < speed <= m.c_sim:
                raise ConfigError(f"speed bound 0 < {label} <= c_sim violated ({speed} vs {m.c_sim})")
        if m.direction not in ("bidirectional", "rightward"):
            raise ConfigError("model.direction must be bidirectional|rightward")
        if self.well.level < 1:
            raise ConfigError("well.level must be >= 1")
        if self.run.formats not in ("csv", "json", "both"):
            raise ConfigError("run.formats must be csv|json|both")
        c = m.c_sim
        L = well.L
        if command == "evolve":
            if self.evolution.steps < 0 or self.evolution.snapshot_every < 1:
                raise ConfigError("evolution.steps must be >= 0 and snapshot_every >= 1")
            if not self.evolution.dt > 0:
                raise ConfigError("evolution.dt must be positive")
            if self.evolution.hamiltonian not in ("pre", "post"):
                raise ConfigError("evolution.hamiltonian must be pre|post")
        if command == "paradox":
            t = self.analysis.times
            if any(b <= a for a, b in zip(t, t[1:])):
                raise ConfigError("analysis.times must be strictly increasing")
            if t and min(t) < 0:
                raise ConfigError("analysis.times are offsets after t1 and must be >= 0")
            if self.analysis.n_assumed < 2:
                raise ConfigError("analysis.n_assumed must be >= 2")
        if command == "experiment":
            e = self.experiment
            if not e.t_x < e.l / c:
                raise ConfigError(f"timing constraint t_x < l/c violated: t_x={e.t_x}, l/c={e.l / c}")
            if not (e.l / c < e.t_y < L / c):
                raise ConfigError(
                    f"timing constraint l/c < t_y < L/c violated: t_y={e.t_y}, l/c={e.l / c}, L/c={L / c}"
                )
            self._check_detector(grid, well.x_A + e.l, self.experiment_width, "experiment")
        if command == "signal":
            s = self.signal
            if s.n < 2 or s.n % 2:
                raise ConfigError("signal.n must be even and >= 2")
            if not s.delta_t > 0:
                raise ConfigError("signal.delta_t must be positive")
            if s.bit not in (0, 1):
                raise ConfigError("signal.bit must be 0 or 1")
            self._check_detector(grid, well.x_A + self.experiment.l, self.experiment_width, "signal")
        if command == "scan":
            s = self.scan
            if any(t < 0 for t in s.times):
                raise ConfigError("scan.times are offsets after t1 and must be >= 0")
            for x in s.positions:
                self._check_detector(grid, x, s.window_width, "scan")
        if command == "vbound":
            sch = self.vbound.schedule
            if not sch:
                raise ConfigError("vbound.schedule must not be empty")
            if any(b <= a for a, b in zip(sch, sch[1:])) or sch[0] <= 0:
                raise ConfigError("vbound.schedule must be strictly increasing offsets > 0 after t1")
            self._check_detector(grid, well.x_A + self.experiment.l, self.experiment_width, "vbound")

    @property
    def experiment_width(self) -> float:
        w = self.experiment.detector_width
        return w if w > 0 else (self.well.x_b - self.well.x_a) / 50

    def experiment_region(self) -> tuple[float, float]:
        c = self.well.x_a + self.experiment.l
        w = self.experiment_width
        return (c - w / 2, c + w / 2)

    @staticmethod
    def _check_detector(grid: Grid, center: float, width: float, where: str) -> None:
        if width <= 0:
            raise ConfigError(f"{where}: detector width must be positive")
        if center - width / 2 < grid.x_min or center + width / 2 > grid.x_max:
            raise ConfigError(f"{where}: detector region around {center} lies outside the grid")

    def scenario(self, kind: str | None = None, l_prime: float | None = None) -> QuenchScenario:
        well = self.well_config()
        grid = self.grid_for(well)
        base = QuenchScenario.build(
            grid, well, Instantaneous(), level=self.well.level, c_sim=self.model.c_sim
        )
        if (kind or self.model.kind).lower() == "delay" and self.model.l_prime <= 0 and l_prime is None:
            from .analysis import locate_front_points

            fp = locate_front_points(
                base.psi0, base.psi1, self.detector_width, self.analysis.n_assumed,
                self.analysis.k_sigma, x_A=well.x_A, L=well.L,
            )
            if fp.empty:
                raise ConfigError("delay model: psi0 and psi1 are indistinguishable, no L' to derive")
            l_prime = fp.L_prime
        return base.with_model(self.make_model(kind, l_prime))


# Named starting points; a config file or environment overrides still apply on top.
PRESETS: dict[str, dict] = {
    "reference": {},
    # Shallow post-quench wall: |p1 - p0| ~ 0.06 in a 0.1-wide detector at l = 0.5,
    # large enough for N = 1e5 to resolve every protocol phase.
    "strong": {
        "well": {"v1": 5.0},
        "grid": {"margin": 3.0},
        "model": {"v": 0.9},
        "experiment": {"detector_width": 0.1},
        "scan": {"times": [0.5 * k for k in range(1, 10)]},
        "vbound": {"schedule": [0.25 * 1.25**k for k in range(15)]},
    },
}


def _merge(base: dict, extra: dict) -> dict:
    out = {k: dict(v) for k, v in base.items()}
    for sec, values in extra.items():
        out.setdefault(sec, {}).update(values)
    return out


def _parse_scalar(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def load_config(
    path: str | os.PathLike | None = None,
    env: dict | None = None,
    preset: str = "reference",
) -> RunConfig:
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}")
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file is not valid TOML: {exc}") from None
    env = os.environ if env is None else env
    for name, raw in env.items():
        if not name.startswith(ENV_PREFIX) or "__" not in name:
            continue
        section, _, key = name[len(ENV_PREFIX):].partition("__")
        data.setdefault(section.lower(), {})[key.lower()] = _parse_scalar(raw)
    return RunConfig.from_dict(_merge(PRESETS[preset], data))
