"""Diagnostics that score a response model against causality, normalization
and the wave equation, plus the timing relations that follow from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import Hamiltonian, ValidationError, Wavefunction, norm_sq
from .models import (
    Front,
    QuenchScenario,
    jump_times,
    kinematic_fronts,
    state_at,
)

__all__ = [
    "NormAudit",
    "FrontPoints",
    "PlanckLimits",
    "L_PLANCK",
    "C_SI",
    "normalization_audit",
    "equation_residual",
    "piecewise_residual",
    "locate_front_points",
    "window_probabilities",
    "compute_tau",
    "planck_limits",
    "causality_check",
    "norm_check",
    "residual_check",
    "trilemma",
    "TrilemmaRow",
]

L_PLANCK = 1.616e-35  # m
C_SI = 2.99792458e8  # m/s

NORM_TOL = 1e-9
RESIDUAL_FLOOR = 1e-8
CHANGE_TOL = 1e-10  # relative amplitude change counted as "changed"


@dataclass(frozen=True)
class NormAudit:
    times: np.ndarray
    norms: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        n = np.asarray(self.norms, dtype=float)
        if t.shape != n.shape:
            raise ValidationError("times and norms must have equal length")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValidationError("audit times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "norms", n)

    @property
    def max_defect(self) -> float:
        if self.norms.size == 0:
            return 0.0
        return float(np.max(np.abs(self.norms - 1.0)))

    def to_csv(self) -> str:
        rows = ["time,norm_sq,defect"]
        for t, n in zip(self.times.tolist(), self.norms.tolist()):
            rows.append(f"{t!r},{n!r},{abs(n - 1.0)!r}")
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class FrontPoints:
    x_A_prime: float | None
    x_B_prime: float | None
    L_prime: float
    N_assumed: int
    k_sigma: float
    detector_width: float
    below_L: bool = False

    @property
    def empty(self) -> bool:
        return self.x_A_prime is None

    def to_dict(self) -> dict:
        return {
            "x_A_prime": self.x_A_prime,
            "x_B_prime": self.x_B_prime,
            "L_prime": self.L_prime,
            "N_assumed": self.N_assumed,
            "k_sigma": self.k_sigma,
            "detector_width": self.detector_width,
            "below_L": self.below_L,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrontPoints":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})

    def to_csv(self) -> str:
        d = self.to_dict()
        keys = list(d)
        vals = ["" if d[k] is None else repr(d[k]) for k in keys]
        return ",".join(keys) + "\n" + ",".join(vals) + "\n"


@dataclass(frozen=True)
class PlanckLimits:
    l_P: float
    t_P: float
    max_ips_per_register: float

    def to_dict(self) -> dict:
        return {
            "l_P": {"value": self.l_P, "unit": "m"},
            "t_P": {"value": self.t_P, "unit": "s"},
            "max_ips_per_register": {"value": self.max_ips_per_register, "unit": "1/s"},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlanckLimits":
        return cls(d["l_P"]["value"], d["t_P"]["value"], d["max_ips_per_register"]["value"])


def normalization_audit(scenario: QuenchScenario, times: Iterable[float]) -> NormAudit:
    times = np.asarray(list(times), dtype=float)
    if times.size and times[0] < scenario.well.t1:
        raise ValidationError("audit times must not precede the quench time t1")
    norms = np.array([norm_sq(state_at(scenario, t)) for t in times])
    return NormAudit(times, norms)


def _time_derivative(psi_path, t: float, dt_probe: float):
    a_plus = psi_path(t + dt_probe)
    a_minus = psi_path(t - dt_probe)
    a_plus = getattr(a_plus, "amplitudes", a_plus)
    a_minus = getattr(a_minus, "amplitudes", a_minus)
    return (np.asarray(a_plus) - np.asarray(a_minus)) / (2.0 * dt_probe)


def equation_residual(
    psi_path: Callable[[float], Wavefunction],
    h: Hamiltonian,
    t: float,
    dt_probe: float,
    *,
    gauge: bool = False,
) -> float:
    """||i dpsi/dt - H psi|| / ||psi|| with a centered difference in time.

    With ``gauge=True`` the best constant energy shift is removed first, i.e.
    the residual is taken modulo a time-dependent global phase.
    """
    if not dt_probe > 0:
        raise ValidationError(f"dt_probe must be positive, got {dt_probe}")
    psi = psi_path(t)
    a = np.asarray(getattr(psi, "amplitudes", psi))
    r = 1j * _time_derivative(psi_path, t, dt_probe) - h.matvec(a)
    r = r[1:-1]
    a_in = a[1:-1]
    if gauge:
        r = r + _best_shift(a_in, r) * a_in
    return float(np.linalg.norm(r) / np.linalg.norm(a_in))


def _best_shift(a: np.ndarray, r: np.ndarray) -> float:
    den = float(np.vdot(a, a).real)
    if den == 0:
        return 0.0
    return -float(np.vdot(a, r).real) / den


def piecewise_residual(
    psi_path: Callable[[float], Wavefunction],
    hamiltonians: Sequence[Hamiltonian],
    t: float,
    dt_probe: float,
    breaks: Sequence[float] = (),
    break_speed: float = 0.0,
) -> float:
    """Gauge-free residual that accepts any of several Hamiltonians.

    Points within two cells (plus the distance a break travels in dt_probe)
    of a declared spatial discontinuity are excised; each remaining connected
    segment is scored with its own best Hamiltonian and phase shift, and the
    segment residuals are combined in quadrature.
    """
    if not dt_probe > 0:
        raise ValidationError(f"dt_probe must be positive, got {dt_probe}")
    psi = psi_path(t)
    grid = psi.grid
    a = psi.amplitudes
    da = 1j * _time_derivative(psi_path, t, dt_probe)
    rs = [(da - h.matvec(a))[1:-1] for h in hamiltonians]
    a_in = a[1:-1]
    x_in = grid.x[1:-1]
    keep = np.ones(a_in.size, dtype=bool)
    pad = 2.0 * grid.dx + break_speed * dt_probe
    for xb in breaks:
        keep &= np.abs(x_in - xb) > pad
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        return 0.0
    cuts = np.flatnonzero(np.diff(idx) > 1) + 1
    total = 0.0
    for seg in np.split(idx, cuts):
        best = math.inf
        for r in rs:
            rseg = r[seg] + _best_shift(a_in[seg], r[seg]) * a_in[seg]
            best = min(best, float(np.vdot(rseg, rseg).real))
        total += best
    return math.sqrt(total) / float(np.linalg.norm(a_in))


def window_probabilities(psi: Wavefunction, width: float) -> tuple[np.ndarray, np.ndarray]:
    """Probability in a window [c - w/2, c + w/2) for every grid point c
    whose window fits on the grid. Returns (centers, probabilities)."""
    g = psi.grid
    dens = np.abs(psi.amplitudes) ** 2 * g.dx
    csum = np.concatenate([[0.0], np.cumsum(dens)])
    x = g.x
    lo = np.searchsorted(x, x - width / 2, "left")
    hi = np.searchsorted(x, x + width / 2, "left")
    ok = (x - width / 2 >= g.x_min) & (x + width / 2 <= g.x_max)
    return x[ok], (csum[hi] - csum[lo])[ok]


def locate_front_points(
    psi0: Wavefunction,
    psi1: Wavefunction,
    detector_width: float,
    N: int,
    k_sigma: float = 3.0,
    *,
    x_A: float = 0.0,
    L: float | None = None,
) -> FrontPoints:
    """Outermost detector positions where psi0 and psi1 are distinguishable
    with N systems at k_sigma standard deviations (pooled proportion)."""
    if N < 2:
        raise ValidationError("ensemble size N must be >= 2")
    if detector_width < psi0.grid.dx:
        raise ValidationError("detector_width must be at least one grid spacing")
    centers, p0 = window_probabilities(psi0, detector_width)
    _, p1 = window_probabilities(psi1, detector_width)
    pbar = 0.5 * (p0 + p1)
    sigma = np.sqrt(np.clip(pbar * (1.0 - pbar), 0.0, None) / N)
    hit = np.abs(p1 - p0) > k_sigma * sigma
    if not np.any(hit):
        return FrontPoints(None, None, 0.0, N, k_sigma, detector_width, below_L=L is not None)
    a_p = float(centers[hit][0])
    b_p = float(centers[hit][-1])
    L_prime = max(abs(x_A - a_p), abs(b_p - x_A))
    below = L is not None and L_prime < L
    return FrontPoints(a_p, b_p, L_prime, N, k_sigma, detector_width, below_L=below)


def compute_tau(L_prime: float, v: float) -> float:
    """Minimal response delay L'/v."""
    if not (L_prime > 0 and v > 0):
        raise ValidationError(f"compute_tau needs L_prime > 0 and v > 0, got {L_prime}, {v}")
    return L_prime / v


def planck_limits(l_P: float = L_PLANCK, c: float = C_SI) -> PlanckLimits:
    if not (l_P > 0 and c > 0):
        raise ValidationError("planck_limits needs positive l_P and c")
    t_P = compute_tau(l_P, c)
    return PlanckLimits(l_P, t_P, 1.0 / t_P)


# ---------------------------------------------------------------------------
# trilemma: causality / normalization / wave equation


@dataclass
class TrilemmaRow:
    model: str
    causality: bool
    norm: bool
    residual: bool
    details: dict = field(default_factory=dict)

    def cells(self) -> tuple[str, str, str]:
        f = lambda ok: "PASS" if ok else "FAIL"
        return f(self.causality), f(self.norm), f(self.residual)


def causality_check(
    scenario: QuenchScenario, times: Iterable[float], horizon: float
) -> tuple[bool, dict]:
    """No change outside the light cone of x_A.

    A point at distance > c_sim (t - t1) from x_A must keep psi0's amplitude
    (to CHANGE_TOL relative), unless it also lies beyond ``horizon``, the
    statistical reach L' of the quench beyond which no detector can tell the
    states apart.
    """
    psi0 = scenario.psi0
    x = scenario.grid.x
    dist = np.abs(x - scenario.well.x_A)
    scale = float(np.max(np.abs(psi0.amplitudes)))
    worst = 0.0
    violations = []
    for t in times:
        psi = state_at(scenario, t)
        outside = (dist > scenario.c_sim * (t - scenario.well.t1)) & (dist <= horizon)
        diff = np.abs(psi.amplitudes - psi0.amplitudes)[outside]
        m = float(diff.max()) if diff.size else 0.0
        worst = max(worst, m)
        if m > CHANGE_TOL * scale:
            violations.append(float(t))
    return not violations, {"max_change_outside_cone": worst, "violating_times": violations}


def norm_check(scenario: QuenchScenario, times: Iterable[float]) -> tuple[bool, dict]:
    audit = normalization_audit(scenario, sorted(times))
    return audit.max_defect <= NORM_TOL, {"max_defect": audit.max_defect}


def residual_check(
    scenario: QuenchScenario, times: Iterable[float], dt_probe: float | None = None
) -> tuple[bool, dict]:
    """Does the path solve the Schroedinger equation for V0 or V1?

    A solution's residual vanishes as the probe step shrinks (quadratically
    once the probe resolves the grid spectrum); anything else levels off. A
    sample passes when halving dt_probe at least halves the residual, or the
    residual is already below RESIDUAL_FLOOR. Samples whose probe interval
    straddles a jump of the path are skipped.
    """
    hs = (scenario.h_pre, scenario.h_post)
    if dt_probe is None:
        dt_probe = 0.25 / max(h.norm_bound for h in hs)
    path = lambda s: state_at(scenario, s)
    jumps = jump_times(scenario)
    m = scenario.model
    speed = m.v if isinstance(m, Front) else 0.0
    worst = 0.0
    samples = []
    ok = True
    for t in times:
        if any(abs(t - tj) <= dt_probe for tj in jumps) or t - dt_probe < 0:
            continue
        breaks = kinematic_fronts(scenario, t)
        r1 = piecewise_residual(path, hs, t, dt_probe, breaks, speed)
        r2 = piecewise_residual(path, hs, t, dt_probe / 2, breaks, speed)
        passed = r1 <= RESIDUAL_FLOOR or r2 <= 0.5 * r1
        ok &= passed
        worst = max(worst, r1)
        samples.append({"t": float(t), "residual": r1, "residual_half": r2, "pass": passed})
    return ok, {"dt_probe": dt_probe, "max_residual": worst, "samples": samples}


def eigen_baseline(scenario: QuenchScenario, dt_probe: float) -> float:
    """Residual of the exact stationary path exp(-i E1 t) psi1 at this probe."""
    psi1, E1, h = scenario.psi1, scenario.E1, scenario.h_post
    path = lambda s: psi1.amplitudes * np.exp(-1j * E1 * s)
    return equation_residual(lambda s: Wavefunction(psi1.grid, path(s), s), h, 1.0, dt_probe)


def trilemma(
    scenarios: Sequence[QuenchScenario],
    times: Sequence[float],
    horizon: float,
    dt_probe: float | None = None,
) -> list[TrilemmaRow]:
    rows = []
    for scn in scenarios:
        c_ok, c_info = causality_check(scn, times, horizon)
        n_ok, n_info = norm_check(scn, times)
        r_ok, r_info = residual_check(scn, times, dt_probe)
        r_info["eigen_baseline"] = eigen_baseline(scn, r_info["dt_probe"])
        rows.append(
            TrilemmaRow(scn.model.name, c_ok, n_ok, r_ok, {**c_info, **n_info, **r_info})
        )
    return rows
