"""Four rival rules for how the wavefunction answers the quench at t1.

Every rule returns psi0 untouched before t1. Amplitudes are kept in the frame
of the pre-quench stationary state: its trivial phase exp(-i E0 t) is dropped,
which is why "unchanged" can mean bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Union

import numpy as np

from .core import (
    ChrononError,
    Grid,
    Hamiltonian,
    ValidationError,
    Wavefunction,
    WellConfig,
    build_hamiltonian,
    evolve_exact,
    solve_stationary,
)

__all__ = [
    "CausalityError",
    "Instantaneous",
    "Front",
    "LocalPerturbation",
    "DiscreteDelay",
    "ResponseModel",
    "QuenchScenario",
    "state_at",
    "front_mix",
    "perturbed_state",
    "check_bump_width",
    "particle_speed",
    "kinematic_fronts",
    "jump_times",
]

# bumps narrower than this many grid cells are not representable
MIN_BUMP_CELLS = 4


class CausalityError(ChrononError):
    """A response would outrun the configured light speed."""


@dataclass(frozen=True)
class Instantaneous:
    """The whole wavefunction follows the post-quench Hamiltonian from t1 on."""

    name = "instantaneous"


@dataclass(frozen=True)
class Front:
    v: float
    direction: Literal["bidirectional", "rightward"] = "bidirectional"
    name = "front"

    def __post_init__(self):
        if self.direction not in ("bidirectional", "rightward"):
            raise ValidationError(f"front direction must be bidirectional|rightward, got {self.direction!r}")


@dataclass(frozen=True)
class LocalPerturbation:
    epsilon: float
    growth_speed: float
    d_max: float | None = None  # None -> L/4
    name = "local"


@dataclass(frozen=True)
class DiscreteDelay:
    v: float
    L_prime: float
    offset: float = 0.0  # extra wait after tau = L'/v
    name = "delay"

    def __post_init__(self):
        if self.L_prime <= 0:
            raise ValidationError("DiscreteDelay needs L_prime > 0")
        if self.offset < 0:
            raise ValidationError("DiscreteDelay offset must be >= 0")

    @property
    def tau(self) -> float:
        return self.L_prime / self.v


ResponseModel = Union[Instantaneous, Front, LocalPerturbation, DiscreteDelay]


def particle_speed(energy: float) -> float:
    """Classical speed sqrt(2E) of a particle with kinetic energy E (hbar = m = 1).

    Preset for the conjecture that the response speed equals the particle's
    own speed; nothing in the package assumes it.
    """
    if energy <= 0:
        raise ValidationError("particle speed needs a positive energy")
    return math.sqrt(2.0 * energy)


def _model_speeds(model) -> list[tuple[str, float]]:
    if isinstance(model, Front):
        return [("front speed v", model.v)]
    if isinstance(model, LocalPerturbation):
        return [("growth_speed", model.growth_speed)]
    if isinstance(model, DiscreteDelay):
        return [("delay speed v", model.v)]
    return []


@dataclass(frozen=True, eq=False)
class QuenchScenario:
    well: WellConfig
    psi0: Wavefunction
    psi1: Wavefunction
    model: ResponseModel
    c_sim: float = 1.0
    E0: float = float("nan")
    E1: float = float("nan")

    def __post_init__(self):
        if self.c_sim <= 0:
            raise ValidationError("c_sim must be positive")
        if self.psi0.grid != self.psi1.grid:
            raise ValidationError("psi0 and psi1 must share one grid")
        for label, speed in _model_speeds(self.model):
            if not 0 < speed:
                raise ValidationError(f"{label} must be positive, got {speed}")
            if speed > self.c_sim:
                raise CausalityError(f"{label}={speed} exceeds c_sim={self.c_sim}")
        for label, psi in (("psi0", self.psi0), ("psi1", self.psi1)):
            if abs(psi.norm_sq - 1.0) > 1e-9:
                raise ValidationError(f"{label} is not normalized (norm^2={psi.norm_sq})")
        if not math.isnan(self.E1):
            r = self.h_post.residual(self.psi1, self.E1)
            if r > 1e-8:
                raise ValidationError(f"psi1 is not a post-quench eigenstate (residual {r:.3g})")

    @classmethod
    def build(
        cls,
        grid: Grid,
        well: WellConfig,
        model: ResponseModel,
        *,
        level: int = 1,
        c_sim: float = 1.0,
    ) -> "QuenchScenario":
        h_pre = build_hamiltonian(grid, well, "pre")
        h_post = build_hamiltonian(grid, well, "post")
        E0, psi0 = solve_stationary(h_pre, level)
        E1, psi1 = solve_stationary(h_post, level)
        scn = cls(well, psi0, psi1, model, c_sim, E0, E1)
        # reuse the Hamiltonians already built (cached_property slots)
        scn.__dict__["h_pre"] = h_pre
        scn.__dict__["h_post"] = h_post
        return scn

    def with_model(self, model: ResponseModel) -> "QuenchScenario":
        scn = QuenchScenario(self.well, self.psi0, self.psi1, model, self.c_sim, self.E0, self.E1)
        scn.__dict__["h_pre"] = self.h_pre
        scn.__dict__["h_post"] = self.h_post
        return scn

    @property
    def grid(self) -> Grid:
        return self.psi0.grid

    @cached_property
    def h_pre(self) -> Hamiltonian:
        return build_hamiltonian(self.grid, self.well, "pre")

    @cached_property
    def h_post(self) -> Hamiltonian:
        return build_hamiltonian(self.grid, self.well, "post")

    @property
    def d_max(self) -> float:
        m = self.model
        if isinstance(m, LocalPerturbation) and m.d_max is not None:
            return m.d_max
        return self.well.L / 4


def check_bump_width(d: float, delta_t: float, c_sim: float) -> None:
    """Reject a perturbation half-width that outruns light: d <= c_sim * delta_t."""
    if d > c_sim * delta_t * (1 + 1e-12):
        raise CausalityError(
            f"bump half-width d={d} exceeds c_sim*dt={c_sim * delta_t} (d <= c*dt)"
        )


def front_mix(
    psi0: Wavefunction,
    psi1: Wavefunction,
    x_A: float,
    v: float,
    dt_since: float,
    direction: str = "bidirectional",
) -> Wavefunction:
    """psi1 on the set reached by a front leaving x_A at speed v, psi0 elsewhere.

    No renormalization: the norm defect of the result is the quantity of
    interest.
    """
    if dt_since < 0:
        raise ValidationError("dt_since must be >= 0")
    x = psi0.grid.x
    dist = x - x_A
    reach = v * dt_since
    if direction == "rightward":
        reached = (dist >= 0) & (dist <= reach)
    else:
        reached = np.abs(dist) <= reach
    amps = np.where(reached, psi1.amplitudes, psi0.amplitudes)
    return Wavefunction(psi0.grid, amps, psi0.timestamp + dt_since)


def _odd_bump(u: np.ndarray, d: float) -> np.ndarray:
    """sign(u) sin^2(pi |u| / d) on |u| < d, zero outside."""
    inside = np.abs(u) < d
    return np.where(inside, np.sign(u) * np.sin(np.pi * np.abs(u) / d) ** 2, 0.0)


def perturbed_state(psi0: Wavefunction, x_A: float, epsilon: float, d: float) -> Wavefunction:
    """psi0 + epsilon * eta with eta odd about x_A and supported on |x - x_A| < d.

    eta = b - gamma q, where b is a sine-squared lobe pair and q the odd part
    of psi0 under the same envelope. gamma is the root of the quadratic that
    keeps ||psi0 + epsilon eta|| equal to ||psi0|| exactly; at first order in
    epsilon this is the projection of b against psi0. Points outside the
    support are copied from psi0 bit for bit.
    """
    if not d > 0:
        raise ValidationError(f"bump half-width must be positive, got {d}")
    g = psi0.grid
    if x_A - d < g.x_min or x_A + d > g.x_max:
        raise ValidationError(f"bump support [{x_A - d}, {x_A + d}] exceeds the grid")
    if epsilon == 0:
        return Wavefunction(g, psi0.amplitudes, psi0.timestamp)
    x = g.x
    u = x - x_A
    sup = np.flatnonzero(np.abs(u) < d)
    if sup.size < 2 * MIN_BUMP_CELLS:
        return Wavefunction(g, psi0.amplitudes, psi0.timestamp)
    u_s = u[sup]
    b = _odd_bump(u_s, d)
    env = np.abs(b)
    a = psi0.amplitudes
    # value of psi0 at the mirror point x_A - u (midpoint-symmetric grids map
    # grid points onto grid points; otherwise interpolate)
    mirror = np.interp(x_A - u_s, x, a.real) + 1j * np.interp(x_A - u_s, x, a.imag)
    q = 0.5 * (a[sup] - mirror) * env
    dx = g.dx
    p_s = a[sup]
    re = lambda f, h: float(np.sum((np.conj(f) * h).real) * dx)
    P = re(p_s, b)
    Q = re(p_s, q)
    bq = re(b, q)
    bb = re(b, b)
    qq = re(q, q)
    # ||psi + eps(b - g q)||^2 - ||psi||^2 = 0, divided by eps:
    # eps qq g^2 - 2(Q + eps bq) g + (2P + eps bb) = 0
    A = epsilon * qq
    B = 2.0 * (Q + epsilon * bq)
    C = 2.0 * P + epsilon * bb
    disc = B * B - 4.0 * A * C
    if A == 0 or disc < 0:
        raise ValidationError(
            f"no norm-preserving odd bump with epsilon={epsilon}, d={d}: "
            "psi0 has too little odd weight about x_A on the support"
        )
    # root continuous with P/Q as epsilon -> 0
    gamma = 2.0 * C / (B + math.copysign(math.sqrt(disc), B))
    eta = b - gamma * q
    out = np.array(a, dtype=complex)
    out[sup] = a[sup] + epsilon * eta
    return Wavefunction(g, out, psi0.timestamp)


def _bump_halfwidth(scn: QuenchScenario, dt_since: float) -> float:
    m = scn.model
    return min(m.growth_speed * dt_since, scn.d_max)


def _in_frame(psi: Wavefunction, scn: QuenchScenario, elapsed: float) -> Wavefunction:
    # remove the pre-quench stationary phase accumulated over `elapsed`
    if math.isnan(scn.E0) or scn.E0 == 0:
        return psi
    return Wavefunction(psi.grid, psi.amplitudes * np.exp(1j * scn.E0 * elapsed), psi.timestamp)


def state_at(scenario: QuenchScenario, t: float) -> Wavefunction:
    """The model's wavefunction at absolute time t."""
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    scn = scenario
    t1 = scn.well.t1
    psi0 = scn.psi0
    if t < t1:
        return psi0.at(t)
    m = scn.model
    dt_since = t - t1
    if isinstance(m, Instantaneous):
        return _in_frame(evolve_exact(psi0, scn.h_post, dt_since), scn, dt_since).at(t)
    if isinstance(m, Front):
        return front_mix(psi0, scn.psi1, scn.well.x_A, m.v, dt_since, m.direction).at(t)
    if isinstance(m, LocalPerturbation):
        d = _bump_halfwidth(scn, dt_since)
        if d <= 0:
            return psi0.at(t)
        check_bump_width(d, dt_since, scn.c_sim)
        return perturbed_state(psi0, scn.well.x_A, m.epsilon, d).at(t)
    if isinstance(m, DiscreteDelay):
        t_jump = t1 + m.tau + m.offset
        if t < t_jump:
            return psi0.at(t)
        return _in_frame(evolve_exact(scn.psi1, scn.h_post, t - t_jump), scn, t - t_jump).at(t)
    raise ValidationError(f"unknown response model {m!r}")


def kinematic_fronts(scenario: QuenchScenario, t: float) -> list[float]:
    """Positions where the model's profile is discontinuous in x at time t."""
    m = scenario.model
    t1 = scenario.well.t1
    if not isinstance(m, Front) or t < t1:
        return []
    x_A = scenario.well.x_A
    reach = m.v * (t - t1)
    if m.direction == "rightward":
        return [x_A, x_A + reach]
    return [x_A - reach, x_A + reach]


def jump_times(scenario: QuenchScenario) -> list[float]:
    """Instants where the model's path is discontinuous in time."""
    t1 = scenario.well.t1
    m = scenario.model
    if isinstance(m, DiscreteDelay):
        return [t1, t1 + m.tau + m.offset]
    return [t1]
