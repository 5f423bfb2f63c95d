"""Grid, wavefunctions, the finite square well and its dynamics.

Natural units throughout (hbar = m = 1). The outer boundary is a pair of hard
walls at the grid endpoints, so every amplitude array carries explicit zeros
there and the Hamiltonian acts on the interior points only.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.linalg.lapack import zgttrf, zgttrs

__all__ = [
    "ChrononError",
    "ValidationError",
    "UnderResolvedError",
    "NoBoundStateError",
    "Grid",
    "WellConfig",
    "Wavefunction",
    "Hamiltonian",
    "build_hamiltonian",
    "solve_stationary",
    "evolve_step",
    "evolve",
    "evolve_exact",
    "prob_in_region",
    "inner",
    "norm_sq",
    "wavefunction_to_csv",
    "wavefunction_from_csv",
]


class ChrononError(ValueError):
    """Base class for rejected inputs."""


class ValidationError(ChrononError):
    """A precondition or cross-field constraint was violated."""


class UnderResolvedError(ValidationError):
    pass


class NoBoundStateError(ChrononError):
    pass


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 16:
            raise ValidationError(f"grid needs n_points >= 16, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise ValidationError("grid needs x_max > x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_min + self.dx * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @classmethod
    def for_well(cls, well: "WellConfig", n_points: int = 2048, margin: float = 2.0) -> "Grid":
        """Grid whose spacing divides the well width and whose well edges sit
        exactly halfway between grid points.

        With the edges on midpoints the potential jump needs no special
        treatment and the eigenvalues converge at second order. ``margin`` is
        the wall room on each side in units of the well width.
        """
        if margin < 2.0:
            raise ValidationError(f"margin must be >= 2 well widths, got {margin}")
        L = well.L
        cells = n_points - 1
        m = int(math.floor(cells / (1.0 + 2.0 * margin)))
        # odd number of outside cells -> edges on half-points
        while m > 0 and (cells - m) % 2 == 0:
            m -= 1
        if m < 1:
            raise UnderResolvedError(f"n_points={n_points} too small for margin {margin}")
        dx = L / m
        pad = (cells - m) / 2 * dx
        return cls(well.x_A - pad, well.x_B + pad, n_points)

    def check_contains(self, well: "WellConfig") -> None:
        room = 2.0 * well.L
        if not (self.x_min <= well.x_A - room and well.x_B + room <= self.x_max):
            raise ValidationError(
                "grid margin: domain must extend >= 2L beyond both well edges "
                f"(x_min <= {well.x_A - room}, x_max >= {well.x_B + room})"
            )

    def index_region(self, x_lo: float, x_hi: float) -> slice:
        """Indices of grid points with x_lo <= x < x_hi."""
        x = self.x
        return slice(int(np.searchsorted(x, x_lo, "left")), int(np.searchsorted(x, x_hi, "left")))


@dataclass(frozen=True)
class WellConfig:
    """Square well on [x_A, x_B] with walls of height V0; the quench at time t1
    raises (or lowers) the left wall to V1."""

    x_A: float = 0.0
    x_B: float = 1.0
    V0: float = 200.0
    V1: float = 400.0
    t1: float = 0.0

    def __post_init__(self):
        if not self.x_B > self.x_A:
            raise ValidationError("well needs x_A < x_B")
        if self.V0 <= 0 or self.V1 <= 0:
            raise ValidationError("well needs V0 > 0 and V1 > 0")
        if self.t1 < 0:
            raise ValidationError("quench time t1 must be >= 0")

    @property
    def L(self) -> float:
        return self.x_B - self.x_A

    @property
    def is_trivial(self) -> bool:
        return self.V1 == self.V0

    def wall_heights(self, phase: Literal["pre", "post"]) -> tuple[float, float]:
        if phase == "pre":
            return self.V0, self.V0
        if phase == "post":
            return self.V1, self.V0
        raise ValidationError(f"phase must be 'pre' or 'post', got {phase!r}")

    def potential(self, x: np.ndarray, phase: Literal["pre", "post"]) -> np.ndarray:
        left, right = self.wall_heights(phase)
        V = np.where(x < self.x_A, left, np.where(x > self.x_B, right, 0.0))
        # a grid point sitting exactly on an edge gets the mean of both sides
        V = np.where(x == self.x_A, 0.5 * left, V)
        V = np.where(x == self.x_B, 0.5 * right, V)
        return V.astype(float)


@dataclass(frozen=True, eq=False)
class Wavefunction:
    grid: Grid
    amplitudes: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (self.grid.n_points,):
            raise ValidationError(
                f"amplitudes must have length {self.grid.n_points}, got {a.shape}"
            )
        if a is self.amplitudes and a.flags.writeable:
            a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)

    @property
    def norm_sq(self) -> float:
        return norm_sq(self)

    def at(self, timestamp: float) -> "Wavefunction":
        """Same amplitudes (shared, read-only) under a new timestamp."""
        return Wavefunction(self.grid, self.amplitudes, timestamp)

    def __eq__(self, other):
        if not isinstance(other, Wavefunction):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.timestamp == other.timestamp
            and np.array_equal(self.amplitudes, other.amplitudes)
        )

    __hash__ = None


def inner(a: Wavefunction, b: Wavefunction) -> complex:
    """<a|b> with the grid quadrature sum(conj(a) b) dx."""
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.dx)


def norm_sq(psi: Wavefunction) -> float:
    a = psi.amplitudes
    return float(np.sum(a.real**2 + a.imag**2) * psi.grid.dx)


class Hamiltonian:
    """H = -1/2 d2/dx2 + V on the grid interior, second-order differences.

    Stored as its tridiagonal pieces; ``diag`` and ``potential`` are full
    length arrays, the endpoint entries being unused (Dirichlet walls).
    """

    def __init__(self, grid: Grid, potential: np.ndarray):
        potential = np.asarray(potential, dtype=float)
        if potential.shape != (grid.n_points,):
            raise ValidationError("potential must be sampled on every grid point")
        self.grid = grid
        self.potential = potential.copy()
        self.potential.flags.writeable = False
        self.offdiag = -0.5 / grid.dx**2
        self._cayley: dict[float, tuple] = {}

    @property
    def inner_diag(self) -> np.ndarray:
        return 1.0 / self.grid.dx**2 + self.potential[1:-1]

    @property
    def norm_bound(self) -> float:
        """Gershgorin bound on the spectral radius."""
        return float(np.max(np.abs(self.inner_diag)) + 2.0 * abs(self.offdiag))

    def matvec(self, amplitudes: np.ndarray) -> np.ndarray:
        a = np.asarray(amplitudes)
        out = np.zeros(a.shape, dtype=np.result_type(a, float))
        inner_a = a[1:-1]
        out[1:-1] = self.inner_diag * inner_a + self.offdiag * (a[2:] + a[:-2])
        return out

    def dense(self) -> np.ndarray:
        """Interior matrix as a dense array (small grids / tests)."""
        n = self.grid.n_points - 2
        off = np.full(n - 1, self.offdiag)
        return np.diag(self.inner_diag) + np.diag(off, 1) + np.diag(off, -1)

    def expectation(self, psi: Wavefunction) -> float:
        a = psi.amplitudes
        return float(np.vdot(a, self.matvec(a)).real * self.grid.dx)

    def residual(self, psi: Wavefunction, energy: float) -> float:
        """||H psi - E psi|| / ||psi||."""
        a = psi.amplitudes
        r = self.matvec(a) - energy * a
        return float(np.linalg.norm(r[1:-1]) / np.linalg.norm(a))

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Full eigendecomposition (energies, interior eigenvectors as columns)."""
        n = self.grid.n_points - 2
        w, v = eigh_tridiagonal(self.inner_diag, np.full(n - 1, self.offdiag))
        return w, v

    def cayley_factors(self, dt: float):
        try:
            return self._cayley[dt]
        except KeyError:
            pass
        n = self.grid.n_points - 2
        half = 0.5j * dt
        dl = np.full(n - 1, half * self.offdiag, dtype=complex)
        d = 1.0 + half * self.inner_diag.astype(complex)
        du = dl.copy()
        dl_f, d_f, du_f, du2, ipiv, info = zgttrf(dl, d, du)
        if info != 0:
            raise ChrononError(f"tridiagonal factorization failed (info={info})")
        factors = (dl_f, d_f, du_f, du2, ipiv)
        if len(self._cayley) > 8:
            self._cayley.clear()
        self._cayley[dt] = factors
        return factors


def build_hamiltonian(
    grid: Grid, well: WellConfig, phase: Literal["pre", "post"] = "pre"
) -> Hamiltonian:
    """Discrete Hamiltonian of the well before ('pre') or after ('post') the quench."""
    grid.check_contains(well)
    if grid.dx > well.L / 64:
        raise UnderResolvedError(
            f"under-resolved grid: dx={grid.dx:.4g} exceeds L/64={well.L / 64:.4g}"
        )
    return Hamiltonian(grid, well.potential(grid.x, phase))


def solve_stationary(h: Hamiltonian, k: int = 1, *, bound_below: float | None = None):
    """k-th stationary state (k = 1 is the ground state).

    ``bound_below`` is the lowest wall height; a level at or above it is not
    bound and raises NoBoundStateError. Defaults to the smaller of the two
    asymptotic potential values of ``h``.
    """
    if k < 1:
        raise ValidationError(f"level index k must be >= 1, got {k}")
    grid = h.grid
    n = grid.n_points - 2
    if k > n:
        raise NoBoundStateError(f"level {k} exceeds the {n} grid states")
    w, v = eigh_tridiagonal(
        h.inner_diag, np.full(n - 1, h.offdiag), select="i", select_range=(k - 1, k - 1)
    )
    energy = float(w[0])
    ceiling = bound_below if bound_below is not None else min(h.potential[1], h.potential[-2])
    if energy >= ceiling:
        raise NoBoundStateError(
            f"no bound state at level {k}: E={energy:.6g} >= wall height {ceiling:.6g}"
        )
    amps = np.zeros(grid.n_points)
    amps[1:-1] = v[:, 0]
    # sign convention: largest lobe positive
    if amps[np.argmax(np.abs(amps))] < 0:
        amps = -amps
    amps /= math.sqrt(np.sum(amps**2) * grid.dx)
    return energy, Wavefunction(grid, amps.astype(complex), 0.0)


def evolve_step(psi: Wavefunction, h: Hamiltonian, dt: float) -> Wavefunction:
    """One Crank-Nicolson (Cayley) step: (1 + iH dt/2) psi' = (1 - iH dt/2) psi.

    Unconditionally stable and exactly unitary in the grid inner product; the
    accuracy budget dt <= 0.1 dx**2 is a recommendation, not enforced.
    """
    if not dt > 0:
        raise ValidationError(f"time step must be positive, got {dt}")
    return Wavefunction(psi.grid, _cn_step(psi.amplitudes, h, dt), psi.timestamp + dt)


def _cn_step(a: np.ndarray, h: Hamiltonian, dt: float) -> np.ndarray:
    dl, d, du, du2, ipiv = h.cayley_factors(dt)
    rhs = a[1:-1] - 0.5j * dt * h.matvec(a)[1:-1]
    x, info = zgttrs(dl, d, du, du2, ipiv, rhs)
    out = np.zeros_like(a, dtype=complex)
    out[1:-1] = x
    return out


def evolve(psi: Wavefunction, h: Hamiltonian, dt: float, n_steps: int) -> Wavefunction:
    """n_steps Crank-Nicolson steps without building intermediate objects."""
    if not dt > 0:
        raise ValidationError(f"time step must be positive, got {dt}")
    a = np.array(psi.amplitudes, dtype=complex)
    for _ in range(n_steps):
        a = _cn_step(a, h, dt)
    return Wavefunction(psi.grid, a, psi.timestamp + n_steps * dt)


def evolve_exact(psi: Wavefunction, h: Hamiltonian, t: float) -> Wavefunction:
    """exp(-iHt) psi through the eigendecomposition of h (exact for the grid H)."""
    w, v = h.spectrum
    c = v.T @ psi.amplitudes[1:-1]
    out = np.zeros(psi.grid.n_points, dtype=complex)
    out[1:-1] = v @ (np.exp(-1j * w * t) * c)
    return Wavefunction(psi.grid, out, psi.timestamp + t)


def prob_in_region(psi: Wavefunction, region: tuple[float, float]) -> float:
    """Probability mass on grid points x_lo <= x < x_hi."""
    x_lo, x_hi = region
    if x_lo > x_hi:
        raise ValidationError(f"inverted region: x_lo={x_lo} > x_hi={x_hi}")
    g = psi.grid
    if x_lo < g.x_min or x_hi > g.x_max:
        raise ValidationError(f"region [{x_lo}, {x_hi}] outside grid [{g.x_min}, {g.x_max}]")
    a = psi.amplitudes[g.index_region(x_lo, x_hi)]
    return float(np.sum(a.real**2 + a.imag**2) * g.dx)


# -- CSV layout: "# timestamp=<t> x_min=<a> x_max=<b> n_points=<n>" then x,re,im


def wavefunction_to_csv(psi: Wavefunction) -> str:
    g = psi.grid
    buf = io.StringIO()
    buf.write(
        f"# timestamp={psi.timestamp!r} x_min={g.x_min!r} x_max={g.x_max!r} n_points={g.n_points}\n"
    )
    buf.write("x,re,im\n")
    for xi, ai in zip(g.x.tolist(), psi.amplitudes.tolist()):
        buf.write(f"{xi!r},{ai.real!r},{ai.imag!r}\n")
    return buf.getvalue()


def wavefunction_from_csv(text: str) -> Wavefunction:
    lines = text.splitlines()
    meta = dict(item.split("=", 1) for item in lines[0].lstrip("# ").split())
    grid = Grid(float(meta["x_min"]), float(meta["x_max"]), int(meta["n_points"]))
    rows = [ln.split(",") for ln in lines[2:] if ln]
    amps = np.array([complex(float(r[1]), float(r[2])) for r in rows])
    return Wavefunction(grid, amps, float(meta["timestamp"]))
