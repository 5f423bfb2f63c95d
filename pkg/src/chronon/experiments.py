"""Simulated experimental programs run against a quench scenario.

All sampling goes through ``sample_detection`` with stream keys
(program, phase, ...), so each phase is an independent re-preparation of the
system and every report can be replayed from its seed.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ValidationError, prob_in_region
from .models import QuenchScenario, state_at
from .stats import TestResult, TrialBatch, sample_detection, two_proportion_test

__all__ = [
    "Verdict",
    "SignalingConfig",
    "SignalResult",
    "ExperimentReport",
    "ScanTable",
    "VBoundResult",
    "classify",
    "run_signaling",
    "run_probability_protocol",
    "run_detector_scan",
    "estimate_v_bound",
]


class Verdict(str, enum.Enum):
    RELATIVITY_VIOLATING = "RelativityViolating"
    QM_VIOLATING = "QMViolating"
    DISCRETENESS_CONSISTENT = "DiscretenessConsistent"
    INCONCLUSIVE = "Inconclusive"


def classify(p0_px: bool, p0_py: bool, px_py: bool) -> Verdict:
    """Map the three "significantly different" flags onto a verdict.

    p0 != px wins outright. Otherwise p0 = px != py needs py to differ from
    both; p0 = px = py needs all three pairs equal. Any other pattern
    contradicts itself and is Inconclusive.
    """
    if p0_px:
        return Verdict.RELATIVITY_VIOLATING
    if p0_py and px_py:
        return Verdict.QM_VIOLATING
    if not p0_py and not px_py:
        return Verdict.DISCRETENESS_CONSISTENT
    return Verdict.INCONCLUSIVE


def _check_region(scenario: QuenchScenario, region) -> tuple[float, float]:
    lo, hi = float(region[0]), float(region[1])
    g = scenario.grid
    if not (g.x_min <= lo < hi <= g.x_max):
        raise ValidationError(f"detector region [{lo}, {hi}] must lie inside the grid [{g.x_min}, {g.x_max}]")
    return lo, hi


def _check_centered(scenario: QuenchScenario, region, l: float) -> None:
    center = 0.5 * (region[0] + region[1])
    if abs(center - (scenario.well.x_A + l)) > 1e-9 * max(1.0, abs(l)):
        raise ValidationError(
            f"detector region must be centered at x_A + l = {scenario.well.x_A + l}, got center {center}"
        )


@dataclass(frozen=True)
class SignalingConfig:
    scenario: QuenchScenario
    l: float
    detector_region: tuple[float, float]
    N: int
    delta_t: float
    bit: int
    alpha: float = 0.001

    def __post_init__(self):
        if self.N < 2 or self.N % 2:
            raise ValidationError(f"N must be even and >= 2, got {self.N}")
        if not self.delta_t > 0:
            raise ValidationError("delta_t must be positive")
        if self.bit not in (0, 1):
            raise ValidationError("bit must be 0 or 1")
        _check_region(self.scenario, self.detector_region)
        _check_centered(self.scenario, self.detector_region, self.l)


@dataclass(frozen=True)
class SignalResult:
    test: TestResult
    decoded_bit: int
    superluminal: bool
    first_half: TrialBatch
    second_half: TrialBatch

    def to_dict(self) -> dict:
        return {
            "test": self.test.to_dict(),
            "decoded_bit": self.decoded_bit,
            "superluminal": self.superluminal,
            "first_half": self.first_half.to_dict(),
            "second_half": self.second_half.to_dict(),
        }


def run_signaling(config: SignalingConfig, seed: int) -> SignalResult:
    """Alice quenches the first N/2 copies (bit 1) or none (bit 0); Charlie
    compares detection rates of the two halves at t1 + delta_t."""
    scn = config.scenario
    region = config.detector_region
    t_read = scn.well.t1 + config.delta_t
    p_rest = prob_in_region(scn.psi0, region)
    p_first = prob_in_region(state_at(scn, t_read), region) if config.bit else p_rest
    half = config.N // 2
    a = sample_detection(min(max(p_first, 0.0), 1.0), half, seed, ("signal", "first"))
    b = sample_detection(min(max(p_rest, 0.0), 1.0), half, seed, ("signal", "second"))
    test = two_proportion_test(a, b, config.alpha)
    decoded = int(test.significant)
    superluminal = bool(config.bit == 1 and decoded == 1 and config.l > scn.c_sim * config.delta_t)
    return SignalResult(test, decoded, superluminal, a, b)


@dataclass
class ExperimentReport:
    p0: TrialBatch
    px: TrialBatch | None
    py: TrialBatch | None
    tests: dict[str, TestResult]
    verdict: Verdict
    ps: TrialBatch | None = None
    config: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def p0_hat(self) -> float:
        return self.p0.p_hat

    @property
    def px_hat(self) -> float:
        return self.px.p_hat if self.px else float("nan")

    @property
    def py_hat(self) -> float:
        return self.py.p_hat if self.py else float("nan")

    def to_dict(self) -> dict:
        opt = lambda b: None if b is None else b.to_dict()
        return {
            "p0": self.p0.to_dict(),
            "px": opt(self.px),
            "py": opt(self.py),
            "ps": opt(self.ps),
            "estimates": {
                "p0_hat": self.p0.p_hat,
                "px_hat": None if self.px is None else self.px.p_hat,
                "py_hat": None if self.py is None else self.py.p_hat,
                "ps_hat": None if self.ps is None else self.ps.p_hat,
            },
            "tests": {k: v.to_dict() for k, v in sorted(self.tests.items())},
            "verdict": self.verdict.value,
            "config": self.config,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        opt = lambda x: None if x is None else TrialBatch.from_dict(x)
        return cls(
            p0=TrialBatch.from_dict(d["p0"]),
            px=opt(d.get("px")),
            py=opt(d.get("py")),
            ps=opt(d.get("ps")),
            tests={k: TestResult.from_dict(v) for k, v in d["tests"].items()},
            verdict=Verdict(d["verdict"]),
            config=d.get("config", {}),
            seed=d.get("seed"),
        )


def run_probability_protocol(
    scenario: QuenchScenario,
    detector_region,
    l: float,
    t_x: float,
    t_y: float,
    N_per_phase: int,
    seed: int,
    *,
    alpha: float = 0.001,
    config: dict | None = None,
) -> ExperimentReport:
    """Estimate p0 (before the quench), px (t_x after) and py (t_y after) from
    independent preparations and classify the pattern of differences."""
    c = scenario.c_sim
    L = scenario.well.L
    if not t_x < l / c:
        raise ValidationError(f"timing constraint t_x < l/c violated: t_x={t_x}, l/c={l / c}")
    if not (l / c < t_y < L / c):
        raise ValidationError(
            f"timing constraint l/c < t_y < L/c violated: t_y={t_y}, l/c={l / c}, L/c={L / c}"
        )
    if t_x < 0:
        raise ValidationError("t_x must be >= 0")
    if N_per_phase < 1:
        raise ValidationError("N_per_phase must be >= 1")
    region = _check_region(scenario, detector_region)
    _check_centered(scenario, region, l)
    t1 = scenario.well.t1
    probs = {
        "p0": prob_in_region(scenario.psi0, region),
        "px": prob_in_region(state_at(scenario, t1 + t_x), region),
        "py": prob_in_region(state_at(scenario, t1 + t_y), region),
    }
    batches = {
        k: sample_detection(min(max(p, 0.0), 1.0), N_per_phase, seed, ("protocol", k))
        for k, p in probs.items()
    }
    tests = {
        "p0_px": two_proportion_test(batches["p0"], batches["px"], alpha),
        "p0_py": two_proportion_test(batches["p0"], batches["py"], alpha),
        "px_py": two_proportion_test(batches["px"], batches["py"], alpha),
    }
    verdict = classify(*(tests[k].significant for k in ("p0_px", "p0_py", "px_py")))
    return ExperimentReport(
        batches["p0"], batches["px"], batches["py"], tests, verdict, config=config or {}, seed=seed
    )


@dataclass
class ScanTable:
    positions: np.ndarray
    times: np.ndarray
    window_width: float
    n: int
    p_hat: np.ndarray  # (position, time)
    z: np.ndarray
    significant: np.ndarray
    baseline: list[TrialBatch]
    alpha_cell: float

    @property
    def change_time(self) -> float | None:
        cols = np.flatnonzero(self.significant.any(axis=0))
        return float(self.times[cols[0]]) if cols.size else None

    @property
    def ever_changed(self) -> np.ndarray:
        return self.significant.any(axis=1)

    @property
    def partial_change(self) -> bool:
        """Some time shows a strict, non-empty subset of the changing positions."""
        changing = self.ever_changed
        if not changing.any():
            return False
        for j in range(self.times.size):
            s = self.significant[:, j]
            if s.any() and not np.array_equal(s, changing):
                return True
        return False

    @property
    def simultaneous_change(self) -> bool:
        """Every changing position flips between the same pair of adjacent times
        and stays flipped."""
        changing = self.ever_changed
        if not changing.any():
            return False
        j0 = int(np.flatnonzero(self.significant.any(axis=0))[0])
        before = self.significant[:, :j0]
        after = self.significant[:, j0:]
        return not before.any() and bool(np.all(after[changing]))

    def summary(self) -> dict:
        return {
            "change_time": self.change_time,
            "simultaneous_change": self.simultaneous_change,
            "partial_change": self.partial_change,
            "n_changing_positions": int(self.ever_changed.sum()),
            "alpha_cell": self.alpha_cell,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("position,time,p_hat,n,z_vs_baseline,significant\n")
        for i, x in enumerate(self.positions.tolist()):
            for j, t in enumerate(self.times.tolist()):
                buf.write(
                    f"{x!r},{t!r},{float(self.p_hat[i, j])!r},{self.n},"
                    f"{float(self.z[i, j])!r},{int(self.significant[i, j])}\n"
                )
        return buf.getvalue()


def run_detector_scan(
    scenario: QuenchScenario,
    window_width: float,
    sample_times,
    positions,
    N: int,
    seed: int,
    *,
    alpha: float = 0.001,
) -> ScanTable:
    """Detection rate for every (detector position, time) cell against a
    pre-quench baseline at the same position.

    Cells are tested at alpha / n_cells so that the summary flags describe
    the whole table at family-wise level alpha.
    """
    times = np.asarray(sample_times, dtype=float)
    pos = np.asarray(positions, dtype=float)
    if times.size == 0 or pos.size == 0:
        raise ValidationError("scan needs at least one position and one time")
    if np.any(times < scenario.well.t1):
        raise ValidationError("scan sample_times must be >= t1")
    regions = [_check_region(scenario, (x - window_width / 2, x + window_width / 2)) for x in pos]
    alpha_cell = alpha / (pos.size * times.size)
    states = [state_at(scenario, t) for t in times]
    baseline = [
        sample_detection(prob_in_region(scenario.psi0, r), N, seed, ("scan", i, "baseline"))
        for i, r in enumerate(regions)
    ]
    p_hat = np.zeros((pos.size, times.size))
    z = np.zeros_like(p_hat)
    sig = np.zeros(p_hat.shape, dtype=bool)
    for i, r in enumerate(regions):
        for j, st in enumerate(states):
            p = min(max(prob_in_region(st, r), 0.0), 1.0)
            batch = sample_detection(p, N, seed, ("scan", i, j))
            test = two_proportion_test(batch, baseline[i], alpha_cell)
            p_hat[i, j] = batch.p_hat
            z[i, j] = test.z_statistic
            sig[i, j] = test.significant
    return ScanTable(pos, times, window_width, N, p_hat, z, sig, baseline, alpha_cell)


@dataclass
class VBoundResult:
    steps: list[dict]
    first_significant_t_s: float | None
    bracket: tuple[float, float]
    no_transition: bool
    L_prime: float

    @property
    def bounds(self) -> list[float]:
        return [s["v_upper"] for s in self.steps if s["v_upper"] is not None]

    def to_dict(self) -> dict:
        lo, hi = self.bracket
        return {
            "steps": self.steps,
            "first_significant_t_s": self.first_significant_t_s,
            "bracket": [lo, None if math.isinf(hi) else hi],
            "no_transition": self.no_transition,
            "L_prime": self.L_prime,
        }


def estimate_v_bound(
    scenario: QuenchScenario,
    detector_region,
    t_s_schedule,
    N: int,
    seed: int,
    L_prime: float,
    *,
    alpha: float = 0.001,
) -> VBoundResult:
    """Walk an increasing schedule of waiting times. While p_s stays equal to
    p0 the response has not arrived, so v < L'/(t_s - t1); the first
    significant step shows it has, so v >= L'/(t_s - t1)."""
    sched = [float(t) for t in t_s_schedule]
    if not sched:
        raise ValidationError("t_s_schedule must not be empty")
    t1 = scenario.well.t1
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValidationError("t_s_schedule must be strictly increasing")
    if sched[0] <= t1:
        raise ValidationError("every t_s must be later than the quench time t1")
    if not L_prime > 0:
        raise ValidationError("L_prime must be positive")
    region = _check_region(scenario, detector_region)
    base = sample_detection(prob_in_region(scenario.psi0, region), N, seed, ("vbound", "p0"))
    steps = []
    first_sig = None
    for k, t in enumerate(sched):
        p = min(max(prob_in_region(state_at(scenario, t), region), 0.0), 1.0)
        batch = sample_detection(p, N, seed, ("vbound", k))
        test = two_proportion_test(batch, base, alpha)
        elapsed = t - t1
        steps.append(
            {
                "t_s": t,
                "ps_hat": batch.p_hat,
                "z": test.z_statistic,
                "significant": test.significant,
                "v_upper": None if test.significant else L_prime / elapsed,
            }
        )
        if test.significant:
            first_sig = t
            break
    uppers = [s["v_upper"] for s in steps if s["v_upper"] is not None]
    hi = uppers[-1] if uppers else math.inf
    lo = L_prime / (first_sig - t1) if first_sig is not None else 0.0
    return VBoundResult(steps, first_sig, (lo, hi), first_sig is None, L_prime)
