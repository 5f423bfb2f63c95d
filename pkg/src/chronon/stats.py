"""Born-rule detection sampling and the two-proportion test.

Randomness comes from Philox, a counter-based generator: each (seed, stream)
pair maps to its own 128-bit key, so any batch can be regenerated on its own
and parallel batches never share a stream.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ValidationError

__all__ = [
    "TrialBatch",
    "TestResult",
    "stream_generator",
    "sample_detection",
    "two_proportion_test",
    "merge_batches",
    "mutual_information",
]


def _stream_key(seed: int, stream) -> int:
    if isinstance(stream, (list, tuple)):
        parts = [str(s) for s in stream]
    else:
        parts = [str(stream)]
    msg = "\x1f".join([str(int(seed)), *parts]).encode()
    return int.from_bytes(hashlib.blake2b(msg, digest_size=16).digest(), "little")


def stream_generator(seed: int, stream) -> np.random.Generator:
    """Independent generator for one (seed, stream) pair."""
    return np.random.Generator(np.random.Philox(key=_stream_key(seed, stream)))


def _stream_tuple(stream) -> tuple:
    return tuple(stream) if isinstance(stream, (list, tuple)) else (stream,)


@dataclass(frozen=True)
class TrialBatch:
    n_trials: int
    n_hits: int
    seed: int | None = None
    stream: tuple = ()

    def __post_init__(self):
        if self.n_trials < 0 or not 0 <= self.n_hits <= self.n_trials:
            raise ValidationError(f"invalid batch: {self.n_hits} hits in {self.n_trials} trials")

    @property
    def p_hat(self) -> float:
        return self.n_hits / self.n_trials if self.n_trials else float("nan")

    def to_dict(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "n_hits": self.n_hits,
            "seed": self.seed,
            "stream": list(self.stream),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrialBatch":
        return cls(int(d["n_trials"]), int(d["n_hits"]), d.get("seed"), tuple(d.get("stream", ())))


@dataclass(frozen=True)
class TestResult:
    z_statistic: float
    p_value: float
    significant: bool
    alpha: float

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return {
            "z_statistic": self.z_statistic,
            "p_value": self.p_value,
            "significant": self.significant,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestResult":
        return cls(float(d["z_statistic"]), float(d["p_value"]), bool(d["significant"]), float(d["alpha"]))


def sample_detection(p: float, n: int, seed: int, stream) -> TrialBatch:
    """Detect-or-not outcome of n independent measurements with hit probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"detection probability must lie in [0, 1], got {p}")
    if n < 1:
        raise ValidationError(f"need at least one trial, got {n}")
    hits = int(stream_generator(seed, stream).binomial(n, p))
    return TrialBatch(n, hits, seed, _stream_tuple(stream))


def merge_batches(batches: Sequence[TrialBatch]) -> TrialBatch:
    """Pool batches (hits and trials add); provenance is dropped."""
    return TrialBatch(sum(b.n_trials for b in batches), sum(b.n_hits for b in batches))


def two_proportion_test(a: TrialBatch, b: TrialBatch, alpha: float = 0.001) -> TestResult:
    """Pooled two-proportion z-test, two-sided."""
    if a.n_trials < 1 or b.n_trials < 1:
        raise ValidationError("two_proportion_test needs non-empty batches")
    pa, pb = a.n_hits / a.n_trials, b.n_hits / b.n_trials
    pooled = (a.n_hits + b.n_hits) / (a.n_trials + b.n_trials)
    var = pooled * (1.0 - pooled) * (1.0 / a.n_trials + 1.0 / b.n_trials)
    if var == 0.0:
        z = 0.0
    else:
        z = (pa - pb) / math.sqrt(var)
    p_value = math.erfc(abs(z) / math.sqrt(2.0))
    return TestResult(z, p_value, p_value < alpha, alpha)


def mutual_information(x: Sequence[int], y: Sequence[int]) -> float:
    """Plug-in estimate (bits) of I(X;Y) for two binary sequences."""
    x = np.asarray(x, dtype=int)
    y = np.asarray(y, dtype=int)
    if x.shape != y.shape or x.size == 0:
        raise ValidationError("mutual_information needs two equal-length, non-empty sequences")
    joint = np.zeros((2, 2))
    np.add.at(joint, (x, y), 1)
    joint /= x.size
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log2(joint[nz] / (px @ py)[nz])))
