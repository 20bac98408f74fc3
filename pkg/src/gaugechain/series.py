"""Finite-volume sequences of scalars with heuristic limit estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np


@dataclass(frozen=True)
class Extrapolation:
    method: str
    estimate: float
    uncertainty: float


@dataclass
class ThermoSeries:
    """Values ``(n, value)`` indexed by chain length, optionally with an identity defect per point."""

    label: str
    points: list = field(default_factory=list)
    defects: Optional[list] = None
    extrapolation: Optional[Extrapolation] = None

    def __post_init__(self):
        ns = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError(f"series {self.label!r}: n must be strictly increasing, got {ns}")
        if any(not math.isfinite(p[1]) for p in self.points):
            raise ValueError(f"series {self.label!r}: non-finite value")
        if self.defects is not None and len(self.defects) != len(self.points):
            raise ValueError("one defect per point required")

    @classmethod
    def from_values(cls, label: str, ns: Iterable[int], values: Iterable[float],
                    defects: Optional[Iterable[float]] = None, extrapolate: bool = True) -> "ThermoSeries":
        pts = [(int(n), float(v)) for n, v in zip(ns, values)]
        s = cls(label, pts, None if defects is None else [float(x) for x in defects])
        if extrapolate and len(pts) >= 1:
            s.extrapolation = richardson(s.ns, s.values)
        return s

    @property
    def ns(self) -> np.ndarray:
        return np.array([p[0] for p in self.points], dtype=int)

    @property
    def values(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=float)

    def value_at(self, n: int) -> float:
        for m, v in self.points:
            if m == n:
                return v
        raise KeyError(n)

    def __len__(self):
        return len(self.points)


def richardson(ns, values) -> Extrapolation:
    """Fit ``a + b/n + c/n^2`` through the last three points (fewer if unavailable).

    The uncertainty is the spread between the last value and the one- and
    two-term corrected estimates.
    """
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(values, dtype=float)
    last = float(vals[-1])
    if len(vals) == 1:
        return Extrapolation("last", last, float("nan"))
    two = np.linalg.solve(np.vander(1.0 / ns[-2:], 2, increasing=True), vals[-2:])[0]
    if len(vals) == 2:
        return Extrapolation("richardson2", float(two), abs(two - last))
    three = np.linalg.solve(np.vander(1.0 / ns[-3:], 3, increasing=True), vals[-3:])[0]
    cands = [last, two, three]
    return Extrapolation("richardson3", float(three), float(max(cands) - min(cands)))


def fit_inverse_n(ns, values) -> float:
    """Smallest ``c`` with ``|value_n| <= c / n`` at every listed ``n``."""
    ns = np.asarray(ns, dtype=float)
    return float(np.max(ns * np.abs(np.asarray(values, dtype=float))))
