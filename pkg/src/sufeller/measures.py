"""Measures and signed vectors on finite spaces.

Suprema and infima of ``B -> sum_{i in B} d_i`` over all subsets ``B`` are read
off the Jordan decomposition: the supremum is the positive mass, the infimum
minus the negative mass.  Subset enumeration is kept in :mod:`sufeller.oracles`
for cross-checking only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .space import FiniteMetricSpace

PROB_TOL = 1e-12


class SpaceMismatchError(ValueError):
    pass


def same_space(a: FiniteMetricSpace, b: FiniteMetricSpace) -> bool:
    if a is b:
        return True
    return a.point_ids == b.point_ids and np.array_equal(a.metric, b.metric)


def _check_same(a: FiniteMetricSpace, b: FiniteMetricSpace) -> None:
    if not same_space(a, b):
        raise SpaceMismatchError("measures live on different spaces")


@dataclass(frozen=True, eq=False)
class Measure:
    """Nonnegative weights on the points of a space."""

    space: FiniteMetricSpace
    weights: np.ndarray
    probability: bool = True

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape != (len(self.space),):
            raise ValueError(f"{w.size} weights for a {len(self.space)}-point space")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("measure weights must be finite and nonnegative")
        if self.probability and abs(w.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probability weights sum to {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, space: FiniteMetricSpace, pid) -> "Measure":
        w = np.zeros(len(space))
        w[space.index(pid)] = 1.0
        return cls(space, w)

    @classmethod
    def uniform(cls, space: FiniteMetricSpace) -> "Measure":
        return cls(space, np.full(len(space), 1.0 / len(space)))

    def __call__(self, pids) -> float:
        return float(self.weights[self.space.indices(pids)].sum())

    def __sub__(self, other: "Measure") -> "SignedVector":
        _check_same(self.space, other.space)
        return SignedVector(self.space, self.weights - other.weights)

    def integrate(self, f) -> float:
        return float(np.dot(np.asarray(f, dtype=float), self.weights))


@dataclass(frozen=True, eq=False)
class SignedVector:
    space: FiniteMetricSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("signed vector has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


class Jordan(NamedTuple):
    pos_sum: float
    neg_sum: float


class Extremes(NamedTuple):
    sup: float
    inf: float
    sup_abs: float


def _values(d) -> np.ndarray:
    return d.values if isinstance(d, SignedVector) else np.asarray(d, dtype=float)


def jordan(d) -> Jordan:
    """Positive and negative masses of a signed vector."""
    v = _values(d)
    return Jordan(float(np.maximum(v, 0.0).sum()), float(np.maximum(-v, 0.0).sum()))


def extreme_over_sets(d) -> Extremes:
    """Sup, inf and sup of absolute value of ``B -> d(B)`` over all subsets ``B``."""
    pos, neg = jordan(d)
    return Extremes(pos, -neg, max(pos, neg))


def pos_parts(d: np.ndarray) -> np.ndarray:
    """Row-wise positive mass of a stack of signed vectors (last axis summed)."""
    return np.maximum(d, 0.0).sum(axis=-1)


def neg_parts(d: np.ndarray) -> np.ndarray:
    return np.maximum(-d, 0.0).sum(axis=-1)


def tv_distance(mu: Measure, nu: Measure) -> float:
    """Total-variation distance ``sup_C |mu(C) - nu(C)|``."""
    return extreme_over_sets(mu - nu).sup_abs
