"""Inf-convolution ``r^(m) f (s) = min_{s'} [f(s') + m * rho(s, s')]`` and the
regularised families built from parameterised functions.

On a finite space the operator recovers ``f`` exactly once ``m`` reaches the
Lipschitz constant of ``f``; :func:`recovery_order` gives the smallest integer
order with that property.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kr import FunctionFamily, RealFunction
from .measures import _check_same
from .space import ConvergentSequence, FiniteMetricSpace


def _check_order(m) -> int:
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise ValueError(f"regularisation order must be a positive integer, got {m!r}")
    return int(m)


def inf_convolve_values(values: np.ndarray, metric: np.ndarray, m: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    # the diagonal term is exactly v[s], so the result never exceeds v
    return np.min(v[None, :] + m * metric, axis=1)


def inf_convolve(f: RealFunction, m: int) -> RealFunction:
    """The m-Lipschitz lower regularisation of ``f``."""
    m = _check_order(m)
    vals = inf_convolve_values(f.values, f.space.metric, m)
    return RealFunction(f.space, vals, name=f"r{m}({f.name})" if f.name else f"r{m}")


def recovery_order(f: RealFunction) -> int:
    """Smallest positive integer m with ``inf_convolve(f, m) == f``."""
    return max(1, math.ceil(f.lip_const))


@dataclass(frozen=True, eq=False)
class ParamFunction:
    """A function ``f(s1, s2)`` on a product, read as a family of s2-sections
    indexed by s1."""

    s1_space: FiniteMetricSpace
    s2_space: FiniteMetricSpace
    values: np.ndarray
    uniform_bound: float = None
    name: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.s1_space), len(self.s2_space)):
            raise ValueError(f"values have shape {v.shape}, expected "
                             f"({len(self.s1_space)}, {len(self.s2_space)})")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        actual = float(np.abs(v).max())
        if self.uniform_bound is None:
            object.__setattr__(self, "uniform_bound", actual)
        elif actual > self.uniform_bound:
            raise ValueError(f"|values| reaches {actual!r} above the bound {self.uniform_bound!r}")

    def section(self, s1) -> RealFunction:
        return RealFunction(self.s2_space, self.values[self.s1_space.index(s1)],
                            name=f"{self.name}[{s1!r}]")

    @property
    def s2_lip_const(self) -> float:
        return max(self.section(p).lip_const for p in self.s1_space.point_ids)


def inf_convolve_param(f: ParamFunction, s1, m: int) -> RealFunction:
    """Regularise the s2-section of ``f`` at ``s1``."""
    if s1 not in f.s1_space:
        raise KeyError(f"unknown parameter point {s1!r}")
    return inf_convolve(f.section(s1), m)


def regularized_family(A: Sequence[ParamFunction], m: int) -> FunctionFamily:
    """All regularised sections ``{r^(m) f(s1, .) : f in A, s1 in S1}``.

    The family is bounded by the shared bound of ``A`` and every member is
    m-Lipschitz.
    """
    m = _check_order(m)
    if not A:
        raise ValueError("empty parameterised family")
    s1, s2 = A[0].s1_space, A[0].s2_space
    for f in A:
        _check_same(f.s1_space, s1)
        _check_same(f.s2_space, s2)
    bound = max(f.uniform_bound for f in A)
    members = [inf_convolve_param(f, p, m) for f in A for p in s1.point_ids]
    return FunctionFamily(s2, members, uniform_bound=bound)


def regularized_increment(A: Sequence[ParamFunction], seq: ConvergentSequence, s2, m: int, n: int) -> float:
    """``inf_{f in A} [r^(m) f(s1^(n), .)(s2) - f(s1, s2)]`` at one (m, n).

    ``seq`` runs in the s1-space; ``n`` is 1-based.
    """
    m = _check_order(m)
    s1n = seq.entries[n - 1]
    j = A[0].s2_space.index(s2)
    i_lim = A[0].s1_space.index(seq.limit)
    return min(float(inf_convolve_param(f, s1n, m).values[j] - f.values[i_lim, j]) for f in A)


def lipschitz_hull(space: FiniteMetricSpace, centers: np.ndarray, heights: np.ndarray,
                   lip: float, bound: float) -> np.ndarray:
    """Values of ``clip(min_k [h_k + lip * rho(., c_k)], -bound, bound)``.

    Any such function is ``lip``-Lipschitz; used by the instance generators.
    """
    c = np.asarray(centers, dtype=int)
    v = np.min(np.asarray(heights, dtype=float)[None, :] + lip * space.metric[:, c], axis=1)
    return np.clip(v, -bound, bound)
