"""Joint measures on S1 x S2, kernel tables, kernel families along sequences,
mixing against measures on the parameter space, and the integral transform
of parameterised functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .kr import FunctionFamily, RealFunction, weak_gap_series
from .measures import PROB_TOL, Measure, SpaceMismatchError, _check_same, same_space
from .regularize import ParamFunction
from .space import ConvergentSequence, FiniteMetricSpace, product_space


@dataclass(frozen=True, eq=False)
class JointMeasure:
    """A probability measure on S1 x S2 as a ``(|S1|, |S2|)`` mass matrix."""

    s1_space: FiniteMetricSpace
    s2_space: FiniteMetricSpace
    mass: np.ndarray

    def __post_init__(self):
        m = np.array(self.mass, dtype=float)
        if m.shape != (len(self.s1_space), len(self.s2_space)):
            raise ValueError(f"mass has shape {m.shape}, expected "
                             f"({len(self.s1_space)}, {len(self.s2_space)})")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValueError("joint mass must be finite and nonnegative")
        if abs(m.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"joint mass sums to {m.sum()!r}")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    @classmethod
    def dirac(cls, s1_space, s2_space, s1, s2) -> "JointMeasure":
        m = np.zeros((len(s1_space), len(s2_space)))
        m[s1_space.index(s1), s2_space.index(s2)] = 1.0
        return cls(s1_space, s2_space, m)

    @classmethod
    def product(cls, mu: Measure, nu: Measure) -> "JointMeasure":
        return cls(mu.space, nu.space, np.outer(mu.weights, nu.weights))

    def __call__(self, a_pids, b_pids) -> float:
        """Mass of the rectangle ``A x B``."""
        i = self.s1_space.indices(a_pids)
        j = self.s2_space.indices(b_pids)
        return float(self.mass[np.ix_(i, j)].sum())

    def shares_spaces(self, other: "JointMeasure") -> bool:
        return same_space(self.s1_space, other.s1_space) and same_space(self.s2_space, other.s2_space)


def marginal_s1(P: JointMeasure) -> Measure:
    return Measure(P.s1_space, P.mass.sum(axis=1))


def marginal_s2(P: JointMeasure) -> Measure:
    return Measure(P.s2_space, P.mass.sum(axis=0))


@dataclass(frozen=True, eq=False)
class ParamKernel:
    """A stochastic kernel on S1 x S2 given a finite parameter space, as a table.

    For a product parameter space (built with :func:`product_space`) the table
    keys are pairs ``(s3, s4)``.
    """

    s1_space: FiniteMetricSpace
    s2_space: FiniteMetricSpace
    param_space: FiniteMetricSpace
    table: Mapping[Any, JointMeasure]

    def __post_init__(self):
        table = dict(self.table)
        missing = [p for p in self.param_space.point_ids if p not in table]
        if missing:
            raise KeyError(f"kernel table has no entry for {missing[:5]!r}")
        for p, P in table.items():
            if not (same_space(P.s1_space, self.s1_space) and same_space(P.s2_space, self.s2_space)):
                raise SpaceMismatchError(f"table entry {p!r} lives on other spaces")
        object.__setattr__(self, "table", table)

    def __getitem__(self, p) -> JointMeasure:
        try:
            return self.table[p]
        except KeyError:
            raise KeyError(f"kernel table has no entry for {p!r}") from None

    @property
    def is_product(self) -> bool:
        return self.param_space.factors is not None

    def relabel_s1(self, perm: Sequence[int]) -> "ParamKernel":
        s1 = self.s1_space.relabel(perm)
        return ParamKernel(s1, self.s2_space, self.param_space,
                           {p: JointMeasure(s1, self.s2_space, P.mass[list(perm)]) for p, P in self.table.items()})


@dataclass(frozen=True)
class Provenance:
    kind: str                                  # "param" or "hat"
    kernel: Optional[ParamKernel] = None
    sequence: Optional[ConvergentSequence] = None
    notes: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class KernelFamily:
    """Joint measures ``P_1, ..., P_N`` and the limit ``P``."""

    joints: tuple
    limit: JointMeasure
    provenance: Optional[Provenance] = None

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        for P in self.joints:
            if not P.shares_spaces(self.limit):
                raise SpaceMismatchError("family members live on different spaces")

    def __len__(self) -> int:
        return len(self.joints)

    @property
    def s1_space(self) -> FiniteMetricSpace:
        return self.limit.s1_space

    @property
    def s2_space(self) -> FiniteMetricSpace:
        return self.limit.s2_space

    @property
    def limit_point(self):
        if self.provenance is not None and self.provenance.sequence is not None:
            return self.provenance.sequence.limit
        return None

    def differences(self) -> np.ndarray:
        """Stack ``P_n - P`` with shape ``(N, |S1|, |S2|)``."""
        if not self.joints:
            return np.zeros((0, len(self.s1_space), len(self.s2_space)))
        return np.stack([P.mass for P in self.joints]) - self.limit.mass[None]


def family_from_param(K: ParamKernel, seq: ConvergentSequence) -> KernelFamily:
    """The family ``K(. | s^(n)) -> K(. | s)`` along a parameter sequence."""
    if not same_space(seq.space, K.param_space):
        raise SpaceMismatchError("sequence does not run in the kernel's parameter space")
    return KernelFamily([K[p] for p in seq.entries], K[seq.limit],
                        Provenance("param", K, seq))


def integrate_kernel(Xi: ParamKernel, mu: Measure, s4=None) -> JointMeasure:
    """Mix the kernel table against ``mu`` on S3 (at a fixed ``s4`` for product parameters)."""
    if Xi.is_product:
        s3_space, s4_space = Xi.param_space.factors
        if s4 is None:
            raise ValueError("product-parameter kernel needs an s4 point")
        if s4 not in s4_space:
            raise KeyError(f"unknown s4 point {s4!r}")
        keys = [(p, s4) for p in s3_space.point_ids]
    else:
        s3_space = Xi.param_space
        keys = list(s3_space.point_ids)
    if not same_space(mu.space, s3_space):
        raise SpaceMismatchError("mixing measure does not live on S3")
    stack = np.stack([Xi[k].mass for k in keys])
    mass = np.tensordot(mu.weights, stack, axes=1)
    return JointMeasure(Xi.s1_space, Xi.s2_space, mass)


def hat_family(Xi: ParamKernel, mus: Sequence[Measure], mu_limit: Measure,
               s4_seq: Optional[ConvergentSequence] = None) -> KernelFamily:
    """Family of mixtures ``integrate_kernel(Xi, mus[n], s4^(n))``.

    The weak convergence of ``mus`` is measured (KR gap series stored under
    ``provenance.notes["weak"]``) but not enforced.
    """
    if Xi.is_product:
        if s4_seq is None:
            raise ValueError("product-parameter kernel needs an s4 sequence")
        if len(s4_seq) != len(mus):
            raise ValueError("s4 sequence and mixing measures differ in length")
        s4s, s4_lim = list(s4_seq.entries), s4_seq.limit
    else:
        s4s, s4_lim = [None] * len(mus), None
    joints = [integrate_kernel(Xi, m, s) for m, s in zip(mus, s4s)]
    limit = integrate_kernel(Xi, mu_limit, s4_lim)
    weak = weak_gap_series(mus, mu_limit) if mus else None
    return KernelFamily(joints, limit, Provenance("hat", Xi, s4_seq, {"weak": weak}))


@dataclass(frozen=True, eq=False)
class MeasureKernel:
    """A kernel on S2 given S3: one probability measure on S2 per S3 point."""

    s2_space: FiniteMetricSpace
    param_space: FiniteMetricSpace
    table: Mapping[Any, Measure]

    def __post_init__(self):
        table = dict(self.table)
        for p in self.param_space.point_ids:
            if p not in table:
                raise KeyError(f"kernel table has no entry for {p!r}")
            _check_same(table[p].space, self.s2_space)
        object.__setattr__(self, "table", table)

    def __getitem__(self, p) -> Measure:
        return self.table[p]

    def matrix(self) -> np.ndarray:
        """Rows ``Q(. | s3)`` in parameter-space order."""
        return np.vstack([self.table[p].weights for p in self.param_space.point_ids])

    @classmethod
    def from_param_kernel(cls, K: ParamKernel) -> "MeasureKernel":
        if len(K.s1_space) != 1:
            raise ValueError("only kernels with a one-point S1 factor reduce to measure kernels")
        return cls(K.s2_space, K.param_space,
                   {p: Measure(K.s2_space, P.mass[0]) for p, P in K.table.items()})


def push_family(A: Sequence[ParamFunction], Q) -> FunctionFamily:
    """``{(s1, s3) -> sum_{s2} f(s1, s2) Q(s2 | s3) : f in A}`` on the product S1 x S3.

    ``Q`` is a :class:`MeasureKernel` or a :class:`ParamKernel` with a one-point
    S1 factor.  Sums are correctly rounded (``math.fsum``); weights that sum to
    one only up to rounding can still push a value past ``M`` by an ulp, so
    the result is clamped to ``[-M, M]``, which the exact transform respects.
    """
    if isinstance(Q, ParamKernel):
        Q = MeasureKernel.from_param_kernel(Q)
    if not A:
        raise ValueError("empty parameterised family")
    s1 = A[0].s1_space
    for f in A:
        _check_same(f.s2_space, Q.s2_space)
        _check_same(f.s1_space, s1)
    W = Q.matrix()
    space = product_space(s1, Q.param_space)
    bound = max(f.uniform_bound for f in A)
    members = []
    for k, f in enumerate(A):
        g = np.array([[math.fsum(f.values[i] * W[j]) for j in range(W.shape[0])]
                      for i in range(len(s1))])
        g = np.clip(g, -bound, bound)
        members.append(RealFunction(space, g.reshape(-1), name=f.name or f"g{k}"))
    return FunctionFamily(space, members, uniform_bound=bound)
