"""Kantorovich-Rubinshtein (bounded-Lipschitz) metric on finite spaces.

``kr(mu, nu) = max { sum_i f_i (mu_i - nu_i) : |f_i| <= 1, |f_i - f_j| <= rho(i, j) }``

The maximisation is a small dense LP, solved with HiGHS.  The solver output is
never trusted on its own: every answer carries a certificate made of a
feasible witness (the LP point pushed through a 1-Lipschitz inf-convolution
and clipped to the box) and a weak-duality upper bound built from the
solver's inequality multipliers.  Answers whose certificate gap exceeds the
tolerance raise :class:`KRCertificateError`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .gaps import GapSeries
from .measures import Measure, _check_same
from .space import FiniteMetricSpace

CERT_TOL = 1e-9
META_TOL = 1e-12


def lipschitz_constant(values: np.ndarray, metric: np.ndarray) -> float:
    v = np.asarray(values, dtype=float)
    n = v.size
    if n < 2:
        return 0.0
    off = ~np.eye(n, dtype=bool)
    return float((np.abs(v[:, None] - v[None, :])[off] / metric[off]).max())


@dataclass(frozen=True, eq=False)
class RealFunction:
    """Values of a real function on the points of a space, with its sup-norm
    bound and Lipschitz constant."""

    space: FiniteMetricSpace
    values: np.ndarray
    bound: Optional[float] = None
    lip_const: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != (len(self.space),):
            raise ValueError(f"{v.size} values for a {len(self.space)}-point space")
        if not np.all(np.isfinite(v)):
            raise ValueError("function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        bound = float(np.abs(v).max()) if v.size else 0.0
        lip = lipschitz_constant(v, self.space.metric)
        for attr, actual in (("bound", bound), ("lip_const", lip)):
            stored = getattr(self, attr)
            if stored is None:
                object.__setattr__(self, attr, actual)
            elif abs(stored - actual) > META_TOL * max(1.0, abs(actual)):
                raise ValueError(f"stored {attr} {stored!r} disagrees with recomputed {actual!r}")

    @classmethod
    def constant(cls, space: FiniteMetricSpace, c: float, name: str = "") -> "RealFunction":
        return cls(space, np.full(len(space), float(c)), name=name or f"const({c!r})")

    @classmethod
    def indicator(cls, space: FiniteMetricSpace, pids, name: str = "") -> "RealFunction":
        return cls(space, space.indicator(pids), name=name)

    def __call__(self, pid) -> float:
        return float(self.values[self.space.index(pid)])

    def scaled(self, alpha: float) -> "RealFunction":
        return RealFunction(self.space, alpha * self.values, name=f"{alpha!r}*{self.name}")


@dataclass(frozen=True, eq=False)
class FunctionFamily:
    """A finite family of functions on one space, uniformly bounded by ``uniform_bound``."""

    space: FiniteMetricSpace
    members: tuple
    uniform_bound: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        for f in self.members:
            _check_same(f.space, self.space)
        actual = max((f.bound for f in self.members), default=0.0)
        if self.uniform_bound is None:
            object.__setattr__(self, "uniform_bound", actual)
        elif actual > self.uniform_bound:
            raise ValueError(f"member bound {actual!r} exceeds uniform bound {self.uniform_bound!r}")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def lip_const(self) -> float:
        """Shared Lipschitz constant (the family's equicontinuity modulus)."""
        return max((f.lip_const for f in self.members), default=0.0)

    def matrix(self) -> np.ndarray:
        return np.vstack([f.values for f in self.members]) if self.members else np.zeros((0, len(self.space)))


class KRCertificateError(RuntimeError):
    pass


class KRCertificate(NamedTuple):
    primal: float        # objective at the repaired feasible witness
    dual_bound: float    # weak-duality upper bound
    gap: float           # dual_bound - primal
    max_violation: float # worst constraint violation of the witness


class KRResult(NamedTuple):
    value: float
    witness: RealFunction
    certificate: KRCertificate


def _lp_constraints(metric: np.ndarray):
    n = metric.shape[0]
    ii, jj = np.nonzero(~np.eye(n, dtype=bool))
    # |f| <= 1 already caps differences at 2
    keep = metric[ii, jj] < 2.0
    ii, jj = ii[keep], jj[keep]
    m = ii.size
    rows = np.repeat(np.arange(m), 2)
    cols = np.column_stack([ii, jj]).reshape(-1)
    vals = np.tile([1.0, -1.0], m)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    return A, metric[ii, jj]


def _repair(f: np.ndarray, metric: np.ndarray) -> np.ndarray:
    g = np.min(f[None, :] + metric, axis=1)
    return np.clip(g, -1.0, 1.0)


def kr_solve(diff: np.ndarray, metric: np.ndarray, tol: float = CERT_TOL
             ) -> tuple[float, np.ndarray, KRCertificate]:
    """Certified maximum of ``diff . f`` over the bounded-Lipschitz unit ball."""
    d = np.asarray(diff, dtype=float)
    n = d.size
    if n == 1 or not np.any(d):
        f = np.zeros(n)
        return 0.0, f, KRCertificate(0.0, 0.0, 0.0, 0.0)
    A, b = _lp_constraints(metric)
    c = -d
    res = linprog(c, A_ub=A if b.size else None, b_ub=b if b.size else None,
                  bounds=[(-1.0, 1.0)] * n, method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise KRCertificateError(f"LP solver failed: {res.message}")
    g = _repair(res.x, metric)
    primal = float(d @ g)
    viol = max(0.0, float(np.abs(g).max() - 1.0))
    if n > 1:
        off = ~np.eye(n, dtype=bool)
        viol = max(viol, float((np.abs(g[:, None] - g[None, :]) - metric)[off].max()))
    if b.size:
        y = np.minimum(res.ineqlin.marginals, 0.0)
        r = c - A.T @ y
        lower_min = float(y @ b) - float(np.abs(r).sum())
    else:
        lower_min = -float(np.abs(c).sum())
    dual = -lower_min
    gap = dual - primal
    if viol > META_TOL or abs(gap) > tol:
        raise KRCertificateError(
            f"uncertified KR value: primal {primal!r}, dual bound {dual!r}, violation {viol!r}")
    return primal, g, KRCertificate(primal, dual, gap, viol)


def kr_distance(mu: Measure, nu: Measure, tol: float = CERT_TOL) -> KRResult:
    """Kantorovich-Rubinshtein distance with witness and optimality certificate."""
    _check_same(mu.space, nu.space)
    value, f, cert = kr_solve(mu.weights - nu.weights, mu.space.metric, tol)
    return KRResult(value, RealFunction(mu.space, f, name="kr_witness"), cert)


def weak_gap_series(mus: Sequence[Measure], mu_limit: Measure, **judge) -> GapSeries:
    """KR distance of each ``mus[n]`` to ``mu_limit``."""
    gaps = [kr_distance(m, mu_limit).value for m in mus]
    return GapSeries("weak", np.maximum(gaps, 0.0), "kr", **judge)


def uniform_family_gap(D: FunctionFamily, mus: Sequence[Measure], mu_limit: Measure,
                       **judge) -> GapSeries:
    """``sup_{f in D} |int f dmu_n - int f dmu|`` for each n."""
    if len(D) == 0:
        raise ValueError("empty function family")
    F = D.matrix()
    for m in (*mus, mu_limit):
        _check_same(m.space, D.space)
    diffs = np.vstack([m.weights - mu_limit.weights for m in mus])
    gaps = np.abs(diffs @ F.T).max(axis=1)
    return GapSeries("uniform", gaps, "family", **judge)
