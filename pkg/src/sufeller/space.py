"""Finite metric spaces, declared convergent sequences and declared test sets.

Every other module works on top of these three types.  A space is a finite
point set with a validated metric; a convergent sequence is a finite witness
``s^(1), ..., s^(N) -> s``; a test set is a subset of points together with the
topological role it is meant to play in the modelled (infinite) space.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

METRIC_TOL = 1e-12

ROLES = ("open", "closed", "continuity")


class InvalidSpaceError(ValueError):
    """Raised when a metric fails the metric axioms at construction."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A finite set of labelled points with a metric matrix.

    Parameters
    ----------
    point_ids : sequence of hashable
        Point labels, in index order.
    metric : (n, n) array_like
        Pairwise distances.
    coords : (n, d) array_like, optional
        Coordinates of the points, used by coordinate witnesses and by the
        ``"euclidean"`` metric kind.
    metric_kind : {"explicit", "euclidean"}
        ``"euclidean"`` additionally requires ``metric`` to match the
        pairwise Euclidean distances of ``coords``.
    factors : tuple of FiniteMetricSpace, optional
        Set on product spaces built by :func:`product_space`.
    check : bool
        Validate at construction and raise :class:`InvalidSpaceError`.
    """

    point_ids: tuple
    metric: np.ndarray
    coords: Optional[np.ndarray] = None
    metric_kind: str = "explicit"
    factors: Optional[tuple] = None
    check: bool = field(default=True, repr=False)
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "point_ids", tuple(self.point_ids))
        object.__setattr__(self, "metric", _frozen(self.metric))
        if self.coords is not None:
            c = np.array(self.coords, dtype=float)
            if c.ndim == 1:
                c = c[:, None]
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(self.point_ids)})
        if self.check:
            violations = validate_space(self)
            if violations:
                raise InvalidSpaceError(violations)

    @classmethod
    def from_coords(cls, point_ids: Sequence[Hashable], coords, check: bool = True):
        """Euclidean space on the given coordinates."""
        c = np.array(coords, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        diff = c[:, None, :] - c[None, :, :]
        metric = np.sqrt((diff ** 2).sum(axis=-1))
        return cls(tuple(point_ids), metric, coords=c, metric_kind="euclidean", check=check)

    @classmethod
    def on_line(cls, xs: Sequence[float], point_ids: Optional[Sequence[Hashable]] = None):
        xs = [float(x) for x in xs]
        if point_ids is None:
            point_ids = [repr(x) for x in xs]
        return cls.from_coords(point_ids, xs)

    def __len__(self) -> int:
        return len(self.point_ids)

    def __contains__(self, pid) -> bool:
        return pid in self._index

    def index(self, pid) -> int:
        try:
            return self._index[pid]
        except KeyError:
            raise KeyError(f"point {pid!r} is not in the space") from None

    def indices(self, pids: Iterable) -> list[int]:
        return [self.index(p) for p in pids]

    def dist(self, a, b) -> float:
        return float(self.metric[self.index(a), self.index(b)])

    def indicator(self, pids: Iterable) -> np.ndarray:
        w = np.zeros(len(self))
        w[self.indices(pids)] = 1.0
        return w

    def relabel(self, perm: Sequence[int]) -> "FiniteMetricSpace":
        """Same space with points reordered so that new point k is old point perm[k]."""
        perm = list(perm)
        return FiniteMetricSpace(
            tuple(self.point_ids[i] for i in perm),
            self.metric[np.ix_(perm, perm)],
            coords=None if self.coords is None else self.coords[perm],
            metric_kind=self.metric_kind,
            factors=self.factors,
        )


def validate_space(space: FiniteMetricSpace) -> list[str]:
    """Return a list of metric-axiom violations (empty iff the space is valid)."""
    out: list[str] = []
    d = np.asarray(space.metric, dtype=float)
    n = len(space.point_ids)
    if d.shape != (n, n):
        return [f"shape: metric is {d.shape}, expected ({n}, {n})"]
    if len(set(space.point_ids)) != n:
        out.append("ids: duplicate point ids")
    if not np.all(np.isfinite(d)):
        out.append("finite: metric has non-finite entries")
        return out
    ids = space.point_ids
    for i in range(n):
        if d[i, i] != 0.0:
            out.append(f"diagonal: d({ids[i]!r},{ids[i]!r}) = {d[i, i]!r} != 0")
    for i, j in itertools.combinations(range(n), 2):
        if abs(d[i, j] - d[j, i]) > METRIC_TOL:
            out.append(f"symmetry: d({ids[i]!r},{ids[j]!r}) != d({ids[j]!r},{ids[i]!r})")
        if d[i, j] <= 0.0 or d[j, i] <= 0.0:
            out.append(
                f"identity-of-indiscernibles: d({ids[i]!r},{ids[j]!r}) = {d[i, j]!r} for distinct points"
            )
    # triangle: d[i,k] <= d[i,j] + d[j,k]
    if n >= 3:
        excess = d[:, None, :] - (d[:, :, None] + d[None, :, :])
        for i, j, k in zip(*np.nonzero(excess > METRIC_TOL)):
            if len({i, j, k}) == 3:
                out.append(
                    f"triangle: d({ids[i]!r},{ids[k]!r}) > d({ids[i]!r},{ids[j]!r}) + d({ids[j]!r},{ids[k]!r})"
                    f" at indices ({i},{j},{k})"
                )
    if space.metric_kind == "euclidean":
        if space.coords is None:
            out.append("euclidean: metric declared euclidean but no coords given")
        else:
            c = np.asarray(space.coords)
            if c.shape[0] != n:
                out.append(f"coords: {c.shape[0]} coordinate rows for {n} points")
            else:
                e = np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(axis=-1))
                bad = np.argwhere(np.abs(e - d) > METRIC_TOL)
                for i, j in bad:
                    if i < j:
                        out.append(f"euclidean: d({ids[i]!r},{ids[j]!r}) differs from coordinate distance")
    elif space.metric_kind != "explicit":
        out.append(f"metric_kind: unknown kind {space.metric_kind!r}")
    return out


def product_space(a: FiniteMetricSpace, b: FiniteMetricSpace) -> FiniteMetricSpace:
    """Product of two spaces with the max metric; point ids are pairs ``(pa, pb)``."""
    ids = tuple(itertools.product(a.point_ids, b.point_ids))
    metric = np.maximum(a.metric[:, None, :, None], b.metric[None, :, None, :])
    metric = metric.reshape(len(ids), len(ids))
    coords = None
    if a.coords is not None and b.coords is not None:
        coords = np.array([np.concatenate([a.coords[i], b.coords[j]])
                           for i in range(len(a)) for j in range(len(b))])
    return FiniteMetricSpace(ids, metric, coords=coords, factors=(a, b), check=False)


@dataclass(frozen=True, eq=False)
class ConvergentSequence:
    """A finite witness ``entries[0], ..., entries[N-1] -> limit``.

    Witnesses whose distances to the limit are not nonincreasing are accepted
    but flagged with ``monotone = False`` and a logged warning.
    """

    space: FiniteMetricSpace
    entries: tuple
    limit: Hashable
    monotone: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        missing = [p for p in (*self.entries, self.limit) if p not in self.space]
        if missing:
            raise KeyError(f"sequence points not in space: {missing!r}")
        dists = self.distances()
        mono = bool(np.all(np.diff(dists) <= METRIC_TOL)) if len(dists) > 1 else True
        object.__setattr__(self, "monotone", mono)
        if not mono:
            log.warning("convergent sequence to %r has non-monotone distances", self.limit)

    def __len__(self) -> int:
        return len(self.entries)

    def distances(self) -> np.ndarray:
        j = self.space.index(self.limit)
        return np.array([self.space.metric[self.space.index(e), j] for e in self.entries])

    def appended(self, pid) -> "ConvergentSequence":
        return ConvergentSequence(self.space, self.entries + (pid,), self.limit)


def sequence_tail_distance(seq: ConvergentSequence) -> float:
    """Distance from the last entry of the witness to its limit."""
    if len(seq.entries) == 0:
        raise ValueError("empty sequence")
    return seq.space.dist(seq.entries[-1], seq.limit)


def product_sequence(a: ConvergentSequence, b: ConvergentSequence,
                     space: Optional[FiniteMetricSpace] = None) -> ConvergentSequence:
    """Zip two equally long witnesses into one on the product space."""
    if len(a) != len(b):
        raise ValueError("sequences differ in length")
    if space is None:
        space = product_space(a.space, b.space)
    return ConvergentSequence(space, tuple(zip(a.entries, b.entries)), (a.limit, b.limit))


@dataclass(frozen=True, eq=False)
class TestSet:
    """A subset of a space with a declared role.

    ``boundary`` must be given (possibly empty) iff ``role == "continuity"``.
    The role records the intended topological type in the modelled space; on
    the finite model every subset is admissible in every role.
    """

    __test__ = False  # not a pytest class

    space: FiniteMetricSpace
    members: frozenset
    role: str = "open"
    boundary: Optional[frozenset] = None
    name: str = ""

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}; expected one of {ROLES}")
        object.__setattr__(self, "members", frozenset(self.members))
        if self.role == "continuity":
            if self.boundary is None:
                raise ValueError("a continuity set needs a declared boundary")
        if self.boundary is not None:
            object.__setattr__(self, "boundary", frozenset(self.boundary))
        stray = [p for p in self.members | (self.boundary or frozenset()) if p not in self.space]
        if stray:
            raise KeyError(f"test set points not in space: {stray!r}")

    def indicator(self) -> np.ndarray:
        return self.space.indicator(self.members)

    def complement(self, role: Optional[str] = None) -> "TestSet":
        flip = {"open": "closed", "closed": "open", "continuity": "continuity"}
        rest = frozenset(self.space.point_ids) - self.members
        r = role or flip[self.role]
        return TestSet(self.space, rest, r, self.boundary if r == "continuity" else None,
                       name=f"~{self.name}" if self.name else "")


def boundary_consistency(test_set: TestSet, seq: ConvergentSequence, window: int = 3) -> bool:
    """Check a declared boundary against a sequence witness.

    If the last ``window`` entries all lie in the set while the limit does not
    (or all lie outside while the limit is inside), the limit must have been
    declared a boundary point.
    """
    if test_set.role != "continuity":
        raise ValueError("boundary_consistency applies to continuity sets")
    tail = seq.entries[-min(window, len(seq.entries)):]
    inside = [p in test_set.members for p in tail]
    limit_in = seq.limit in test_set.members
    switches = (all(inside) and not limit_in) or (not any(inside) and limit_in)
    return (not switches) or seq.limit in test_set.boundary
