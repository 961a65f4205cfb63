"""Continuity conditions as exact gap functionals on a kernel family.

For a family ``P_n -> P`` on S1 x S2 write ``D_n = P_n - P``.  Every condition
reduces to a signed vector on S2,

    d(s2) = sum_{s1} w(s1) * D_n(s1, s2),

with ``w`` a test function or a set indicator, followed by a Jordan closed form
for the sup/inf over all subsets ``B`` of S2:

====  ==============================  ====================
 a    bounded continuous ``f``         ``sup_B |d(B)|``
 b    open set ``O``                   ``-inf_B d(B)``
 c    closed set ``C``                 ``sup_B d(B)``
 d    continuity set ``A``             ``sup_B |d(B)|``
 e    nonnegative lsc ``f``            ``-inf_B d(B)``
====  ==============================  ====================

All slices go through one helper (:func:`_slice`), so identities such as
"condition (a) at ``f = 1`` equals the marginal TV gap" hold bit for bit.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .gaps import (DEFAULT_EPSILON, DEFAULT_WINDOW, GapSeries, Verdict, sup_series, verdict)
from .kernels import KernelFamily
from .kr import FunctionFamily, RealFunction
from .measures import _check_same, neg_parts, pos_parts
from .regularize import inf_convolve
from .space import ConvergentSequence, FiniteMetricSpace, TestSet

__all__ = [
    "GapSeries", "Verdict", "verdict", "BoundaryNotNullError", "OracleMismatchError",
    "BaseFamily", "intersection_closure", "suf_gap", "wtv_gap", "closed_gap",
    "contset_gap", "lsc_gap", "marginal_tv_gap", "full_tv_gap", "asskern_gap",
    "lower_semi_equicontinuity_gap", "equicontinuity_gap", "default_witnesses",
    "AnalysisConfig", "AnalysisReport", "analyze", "CONDITIONS",
]

log = logging.getLogger(__name__)

CONDITIONS = ("a", "b", "c", "d", "e")
BOUNDARY_TOL = 1e-12
ORACLE_TOL = 1e-12
DEFAULT_ORDERS = (1, 2, 4, 8)
SUBSET_LIMIT = 8
_ORDER = {lab: k for k, lab in enumerate(("tv_marginal", "tv_full", *CONDITIONS, "asskern"))}


class BoundaryNotNullError(ValueError):
    """The limit joint charges the declared boundary of a condition-(d) set."""

    def __init__(self, name: str, mass: float):
        super().__init__(f"boundary of {name!r} carries limit mass {mass!r}")
        self.name = name
        self.mass = mass


class OracleMismatchError(RuntimeError):
    pass


def _batch_slice(D: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``d[k, n, s2] = sum_{s1} W[k, s1] D[n, s1, s2]``, summed in S1 order.

    The fixed accumulation order makes a row of a batch bit-identical to the
    same weight vector sliced on its own.
    """
    W = np.asarray(W, dtype=float)
    out = np.zeros((W.shape[0], D.shape[0], D.shape[2]))
    for i in range(D.shape[1]):
        out += W[:, i, None, None] * D[None, :, i, :]
    return out


def _slice(D: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``d_n(s2) = sum_{s1} w(s1) D_n(s1, s2)`` for every n."""
    return _batch_slice(D, np.asarray(w, dtype=float)[None])[0]


_pos, _neg = pos_parts, neg_parts


def _sup_abs(d: np.ndarray) -> np.ndarray:
    return np.maximum(_pos(d), _neg(d))


def _judge_kw(eps, window):
    return {"epsilon": eps, "window": window}


def suf_gap(F: KernelFamily, f: RealFunction, *, epsilon: float = DEFAULT_EPSILON,
            window: int = DEFAULT_WINDOW) -> GapSeries:
    """Condition (a): ``sup_B |int f dP_n(., B) - int f dP(., B)|``."""
    _check_same(f.space, F.s1_space)
    return GapSeries("a", _sup_abs(_slice(F.differences(), f.values)), f.name, epsilon, window)


def wtv_gap(F: KernelFamily, O: TestSet, *, epsilon: float = DEFAULT_EPSILON,
            window: int = DEFAULT_WINDOW) -> GapSeries:
    """Condition (b): ``-inf_B [P_n(O x B) - P(O x B)]``."""
    _check_same(O.space, F.s1_space)
    return GapSeries("b", _neg(_slice(F.differences(), O.indicator())), O.name, epsilon, window)


def closed_gap(F: KernelFamily, C: TestSet, *, epsilon: float = DEFAULT_EPSILON,
               window: int = DEFAULT_WINDOW) -> GapSeries:
    """Condition (c): ``sup_B [P_n(C x B) - P(C x B)]``."""
    _check_same(C.space, F.s1_space)
    return GapSeries("c", _pos(_slice(F.differences(), C.indicator())), C.name, epsilon, window)


def boundary_mass(F: KernelFamily, A: TestSet) -> float:
    """Limit mass of ``boundary(A) x S2``."""
    if not A.boundary:
        return 0.0
    idx = F.s1_space.indices(A.boundary)
    return float(F.limit.mass[idx].sum())


def contset_gap(F: KernelFamily, A: TestSet, *, epsilon: float = DEFAULT_EPSILON,
                window: int = DEFAULT_WINDOW) -> GapSeries:
    """Condition (d): ``sup_B |P_n(A x B) - P(A x B)|`` for a continuity set.

    Raises
    ------
    BoundaryNotNullError
        If the limit joint gives the declared boundary more than ``1e-12`` mass;
        such sets lie outside the condition's scope.
    """
    _check_same(A.space, F.s1_space)
    mass = boundary_mass(F, A)
    if mass > BOUNDARY_TOL:
        raise BoundaryNotNullError(A.name, mass)
    return GapSeries("d", _sup_abs(_slice(F.differences(), A.indicator())), A.name, epsilon, window)


def lsc_gap(F: KernelFamily, f: RealFunction, *, epsilon: float = DEFAULT_EPSILON,
            window: int = DEFAULT_WINDOW) -> GapSeries:
    """Condition (e): the one-sided gap ``-inf_B [int f dP_n(., B) - int f dP(., B)]``."""
    _check_same(f.space, F.s1_space)
    if np.any(f.values < 0):
        raise ValueError(f"condition (e) needs a nonnegative function; {f.name!r} dips below 0")
    return GapSeries("e", _neg(_slice(F.differences(), f.values)), f.name, epsilon, window)


def marginal_tv_gap(F: KernelFamily, *, epsilon: float = DEFAULT_EPSILON,
                    window: int = DEFAULT_WINDOW) -> GapSeries:
    """TV distance between the S2-marginals of ``P_n`` and ``P``."""
    ones = np.ones(len(F.s1_space))
    return GapSeries("tv_marginal", _sup_abs(_slice(F.differences(), ones)), "S1", epsilon, window)


def full_tv_gap(F: KernelFamily, *, epsilon: float = DEFAULT_EPSILON,
                window: int = DEFAULT_WINDOW) -> GapSeries:
    """TV distance between the joints on the product space."""
    D = F.differences()
    return GapSeries("tv_full", _sup_abs(D.reshape(D.shape[0], -1)), "S1xS2", epsilon, window)


@dataclass(frozen=True, eq=False)
class BaseFamily:
    """Finite truncation of a base of open sets, one list per limit point.

    Every list must contain the whole space.
    """

    s1_space: FiniteMetricSpace
    bases: Mapping[object, Sequence[TestSet]]

    def __post_init__(self):
        full = frozenset(self.s1_space.point_ids)
        bases = {}
        for pid, sets in dict(self.bases).items():
            sets = tuple(sets)
            for O in sets:
                _check_same(O.space, self.s1_space)
            if not any(frozenset(O.members) == full for O in sets):
                raise ValueError(f"base at {pid!r} does not contain the whole space")
            bases[pid] = sets
        object.__setattr__(self, "bases", bases)

    def at(self, pid) -> tuple:
        try:
            return self.bases[pid]
        except KeyError:
            raise KeyError(f"no base declared at {pid!r}") from None


def intersection_closure(sets: Sequence[TestSet], k_max: Optional[int] = None) -> list[TestSet]:
    """All intersections of at most ``k_max`` members (all of them when None).

    Built level by level (intersect the previous level with every member) until
    nothing new appears; duplicate point sets keep the first name produced.
    """
    if not sets:
        return []
    space = sets[0].space
    masks = [sum(1 << space.index(p) for p in O.members) for O in sets]
    seen = {}
    level = []
    for m, O in zip(masks, sets):
        if m not in seen:
            seen[m] = O.name
            level.append(m)
    depth = 1
    while level and (k_max is None or depth < k_max):
        nxt = []
        for m in level:
            for b, O in zip(masks, sets):
                c = m & b
                if c not in seen:
                    seen[c] = f"{seen[m]}&{O.name}"
                    nxt.append(c)
        level, depth = nxt, depth + 1
    pids = space.point_ids
    return [TestSet(space, [pids[i] for i in range(len(pids)) if m >> i & 1], "open", name=name)
            for m, name in seen.items()]


def asskern_gap(F: KernelFamily, base: BaseFamily, k_max: Optional[int] = None, limit=None, *,
                epsilon: float = DEFAULT_EPSILON, window: int = DEFAULT_WINDOW) -> GapSeries:
    """Max over the intersection closure of the base of ``sup_B |P_n(O x B) - P(O x B)|``."""
    _check_same(base.s1_space, F.s1_space)
    limit = F.limit_point if limit is None else limit
    if limit is None:
        if len(base.bases) != 1:
            raise ValueError("family has no limit point; pass one explicitly")
        limit = next(iter(base.bases))
    sets = intersection_closure(base.at(limit), k_max)
    W = np.vstack([O.indicator() for O in sets])
    per_set = _sup_abs(_batch_slice(F.differences(), W))
    return GapSeries("asskern", per_set.max(axis=0), f"base@{limit!r}", epsilon, window)


def _pointwise(family: FunctionFamily, seq: ConvergentSequence) -> np.ndarray:
    _check_same(family.space, seq.space)
    M = family.matrix()
    idx = seq.space.indices(seq.entries)
    return M[:, idx] - M[:, [seq.space.index(seq.limit)]]


def lower_semi_equicontinuity_gap(family: FunctionFamily, seq: ConvergentSequence, *,
                                  epsilon: float = DEFAULT_EPSILON,
                                  window: int = DEFAULT_WINDOW) -> GapSeries:
    """``max(0, -inf_f [f(x_n) - f(x)])`` along ``seq``."""
    low = _pointwise(family, seq).min(axis=0)
    return GapSeries("lse", np.maximum(-low, 0.0), "family", epsilon, window)


def equicontinuity_gap(family: FunctionFamily, seq: ConvergentSequence, *,
                       epsilon: float = DEFAULT_EPSILON, window: int = DEFAULT_WINDOW) -> GapSeries:
    """``sup_f |f(x_n) - f(x)|`` along ``seq``."""
    return GapSeries("equi", np.abs(_pointwise(family, seq)).max(axis=0), "family", epsilon, window)


def default_witnesses(space: FiniteMetricSpace) -> dict[str, list]:
    """Generated witnesses per condition.

    Functions: inf-convolutions of every point indicator at orders 1, 2, 4, 8
    plus the coordinate functions (shifted to be nonnegative for (e)).  Sets:
    every subset of S1 when it has at most eight points, else none.
    """
    funcs = []
    for k, pid in enumerate(space.point_ids):
        ind = RealFunction.indicator(space, [pid], name=f"pt[{k}]")
        funcs.extend(inf_convolve(ind, m) for m in DEFAULT_ORDERS)
    coords = []
    if space.coords is not None:
        for j in range(space.coords.shape[1]):
            coords.append(RealFunction(space, space.coords[:, j], name=f"coord[{j}]"))
    shifted = [RealFunction(space, c.values - c.values.min(), name=f"{c.name}+") for c in coords]
    out = {"a": funcs + coords, "e": funcs + shifted, "b": [], "c": [], "d": []}
    if len(space) <= SUBSET_LIMIT:
        pids = list(space.point_ids)
        for mask in itertools.product((False, True), repeat=len(pids)):
            members = [p for p, keep in zip(pids, mask) if keep]
            name = "{" + ",".join(str(space.index(p)) for p in members) + "}"
            out["b"].append(TestSet(space, members, "open", name=name))
            out["c"].append(TestSet(space, members, "closed", name=name))
            out["d"].append(TestSet(space, members, "continuity", boundary=(), name=name))
    return out


@dataclass(frozen=True)
class AnalysisConfig:
    epsilon: float = DEFAULT_EPSILON
    window: int = DEFAULT_WINDOW
    conditions: tuple = CONDITIONS
    oracle: bool = False
    k_max: Optional[int] = None
    default_witnesses: bool = True

    def __post_init__(self):
        bad = [c for c in self.conditions if c not in CONDITIONS]
        if bad:
            raise ValueError(f"unknown conditions {bad!r}")
        object.__setattr__(self, "conditions", tuple(c for c in CONDITIONS if c in self.conditions))


@dataclass(eq=False)
class AnalysisReport:
    """Every computed series plus per-condition verdicts and the conclusion.

    ``semi_uniform_feller`` is None unless all five conditions were requested.
    """

    config: AnalysisConfig
    marginal: GapSeries
    full_tv: GapSeries
    series: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    asskern: Optional[GapSeries] = None
    rejected: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    semi_uniform_feller: Optional[bool] = None

    def condition_verdict(self, label: str) -> Optional[Verdict]:
        s = self.aggregates.get(label)
        return None if s is None else s.verdict

    @property
    def hypotheses(self) -> dict:
        return {"marginal_tv": str(self.marginal.verdict)}

    def all_series(self) -> list[GapSeries]:
        out = [self.marginal, self.full_tv, *self.series, *self.aggregates.values()]
        if self.asskern is not None:
            out.append(self.asskern)
        return sorted(out, key=lambda s: (_ORDER[s.label], s.witness))

    def csv_rows(self) -> list[tuple]:
        """``(condition, witness_id, n, gap)`` in canonical order."""
        return [(s.label, s.witness, k + 1, float(g))
                for s in self.all_series() for k, g in enumerate(s.gaps)]

    def to_dict(self) -> dict:
        def v(s):
            return None if s is None else str(s.verdict)

        return {
            "config": {"epsilon": repr(self.config.epsilon), "window": self.config.window,
                       "conditions": list(self.config.conditions), "oracle": self.config.oracle},
            "hypotheses": {"marginal_tv": v(self.marginal)},
            "full_tv": v(self.full_tv),
            "conditions": {c: v(self.aggregates.get(c)) for c in self.config.conditions},
            "asskern": v(self.asskern),
            "semi_uniform_feller": self.semi_uniform_feller,
            "rejected": [{"witness": n, "boundary_mass": repr(m)} for n, m in self.rejected],
            "warnings": list(self.warnings),
            "series": [{"condition": s.label, "witness": s.witness, "verdict": str(s.verdict),
                        "diagnostic": s.diagnostic, "gaps": [repr(float(g)) for g in s.gaps]}
                       for s in self.all_series()],
        }


_REDUCE = {"a": _sup_abs, "b": _neg, "c": _pos, "d": _sup_abs, "e": _neg}


def condition_series(F: KernelFamily, label: str, witnesses: Sequence, *, D: Optional[np.ndarray] = None,
                     epsilon: float = DEFAULT_EPSILON, window: int = DEFAULT_WINDOW
                     ) -> tuple[list[GapSeries], list[tuple[str, float]]]:
    """Gap series of one condition for a whole witness list in one batch.

    Entries are bit-identical to the single-witness functions.  Condition (d)
    sets with charged boundaries are returned as ``(name, mass)`` rejections.
    """
    rows, names, rejected = [], [], []
    for w in witnesses:
        if isinstance(w, RealFunction):
            _check_same(w.space, F.s1_space)
            if label == "e" and np.any(w.values < 0):
                raise ValueError(f"condition (e) needs a nonnegative function; {w.name!r} dips below 0")
            rows.append(w.values)
        else:
            _check_same(w.space, F.s1_space)
            if label == "d":
                mass = boundary_mass(F, w)
                if mass > BOUNDARY_TOL:
                    rejected.append((w.name, mass))
                    continue
            rows.append(w.indicator())
        names.append(w.name)
    if not rows:
        return [], rejected
    D = F.differences() if D is None else D
    gaps = _REDUCE[label](_batch_slice(D, np.vstack(rows)))
    return [GapSeries(label, g, n, epsilon, window) for g, n in zip(gaps, names)], rejected


def _check_oracle(F: KernelFamily, s: GapSeries, **kw):
    from . import oracles

    ref = oracles.oracle_series(s.label, F, **kw)
    dev = float(np.abs(ref - s.gaps).max()) if s.gaps.size else 0.0
    if dev > ORACLE_TOL:
        raise OracleMismatchError(f"{s.label}/{s.witness}: closed form deviates from enumeration by {dev!r}")


def analyze(F: KernelFamily, test_functions: Sequence[RealFunction] = (),
            test_sets: Sequence[TestSet] = (), base: Optional[BaseFamily] = None,
            config: Optional[AnalysisConfig] = None) -> AnalysisReport:
    """Run every requested condition over the supplied witnesses.

    Witness routing: (a) takes every test function; (e) the nonnegative test
    functions plus indicators of open sets; (b), (c), (d) take the sets with
    role open, closed and continuity.  A condition left without witnesses falls
    back to :func:`default_witnesses` when ``config.default_witnesses`` holds.
    """
    cfg = config or AnalysisConfig()
    kw = _judge_kw(cfg.epsilon, cfg.window)
    if cfg.oracle:
        from .oracles import MAX_ORACLE_SIZE
        if len(F.s2_space) > MAX_ORACLE_SIZE:
            raise ValueError(f"oracle mode refused: |S2| = {len(F.s2_space)} exceeds {MAX_ORACLE_SIZE}")

    report = AnalysisReport(cfg, marginal_tv_gap(F, **kw), full_tv_gap(F, **kw))
    pools = {
        "a": list(test_functions),
        "b": [O for O in test_sets if O.role == "open"],
        "c": [C for C in test_sets if C.role == "closed"],
        "d": [A for A in test_sets if A.role == "continuity"],
        "e": [f for f in test_functions if np.all(f.values >= 0)]
             + [RealFunction(O.space, O.indicator(), name=O.name) for O in test_sets if O.role == "open"],
    }
    defaults = None
    for c in cfg.conditions:
        if not pools[c] and cfg.default_witnesses:
            defaults = defaults or default_witnesses(F.s1_space)
            pools[c] = defaults[c]
            if pools[c]:
                report.warnings.append(f"condition ({c}): no witnesses supplied, using generated defaults")

    D = F.differences()
    for c in cfg.conditions:
        found, rejected = condition_series(F, c, pools[c], D=D, **kw)
        report.rejected.extend(rejected)
        if cfg.oracle:
            kept = [w for w in pools[c]
                    if not (c == "d" and boundary_mass(F, w) > BOUNDARY_TOL)]
            for s, w in zip(found, kept):
                weights = w.values if isinstance(w, RealFunction) else w.indicator()
                _check_oracle(F, s, weights=weights)
        if not found:
            report.warnings.append(f"condition ({c}): no applicable witnesses, verdict unavailable")
            continue
        report.series.extend(found)
        report.aggregates[c] = sup_series(c, found, **kw)

    if cfg.oracle:
        _check_oracle(F, report.marginal)
        _check_oracle(F, report.full_tv)

    if base is not None:
        report.asskern = asskern_gap(F, base, cfg.k_max, **kw)
        if cfg.oracle:
            lim = F.limit_point if F.limit_point is not None else next(iter(base.bases))
            sets = [O.indicator() for O in intersection_closure(base.at(lim), cfg.k_max)]
            _check_oracle(F, report.asskern, sets=sets)

    if set(cfg.conditions) == set(CONDITIONS):
        if any(c not in report.aggregates for c in CONDITIONS[1:]) and not any(
                report.condition_verdict(c) == Verdict.VANISHING for c in CONDITIONS[1:]):
            report.warnings.append("conclusion drawn without verdicts for every condition")
        tv_ok = report.marginal.verdict == Verdict.VANISHING
        some = any(report.condition_verdict(c) == Verdict.VANISHING for c in CONDITIONS[1:])
        report.semi_uniform_feller = bool(tv_ok and some)
        a = report.condition_verdict("a")
        if a is not None and (a == Verdict.VANISHING) != report.semi_uniform_feller:
            report.warnings.append("condition (a) disagrees with the conclusion; witness coverage is too thin")
        if report.asskern is not None and (report.asskern.verdict == Verdict.VANISHING) != report.semi_uniform_feller:
            report.warnings.append("base-family gap disagrees with the conclusion; the base may be unsuitable")
    return report
