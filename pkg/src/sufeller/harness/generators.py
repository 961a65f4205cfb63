"""Seeded instance generators.

Families are built so that their gaps are known in closed form:

* ``tv_converging_mixture`` -- ``P_n = P + (Q - P) / n`` where ``Q - P`` has
  zero column sums.  Every mass is an integer multiple of ``2^-48`` and the
  integer perturbation carries a factor ``lcm(1..N)``, so ``P_n`` is computed
  without rounding and the S2-marginal gap is exactly zero.
* ``marginal_tv_only`` -- ``P_n(s1, s2) = K(s1 | s2) nu_n(s2)`` with ``nu_n``
  stuck at a fixed distance from its limit; violates the TV hypothesis.
* ``indicator_example`` -- point masses on the grid ``{0} u {1/k}``, moving
  along ``1/n -> 0``; converges in every set-wise sense that avoids the
  boundary at 0 but never in total variation.
* ``weak_only_family`` -- point masses moving in S2; weakly convergent with
  every set-wise gap stuck at 1.
* ``product_mixture`` -- kernels on S1 x S2 given a product parameter, used
  by the integration suite.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from ..analysis import BaseFamily
from ..gaps import GapSeries
from ..kernels import JointMeasure, KernelFamily, ParamKernel, Provenance, family_from_param
from ..kr import RealFunction, weak_gap_series
from ..measures import Measure
from ..space import ConvergentSequence, FiniteMetricSpace, TestSet, product_space

UNIT_EXP = 48
UNIT = 2.0 ** -UNIT_EXP
SQRT2 = math.sqrt(2.0)
CONSTRUCTIONS = ("tv_converging_mixture", "marginal_tv_only", "indicator_example", "product_mixture")


def trial_seed(seed: int, trial: int) -> int:
    """Per-trial seed: ``seed XOR blake2b(trial)``, independent of execution order."""
    h = hashlib.blake2b(str(trial).encode(), digest_size=8).digest()
    return (int(seed) ^ int.from_bytes(h, "little")) & (2 ** 63 - 1)


@dataclass(frozen=True)
class InstanceRecipe:
    seed: int
    sizes: tuple = (3, 3, 20)
    construction: str = "tv_converging_mixture"
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")
        if len(self.sizes) != 3 or min(self.sizes) < 1:
            raise ValueError(f"sizes must be three positive integers, got {self.sizes!r}")
        window = int(self.params.get("window", 3))
        if self.sizes[2] < window:
            raise ValueError(f"N = {self.sizes[2]} is shorter than the window {window}")


def grid_space(n: int, rng: np.random.Generator, prefix: str) -> FiniteMetricSpace:
    """Random points on a line with ids ``prefix0, prefix1, ...``."""
    xs = np.sort(rng.uniform(0.0, 3.0, size=n))
    while n > 1 and np.min(np.diff(xs)) < 1e-3:
        xs = np.sort(rng.uniform(0.0, 3.0, size=n))
    return FiniteMetricSpace.from_coords([f"{prefix}{k}" for k in range(n)], xs)


def dyadic_counts(weights: np.ndarray, total: int = 2 ** UNIT_EXP) -> np.ndarray:
    """Integer counts proportional to ``weights`` summing exactly to ``total``."""
    w = np.asarray(weights, dtype=float)
    counts = np.floor(w / w.sum() * total).astype(np.int64)
    counts.flat[np.argmax(counts)] += total - int(counts.sum())
    return counts


def random_joint_counts(rng: np.random.Generator, n1: int, n2: int) -> np.ndarray:
    return dyadic_counts(rng.uniform(0.05, 1.0, size=(n1, n2)))


def same_marginal_counts(rng: np.random.Generator, counts: np.ndarray) -> np.ndarray:
    """Random integer joint with the same column sums (S2-marginal) as ``counts``."""
    out = np.empty_like(counts)
    for j in range(counts.shape[1]):
        out[:, j] = dyadic_counts(rng.dirichlet(np.full(counts.shape[0], 0.3)) + 1e-3,
                                  total=int(counts[:, j].sum()))
    return out


def tv_converging_mixture(recipe: InstanceRecipe) -> KernelFamily:
    """``P_n = (1 - 1/n) P + (1/n) Q`` with equal S2-marginals, computed exactly.

    ``Q - P`` is replaced by ``t (Q - P)`` rounded to multiples of
    ``lcm(1..N)`` (column sums restored on the last row), so ``P_n`` stays an
    exact integer multiple of ``2^-48``.  ``params["amplitude"]`` fixes ``t``;
    by default ``t`` is 0 with probability 0.1 and otherwise log-uniform in
    ``[0.9e-4, 0.9]``.
    """
    rng = np.random.default_rng(recipe.seed)
    n1, n2, N = recipe.sizes
    s1, s2 = grid_space(n1, rng, "x"), grid_space(n2, rng, "y")
    counts = random_joint_counts(rng, n1, n2)
    target = same_marginal_counts(rng, counts)
    amp = recipe.params.get("amplitude")
    u, v = rng.random(), rng.random()
    if amp is None:
        amp = 0.0 if v < 0.1 else 0.9 * 10.0 ** (-4.0 * u)
    amp = float(amp)
    if not 0.0 <= amp <= 0.9:
        raise ValueError("amplitude must lie in [0, 0.9]")
    L = math.lcm(*range(1, N + 1))
    step = (np.floor(amp * (target - counts) / L).astype(np.int64)) * L
    step[-1] -= step.sum(axis=0)
    if np.any(counts + step < 0):
        raise ArithmeticError("perturbation leaves the simplex")  # needs counts >> L * n1
    limit = JointMeasure(s1, s2, counts * UNIT)
    joints = [JointMeasure(s1, s2, (counts + step // n) * UNIT) for n in range(1, N + 1)]
    notes = {"construction": "tv_converging_mixture", "amplitude": amp}
    return KernelFamily(joints, limit, Provenance("explicit", notes=notes))


def marginal_tv_only(recipe: InstanceRecipe) -> KernelFamily:
    """``P_n(s1, s2) = K(s1 | s2) nu_n(s2)`` with ``tv(nu_n, nu)`` fixed at half of ``tv(nu', nu)``."""
    rng = np.random.default_rng(recipe.seed)
    n1, n2, N = recipe.sizes
    s1, s2 = grid_space(n1, rng, "x"), grid_space(n2, rng, "y")
    K = rng.uniform(0.05, 1.0, size=(n1, n2))
    K /= K.sum(axis=0, keepdims=True)
    nu = rng.dirichlet(np.ones(n2))
    other = rng.dirichlet(np.ones(n2))
    delta = float(recipe.params.get("delta", 0.5))
    nu_n = (1.0 - delta) * nu + delta * other

    def joint(v):
        m = K * v[None, :]
        return JointMeasure(s1, s2, m / m.sum())

    notes = {"construction": "marginal_tv_only", "delta": delta}
    return KernelFamily([joint(nu_n)] * N, joint(nu), Provenance("explicit", notes=notes))


# --- the indicator example on {0} u {1/k} ---------------------------------

#: interval endpoints h/2 + sqrt(2) - 2; none lies in [0, 1/3], so every
#: interval built from them treats 1/n (n >= 3) and 0 alike
ENDPOINTS = tuple(h / 2 + SQRT2 - 2 for h in range(7))
STAR = "*"


def indicator_example_fixture(N: int = 20) -> tuple[ParamKernel, ConvergentSequence]:
    """Kernel ``s3 -> point mass at (s3, *)`` on the grid ``{0} u {1/k : k <= N}``."""
    grid = FiniteMetricSpace.on_line([0.0] + [1.0 / k for k in range(1, N + 1)])
    star = FiniteMetricSpace((STAR,), np.zeros((1, 1)))
    table = {p: JointMeasure.dirac(grid, star, p, STAR) for p in grid.point_ids}
    K = ParamKernel(grid, star, grid, table)
    seq = ConvergentSequence(grid, [repr(1.0 / n) for n in range(1, N + 1)], repr(0.0))
    return K, seq


def indicator_example_family(N: int = 20) -> KernelFamily:
    return family_from_param(*indicator_example_fixture(N))


def weak_only_family(N: int = 20) -> KernelFamily:
    """Point masses ``delta_(*, 1/n) -> delta_(*, 0)`` moving in S2.

    S1 is a single point and S2 the grid ``{0} u {1/k}``.  The joints converge
    weakly (KR gap ``1/n``) while every set-wise gap, the S2-marginal TV gap
    included, stays at 1: weakly continuous but not semi-uniform Feller.
    """
    s1 = FiniteMetricSpace((STAR,), np.zeros((1, 1)))
    grid = FiniteMetricSpace.on_line([0.0] + [1.0 / k for k in range(1, N + 1)])
    joints = [JointMeasure.dirac(s1, grid, STAR, repr(1.0 / n)) for n in range(1, N + 1)]
    limit = JointMeasure.dirac(s1, grid, STAR, repr(0.0))
    return KernelFamily(joints, limit, Provenance("explicit", notes={"construction": "weak_only"}))


def joint_weak_gap(F: KernelFamily, **judge) -> GapSeries:
    """KR gap of the joints on ``S1 x S2`` (max metric)."""
    space = product_space(F.s1_space, F.s2_space)
    mus = [Measure(space, P.mass.reshape(-1)) for P in F.joints]
    return weak_gap_series(mus, Measure(space, F.limit.mass.reshape(-1)), **judge)


def _members(space: FiniteMetricSpace, lo: float, hi: float, closed: bool = False) -> list:
    x = space.coords[:, 0]
    keep = (x >= lo) & (x <= hi) if closed else (x > lo) & (x < hi)
    return [p for p, k in zip(space.point_ids, keep) if k]


def fixture_intervals(space: FiniteMetricSpace) -> list[TestSet]:
    """Open, closed and continuity intervals with endpoints in :data:`ENDPOINTS`.

    No endpoint is a grid point, so every declared boundary is empty.
    """
    out = []
    for i, lo in enumerate(ENDPOINTS):
        for hi in ENDPOINTS[i + 1:]:
            tag = f"({lo:.3f},{hi:.3f})"
            out.append(TestSet(space, _members(space, lo, hi), "open", name=f"open{tag}"))
            out.append(TestSet(space, _members(space, lo, hi, True), "closed", name=f"closed[{tag[1:-1]}]"))
            out.append(TestSet(space, _members(space, lo, hi), "continuity", boundary=(), name=f"cont{tag}"))
    for i, e in enumerate(ENDPOINTS):
        # half-lines and their complements
        out.append(TestSet(space, _members(space, -np.inf, e), "open", name=f"open(-inf,{e:.3f})"))
        out.append(TestSet(space, _members(space, e, np.inf, True), "closed", name=f"closed[{e:.3f},inf)"))
    return out


def fixture_rejected_set(space: FiniteMetricSpace) -> TestSet:
    """``(0, 2)`` as a continuity candidate: its boundary holds the limit point 0."""
    return TestSet(space, _members(space, 0.0, 2.0), "continuity", boundary=(repr(0.0),), name="cont(0,2)")


def fixture_functions(space: FiniteMetricSpace) -> list[RealFunction]:
    """Ramps that are constant on ``(-inf, sqrt(2) - 1]``, their mirrors and the constant 1."""
    x = space.coords[:, 0]
    out = [RealFunction.constant(space, 1.0, name="one")]
    for k in (1, 2, 4, 8):
        ramp = np.clip(k * (x - (SQRT2 - 1)), 0.0, 1.0)
        out.append(RealFunction(space, ramp, name=f"ramp{k}"))
        out.append(RealFunction(space, 1.0 - ramp, name=f"1-ramp{k}"))
    return out


def fixture_bases(space: FiniteMetricSpace) -> dict[str, BaseFamily]:
    """Two bases at the limit 0.

    ``avoiding``: the whole space and ``(-sqrt2, sqrt2 - 1)``, ``(sqrt2 - 1, sqrt2)``.
    ``boundary``: the whole space and ``(0, 2)``, which has 0 on its boundary.
    """
    zero = repr(0.0)
    whole = TestSet(space, space.point_ids, "open", name="S1")  # shared by both bases
    lo = TestSet(space, _members(space, -SQRT2, SQRT2 - 1), "open", name="(-r2,r2-1)")
    hi = TestSet(space, _members(space, SQRT2 - 1, SQRT2), "open", name="(r2-1,r2)")
    edge = TestSet(space, _members(space, 0.0, 2.0), "open", name="(0,2)")
    return {"avoiding": BaseFamily(space, {zero: [whole, lo, hi]}),
            "boundary": BaseFamily(space, {zero: [whole, edge]})}


@dataclass(frozen=True, eq=False)
class FixtureBundle:
    """The indicator example with every witness it ships with.

    ``sets`` lists the test sets in document order, base members included.
    """

    family: KernelFamily
    functions: tuple
    sets: tuple
    bases: Mapping[str, BaseFamily]


def indicator_example_bundle(N: int = 20) -> FixtureBundle:
    F = indicator_example_family(N)
    space = F.s1_space
    bases = fixture_bases(space)
    sets = fixture_intervals(space) + [fixture_rejected_set(space)]
    seen = set()
    for B in bases.values():
        for O in B.at(repr(0.0)):
            if id(O) not in seen:
                seen.add(id(O))
                sets.append(O)
    return FixtureBundle(F, tuple(fixture_functions(space)), tuple(sets), bases)


# --- product-parameter kernels for the integration suite -------------------

@dataclass(frozen=True, eq=False)
class ProductMixtureInstance:
    """``Xi(. | s3, s4) = (A(s3) + B(s4)) / 2`` on S1 x S2.

    S3 holds ``K`` far-apart atoms ``a_k`` and their approach points
    ``a_k + 1/n``; S4 is ``{0} u {1/n}``.  Along the approach points the tables
    move as ``A_lim + c_n (R - A_lim)`` with ``c_n = 2^-n`` (``vanishing``) or
    ``c_n = 1/2`` (not vanishing).
    """

    kernel: ParamKernel
    s3_sequences: tuple
    s4_sequence: ConvergentSequence
    weights: np.ndarray
    vanishing: bool


def product_mixture(recipe: InstanceRecipe) -> ProductMixtureInstance:
    rng = np.random.default_rng(recipe.seed)
    n1, n2, N = recipe.sizes
    K = int(recipe.params.get("atoms", 2))
    vanishing = bool(recipe.params.get("vanishing", rng.random() < 0.5))
    s1, s2 = grid_space(n1, rng, "x"), grid_space(n2, rng, "y")
    xs3, ids3 = [], []
    for k in range(K):
        xs3.append(10.0 * k)
        ids3.append(f"a{k}")
        for n in range(1, N + 1):
            xs3.append(10.0 * k + 1.0 / n)
            ids3.append(f"a{k}_{n}")
    s3 = FiniteMetricSpace.from_coords(ids3, xs3)
    s4 = FiniteMetricSpace.from_coords(["b"] + [f"b_{n}" for n in range(1, N + 1)],
                                       [0.0] + [1.0 / n for n in range(1, N + 1)])
    par = product_space(s3, s4)

    def joint():
        m = rng.uniform(0.05, 1.0, size=(n1, n2))
        return m / m.sum()

    def path(lim):
        far = joint()
        return [lim + (2.0 ** -n if vanishing else 0.5) * (far - lim) for n in range(1, N + 1)]

    A = {}
    for k in range(K):
        lim = joint()
        A[f"a{k}"] = lim
        for n, m in enumerate(path(lim), start=1):
            A[f"a{k}_{n}"] = m
    B = {"b": joint()}
    for n, m in enumerate(path(B["b"]), start=1):
        B[f"b_{n}"] = m
    table = {}
    for p3 in s3.point_ids:
        for p4 in s4.point_ids:
            m = 0.5 * (A[p3] + B[p4])
            table[(p3, p4)] = JointMeasure(s1, s2, m / m.sum())
    kernel = ParamKernel(s1, s2, par, table)
    seqs = tuple(ConvergentSequence(s3, [f"a{k}_{n}" for n in range(1, N + 1)], f"a{k}") for k in range(K))
    s4_seq = ConvergentSequence(s4, [f"b_{n}" for n in range(1, N + 1)], "b")
    w = rng.dirichlet(np.ones(K))
    return ProductMixtureInstance(kernel, seqs, s4_seq, w, vanishing)


def generate(recipe: InstanceRecipe):
    """Dispatch on ``recipe.construction``."""
    if recipe.construction == "tv_converging_mixture":
        return tv_converging_mixture(recipe)
    if recipe.construction == "marginal_tv_only":
        return marginal_tv_only(recipe)
    if recipe.construction == "indicator_example":
        return indicator_example_family(recipe.sizes[2])
    return product_mixture(recipe)
