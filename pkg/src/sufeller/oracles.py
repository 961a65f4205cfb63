"""Brute-force reference computations.

Nothing here uses the Jordan closed forms: set functionals are evaluated by
enumerating every subset ``B`` of S2 and measuring the rectangles ``O x B``
under ``P_n`` and ``P`` separately; the KR metric is evaluated by visiting
every vertex of the constraint polytope.  These are slow by design and only
meant for small spaces.
"""

from __future__ import annotations

import itertools

import numpy as np

MAX_ORACLE_SIZE = 16


def subset_masks(k: int) -> np.ndarray:
    """All ``2^k`` subsets of ``range(k)`` as a 0/1 matrix, one row per subset."""
    if k > MAX_ORACLE_SIZE:
        raise ValueError(f"subset enumeration refused for {k} > {MAX_ORACLE_SIZE} points")
    return np.array(list(itertools.product((0.0, 1.0), repeat=k))).reshape(2 ** k, k)


def set_function_range(values) -> tuple[float, float]:
    """``(max_B d(B), min_B d(B))`` by enumeration."""
    v = np.asarray(values, dtype=float)
    s = subset_masks(v.size) @ v
    return float(s.max()), float(s.min())


def rectangle_masses(mass: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``sum_{s1} w(s1) * mass(s1, B)`` for every subset B of S2."""
    row = np.asarray(weights, dtype=float) @ mass
    return subset_masks(mass.shape[1]) @ row


def _per_index(F, weights):
    base = rectangle_masses(F.limit.mass, weights)
    return [rectangle_masses(P.mass, weights) - base for P in F.joints]


def sup_abs_gaps(F, weights) -> np.ndarray:
    return np.array([np.abs(v).max() for v in _per_index(F, weights)])


def neg_gaps(F, weights) -> np.ndarray:
    # inf over B includes the empty set, so the gap is never negative
    return np.array([-v.min() for v in _per_index(F, weights)])


def pos_gaps(F, weights) -> np.ndarray:
    return np.array([v.max() for v in _per_index(F, weights)])


def full_tv_gaps(F) -> np.ndarray:
    """``sup_C |P_n(C) - P(C)|`` over subsets C of S1 x S2.

    A subset of the product is a union of row slices ``{s1} x B_{s1}``, so the
    sup over C splits into independent sups over B per row.
    """
    masks = subset_masks(F.limit.mass.shape[1])
    out = []
    for P in F.joints:
        per_row = (P.mass - F.limit.mass) @ masks.T   # (|S1|, 2^|S2|)
        hi = per_row.max(axis=1).sum()
        lo = per_row.min(axis=1).sum()
        out.append(max(hi, -lo))
    return np.array(out)


def tv_by_subsets(mu, nu) -> float:
    hi, lo = set_function_range(np.asarray(mu) - np.asarray(nu))
    return max(hi, -lo)


def oracle_series(label: str, F, weights=None, sets=None) -> np.ndarray:
    """Reference gap series for one condition label and witness."""
    n1 = F.limit.mass.shape[0]
    if label in ("a", "d"):
        return sup_abs_gaps(F, weights)
    if label in ("b", "e"):
        return neg_gaps(F, weights)
    if label == "c":
        return pos_gaps(F, weights)
    if label == "tv_marginal":
        return sup_abs_gaps(F, np.ones(n1))
    if label == "tv_full":
        return full_tv_gaps(F)
    if label == "asskern":
        rows = [sup_abs_gaps(F, w) for w in sets]
        return np.max(np.vstack(rows), axis=0)
    raise ValueError(f"no oracle for label {label!r}")


def kr_by_vertices(diff, metric) -> float:
    """KR value by enumerating every basic solution of the LP (tiny spaces only)."""
    d = np.asarray(diff, dtype=float)
    n = d.size
    if n > 5:
        raise ValueError("vertex enumeration is limited to 5 points")
    rows, rhs = [], []
    for i, j in itertools.permutations(range(n), 2):
        r = np.zeros(n)
        r[i], r[j] = 1.0, -1.0
        rows.append(r)
        rhs.append(metric[i, j])
    for i in range(n):
        for s in (1.0, -1.0):
            r = np.zeros(n)
            r[i] = s
            rows.append(r)
            rhs.append(1.0)
    A, b = np.array(rows), np.array(rhs)
    best = -np.inf
    for idx in itertools.combinations(range(len(rows)), n):
        M = A[list(idx)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(idx)])
        if np.all(A @ x <= b + 1e-9):
            best = max(best, float(d @ x))
    return best


def transport_kr(mu, nu, metric) -> float:
    """KR value as an optimal-transport cost with ground cost ``min(rho, 2)``.

    Independent primal route: a bounded-Lipschitz unit ball with ``|f| <= 1`` is
    the Lipschitz unit ball of the truncated metric up to constants, which do
    not change integrals against ``mu - nu``.
    """
    from scipy.optimize import linprog

    mu, nu = np.asarray(mu, float), np.asarray(nu, float)
    n = mu.size
    cost = np.minimum(metric, 2.0).reshape(-1)
    A_eq = np.vstack([np.kron(np.eye(n), np.ones(n)), np.kron(np.ones(n), np.eye(n))])
    res = linprog(cost, A_eq=A_eq, b_eq=np.concatenate([mu, nu]), bounds=(0, None), method="highs")
    return float(res.fun)
