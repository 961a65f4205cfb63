"""Gap series and the trailing-window verdict rule.

A gap series is the finite stand-in for a statement ``lim_n gap(n) = 0``.  The
verdict looks only at the last ``window`` indices:

* ``vanishing``      every trailing gap is ``<= epsilon``
* ``not_vanishing``  every trailing gap is ``>= 10 * epsilon``
* ``inconclusive``   anything else, or fewer than ``window`` gaps
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

DEFAULT_EPSILON = 1e-6
DEFAULT_WINDOW = 3
DEAD_BAND = 10.0

LABELS = ("a", "b", "c", "d", "e", "tv_marginal", "tv_full", "weak", "asskern",
          "uniform", "lse", "equi")


class Verdict(str, enum.Enum):
    VANISHING = "vanishing"
    NOT_VANISHING = "not_vanishing"
    INCONCLUSIVE = "inconclusive"

    def __str__(self) -> str:
        return self.value


def env_defaults() -> tuple[float, int]:
    """Default (epsilon, window), overridable by SUFELLER_EPSILON / SUFELLER_WINDOW."""
    eps = float(os.environ.get("SUFELLER_EPSILON", DEFAULT_EPSILON))
    window = int(os.environ.get("SUFELLER_WINDOW", DEFAULT_WINDOW))
    return eps, window


def judge(gaps, epsilon: float = DEFAULT_EPSILON, window: int = DEFAULT_WINDOW
          ) -> tuple[Verdict, Optional[str]]:
    g = np.asarray(gaps, dtype=float)
    if window < 1:
        raise ValueError("window must be positive")
    if g.size < window:
        return Verdict.INCONCLUSIVE, f"only {g.size} gaps for a window of {window}"
    tail = g[-window:]
    if np.all(tail <= epsilon):
        return Verdict.VANISHING, None
    if np.all(tail >= DEAD_BAND * epsilon):
        return Verdict.NOT_VANISHING, None
    return Verdict.INCONCLUSIVE, None


def verdict(g, epsilon: float = DEFAULT_EPSILON, window: int = DEFAULT_WINDOW) -> Verdict:
    """Verdict for a :class:`GapSeries` or a plain vector of gaps."""
    gaps = g.gaps if isinstance(g, GapSeries) else g
    return judge(gaps, epsilon, window)[0]


@dataclass(frozen=True, eq=False)
class GapSeries:
    """Per-index nonnegative gaps of one condition for one witness.

    ``gaps[k]`` belongs to sequence index ``n = k + 1``.
    """

    label: str
    gaps: np.ndarray
    witness: str = ""
    epsilon: float = DEFAULT_EPSILON
    window: int = DEFAULT_WINDOW
    verdict: Verdict = field(init=False)
    diagnostic: Optional[str] = field(init=False)

    def __post_init__(self):
        g = np.array(self.gaps, dtype=float).reshape(-1)
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError(f"gap series {self.label}/{self.witness} has negative or non-finite entries")
        g.setflags(write=False)
        object.__setattr__(self, "gaps", g)
        v, diag = judge(g, self.epsilon, self.window)
        object.__setattr__(self, "verdict", v)
        object.__setattr__(self, "diagnostic", diag)

    @property
    def params(self) -> tuple[float, int]:
        return self.epsilon, self.window

    def __len__(self) -> int:
        return self.gaps.size

    def rejudge(self, epsilon: float, window: int) -> "GapSeries":
        return replace(self, epsilon=epsilon, window=window)

    def renamed(self, witness: str) -> "GapSeries":
        return replace(self, witness=witness)


def sup_series(label: str, series: list[GapSeries], witness: str = "sup",
               epsilon: float = DEFAULT_EPSILON, window: int = DEFAULT_WINDOW) -> GapSeries:
    """Elementwise supremum over a witness family."""
    if not series:
        raise ValueError("no series to aggregate")
    stack = np.vstack([s.gaps for s in series])
    return GapSeries(label, stack.max(axis=0), witness, epsilon, window)
