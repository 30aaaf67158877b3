"""Riemann-Stieltjes integration of a continuous integrand against a
monotone integrator on [lo, hi], by dyadic refinement to tolerance.

The upper endpoint carries left-limit semantics: callers pass integrand and
integrator callables that are already segment-resolved, so evaluating them at
``hi`` yields the left limit there.  No extrapolation is performed.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

DEFAULT_TOL = 1e-8
DEFAULT_MAX_LEVELS = 22
_FIRST_LEVEL = 4


class ConvergenceError(RuntimeError):
    """Raised by callers that cannot accept a non-converged estimate."""


@dataclass
class RSRequest:
    integrand: Callable[[float], float]
    integrator: Callable[[float], float]
    lo: float
    hi: float
    tol: float = DEFAULT_TOL
    max_levels: int = DEFAULT_MAX_LEVELS

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ValueError(f"need lo <= hi, got [{self.lo}, {self.hi}]")
        if not (self.tol > 0.0):
            raise ValueError("tol must be positive")


@dataclass
class RSResult:
    value: float
    achieved_tol: float
    levels_used: int
    converged: bool


def rs_sum(req: RSRequest, partition) -> float:
    """Left-point Stieltjes sum over an explicit partition of [lo, hi]:
    sum_j integrand(t_j) * [integrator(t_{j+1}) - integrator(t_j)].
    """
    partition = np.asarray(partition, dtype=float)
    if partition.ndim != 1 or partition.size < 2:
        raise ValueError("partition needs at least two points")
    if partition[0] != req.lo or partition[-1] != req.hi:
        raise ValueError(
            f"partition must run from {req.lo} to {req.hi}, "
            f"got [{partition[0]}, {partition[-1]}]"
        )
    if np.any(np.diff(partition) <= 0):
        raise ValueError("partition must be strictly increasing")
    fvals = np.array([req.integrator(t) for t in partition])
    gvals = np.array([req.integrand(t) for t in partition[:-1]])
    return float(np.sum(gvals * np.diff(fvals)))


def _dyadic_estimate(req: RSRequest, level: int) -> float:
    """Midpoint-integrand estimate on 2**level uniform subintervals."""
    n = 1 << level
    edges = req.lo + (req.hi - req.lo) * np.arange(n + 1) / n
    mids = 0.5 * (edges[:-1] + edges[1:])
    fvals = np.array([req.integrator(t) for t in edges])
    gvals = np.array([req.integrand(t) for t in mids])
    return float(np.sum(gvals * np.diff(fvals)))


def rs_integral(req: RSRequest) -> RSResult:
    """Refine dyadically (2^k cells, k = 4, 5, ...) until successive
    estimates agree to |I_k - I_{k-1}| <= tol * (1 + |I_k|).

    Returns the last estimate either way; ``converged`` is False when
    max_levels was exhausted first.  A zero-length interval integrates to 0.
    """
    if req.lo == req.hi:
        return RSResult(0.0, 0.0, 0, True)
    prev = _dyadic_estimate(req, _FIRST_LEVEL)
    level, achieved = _FIRST_LEVEL, np.inf
    for level in range(_FIRST_LEVEL + 1, req.max_levels + 1):
        cur = _dyadic_estimate(req, level)
        achieved = abs(cur - prev) / (1.0 + abs(cur))
        prev = cur
        if achieved <= req.tol:
            return RSResult(cur, achieved, level, True)
    return RSResult(prev, float(achieved), level, False)
