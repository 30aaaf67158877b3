"""Closed-form quadratic-variation law of a Gauss-Markov semimartingale.

The law of the quadratic variation at time t is

    [X]_t = deterministic_part + sum_j (Z_j + mean_jump_j)^2

where the deterministic part accumulates the Stieltjes integrals of g^2
against f/g over the continuous pieces up to t, and Z is a centred Gaussian
vector over the event times <= t with the covariance the process increments
force (Cov(DX_i, DX_j) assembled from four side-resolved kernel values).
Degenerate entries (mean-only jump times) carry Z_j = 0, which makes the
mean-adjusted law expand to exactly
[centred law] + 2 sum DX dmu + sum (dmu)^2.

Convention for the jump at t itself: when t is an event time the squared
jump (DX_t)^2 is part of the closed law (``closed_at_t=True``, the default);
the flag exists for left-limit studies.  The law's mean therefore includes
E[(DX_t)^2], not a linear jump term; the Monte Carlo harness in
``gmqv.realized`` checks this convention empirically.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import process_model as pm
from . import randomness
from .process_model import ProcessSpec, SpecError
from .stieltjes import (
    DEFAULT_MAX_LEVELS,
    DEFAULT_TOL,
    ConvergenceError,
    RSRequest,
    rs_integral,
)

# |values| below this (relative) threshold are numerical dust from evaluating
# equal one-sided limits through different segment expressions
_DUST = 1e-14


@dataclass(frozen=True)
class JumpSpec:
    time: float
    gauss_var: float       # E[(DX)^2] of the centred jump
    mean_jump: float = 0.0  # mean increment at this time

    def __post_init__(self):
        if self.gauss_var < 0.0:
            raise SpecError(f"jump variance must be nonnegative, got {self.gauss_var}")


@dataclass(frozen=True, eq=False)
class QuadVarLaw:
    t: float
    deterministic_part: float
    jumps: tuple[JumpSpec, ...]
    jump_cov: np.ndarray  # symmetric PSD, diagonal = gauss_var


def event_times(spec: ProcessSpec, t: float):
    """Event times strictly below t plus whether t itself is one."""
    spec.require_inside(t)
    all_times = spec.event_times_all
    return tuple(tau for tau in all_times if tau < t), t in all_times


def jump_second_moment(spec: ProcessSpec, tau: float) -> float:
    """E[(DX_tau)^2] = Var(tau) + Var(tau-) - 2 K(tau-, tau); zero at
    continuity points."""
    if tau == spec.interval_lower:
        raise SpecError("no left limit at the interval's lower endpoint")
    spec.require_inside(tau)
    v = pm.variance(spec, tau)
    vm = pm.variance(spec, pm.left(tau))
    cross = pm.eval_kernel(spec, pm.left(tau), pm.at(tau))
    moment = v + vm - 2.0 * cross
    scale = 1.0 + v + vm
    if moment < -_DUST * scale:
        raise SpecError(f"negative jump second moment {moment} at {tau}")
    return max(moment, 0.0)


def jump_covariance(spec: ProcessSpec, tau_i: float, tau_j: float) -> float:
    """Cov(DX_i, DX_j) for event times tau_i < tau_j, via the four
    side-resolved kernel values (zero across independence boundaries)."""
    if not (tau_i < tau_j):
        raise SpecError(f"need tau_i < tau_j, got {tau_i}, {tau_j}")
    li, vi = pm.left(tau_i), pm.at(tau_i)
    lj, vj = pm.left(tau_j), pm.at(tau_j)
    return (
        pm.eval_kernel(spec, vi, vj)
        - pm.eval_kernel(spec, vi, lj)
        - pm.eval_kernel(spec, li, vj)
        + pm.eval_kernel(spec, li, lj)
    )


def _piece_integral(spec: ProcessSpec, lo: float, hi: float, tol, max_levels) -> float:
    """Integral of g^2 d(f/g) over one continuous piece [lo, hi-].

    Event times cut the interval at every declared breakpoint, so f and g are
    single segments here.  When g vanishes in left limit at hi (the variance
    degenerates at a block's end) the f/g integrator is not evaluable at the
    closed endpoint; the identity g^2 d(f/g) = g df - f dg turns the piece
    into two proper integrals with continuous integrators and the same value.
    """
    block = spec.block_at(pm.at(lo))
    f_seg = block.f.segment_at(pm.at(lo))
    g_seg = block.g.segment_at(pm.at(lo))
    if hi > f_seg.upper or hi > g_seg.upper:
        raise AssertionError(f"piece [{lo}, {hi}] crosses a segment boundary")

    def run(integrand, integrator):
        res = rs_integral(RSRequest(integrand, integrator, lo, hi, tol, max_levels))
        if not res.converged:
            raise ConvergenceError(
                f"integral over [{lo}, {hi}] did not converge: "
                f"achieved {res.achieved_tol:g} after level {res.levels_used}"
            )
        return res.value

    if g_seg.eval(hi) != 0.0:
        return run(lambda x: g_seg.eval(x) ** 2, lambda x: f_seg.eval(x) / g_seg.eval(x))
    return run(g_seg.eval, f_seg.eval) - run(f_seg.eval, g_seg.eval)


def build_law(
    spec: ProcessSpec,
    t: float,
    include_mean: bool = False,
    *,
    closed_at_t: bool = True,
    tol: float = DEFAULT_TOL,
    max_levels: int = DEFAULT_MAX_LEVELS,
) -> QuadVarLaw:
    """Assemble the quadratic-variation law at time t.

    With ``include_mean`` the law covers the process with its mean added:
    mean-increment jumps enter alongside the Gaussian ones, possibly at times
    where the centred process is continuous (degenerate gauss_var = 0).
    Times contributing neither a Gaussian nor a mean jump are dropped.
    """
    spec.require_inside(t)
    below, t_is_event = event_times(spec, t)

    bounds = [spec.interval_lower, *below, t]
    det = 0.0
    for lo, hi in zip(bounds, bounds[1:]):
        if lo < hi:
            det += _piece_integral(spec, lo, hi, tol, max_levels)

    jump_times = set(below)
    if t_is_event and closed_at_t and t > spec.interval_lower:
        jump_times.add(t)
    if include_mean:
        for tau in spec.mean_break_times:
            if tau < t or (closed_at_t and tau == t):
                jump_times.add(tau)

    jumps = []
    for tau in sorted(jump_times):
        gv = jump_second_moment(spec, tau)
        delta = 0.0
        if include_mean:
            delta = spec.mean.eval_right(tau) - spec.mean.eval_left(tau)
            if abs(delta) <= _DUST * (1.0 + abs(spec.mean.eval_right(tau))):
                delta = 0.0
        if gv == 0.0 and delta == 0.0:
            continue
        jumps.append(JumpSpec(tau, gv, delta))

    k = len(jumps)
    cov = np.zeros((k, k))
    for i in range(k):
        cov[i, i] = jumps[i].gauss_var
        for j in range(i + 1, k):
            cov[i, j] = cov[j, i] = jump_covariance(spec, jumps[i].time, jumps[j].time)

    return QuadVarLaw(t, det, tuple(jumps), cov)


def law_mean(law: QuadVarLaw) -> float:
    return law.deterministic_part + sum(j.gauss_var + j.mean_jump**2 for j in law.jumps)


def law_variance(law: QuadVarLaw) -> float:
    """Variance of det + sum (Z_j + delta_j)^2 for Z ~ N(0, jump_cov):
    2 sum_ij Cov_ij^2 + 4 delta' Cov delta."""
    if not law.jumps:
        return 0.0
    delta = np.array([j.mean_jump for j in law.jumps])
    c = law.jump_cov
    return float(2.0 * np.sum(c * c) + 4.0 * delta @ c @ delta)


def sample_law(law: QuadVarLaw, seed: int, n: int, *, psd_tol: float = 1e-10) -> np.ndarray:
    """Draw n independent realizations of the law, reproducible from seed.

    One uniform double per (draw, jump) is consumed from the stream keyed by
    ``seed`` alone, in draw-major order.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not law.jumps:
        return np.full(n, law.deterministic_part)
    eigvals, eigvecs = np.linalg.eigh(law.jump_cov)
    scale = max(1.0, float(eigvals[-1]))
    if eigvals[0] < -psd_tol * scale:
        raise SpecError(
            f"jump covariance is not positive semidefinite: eigenvalue {eigvals[0]}"
        )
    transform = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
    delta = np.array([j.mean_jump for j in law.jumps])
    rng = randomness.stream(seed)
    z = randomness.normal_draws(rng, (n, len(law.jumps))) @ transform.T
    return law.deterministic_part + np.sum((z + delta) ** 2, axis=1)
