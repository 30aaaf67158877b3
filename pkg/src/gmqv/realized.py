"""Realized quadratic variation over partitions and Monte Carlo convergence
studies against the closed-form law.

Partitions in the study always include every event time up to the horizon,
so jump mass is never split across cells and the realized sums converge to
the closed law as the mesh shrinks.  Per level, path k draws from the stream
keyed (seed, level, k); rerunning with the same seed reproduces every stream.
"""

from dataclasses import dataclass
import csv
import math

import numpy as np

from . import process_model as pm
from . import quadvar
from . import simulate
from .process_model import ProcessSpec
from .simulate import PathSample

CSV_HEADER = (
    "level,mesh,mc_mean,mc_var,mc_se,expected_realized,law_mean,law_var,n_paths"
)


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    mesh: float
    mc_mean: float
    mc_var: float
    mc_se: float
    expected_realized: float
    law_mean: float
    law_var: float
    n_paths: int


def realized_qv(path: PathSample, partition, *, centred: bool = False) -> float:
    """Sum of squared increments of the path over ``partition``, which must
    consist of regular (non-ghost) grid times starting at the grid origin."""
    partition = np.asarray(partition, dtype=float)
    if partition.size < 2:
        raise ValueError("partition needs at least two points")
    if np.any(np.diff(partition) <= 0):
        raise ValueError("partition must be strictly increasing")
    reg_times = path.grid.regular_times
    if partition[0] != reg_times[0]:
        raise ValueError(f"partition must start at the grid origin {reg_times[0]}")
    idx = np.searchsorted(reg_times, partition)
    bad = (idx >= reg_times.size) | (
        reg_times[np.minimum(idx, reg_times.size - 1)] != partition
    )
    if np.any(bad):
        raise ValueError(
            f"partition time {partition[bad][0]} is not a regular grid entry"
        )
    series = path.centred_values if centred else path.values
    vals = series[path.grid.regular_mask][idx]
    return float(np.sum(np.diff(vals) ** 2))


def expected_realized_qv(spec: ProcessSpec, partition, *, include_mean: bool = False) -> float:
    """Closed-form E of the realized sum over a fixed partition:
    sum_j Var(t_{j+1}) + Var(t_j) - 2 K(t_j, t_{j+1}), plus the squared mean
    increments when the study includes the mean."""
    partition = np.asarray(partition, dtype=float)
    if partition.size < 2:
        raise ValueError("partition needs at least two points")
    if np.any(np.diff(partition) <= 0):
        raise ValueError("partition must be strictly increasing")
    for t in partition:
        spec.require_inside(float(t))
    total = 0.0
    variances = [pm.variance(spec, float(t)) for t in partition]
    for j in range(partition.size - 1):
        s, t = float(partition[j]), float(partition[j + 1])
        total += variances[j + 1] + variances[j] - 2.0 * pm.eval_kernel(spec, s, t)
    if include_mean:
        mean_vals = [spec.mean.eval_right(float(t)) for t in partition]
        total += float(np.sum(np.diff(mean_vals) ** 2))
    return total


def variance_standard_error(samples: np.ndarray) -> float:
    """Standard error of the unbiased sample-variance estimator,
    sqrt((m4 - s^4 (n-3)/(n-1)) / n) with m4 the empirical fourth central
    moment."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 4:
        raise ValueError("need at least four samples")
    d = samples - samples.mean()
    s2 = float(np.sum(d * d) / (n - 1))
    m4 = float(np.mean(d**4))
    var_of_var = (m4 - s2 * s2 * (n - 3) / (n - 1)) / n
    return math.sqrt(max(var_of_var, 0.0))


def _realized_per_path(spec, grid, seed, n_paths, level, with_mean):
    """Realized QV of every path over the grid's full regular partition."""
    matrix = simulate.sample_centred_matrix(spec, grid, seed, n_paths, stream_key=(level,))
    reg = matrix[:, grid.regular_mask]
    if with_mean:
        reg = reg + np.array([spec.mean.eval_right(float(t)) for t in grid.regular_times])
    return np.sum(np.diff(reg, axis=1) ** 2, axis=1)


def convergence_study(
    spec: ProcessSpec,
    t: float,
    levels,
    n_paths: int,
    seed: int,
    *,
    with_mean: bool = False,
) -> list[ConvergenceRow]:
    """One row per refinement level: simulate n_paths paths on the dyadic
    grid with 2^level cells (plus event times), and report the Monte Carlo
    mean/variance of realized QV next to the closed-form expectation and the
    law's moments."""
    levels = list(levels)
    if not levels:
        raise ValueError("levels must be nonempty")
    if n_paths < 100:
        raise ValueError("n_paths must be at least 100")
    law = quadvar.build_law(spec, t, include_mean=with_mean)
    lm = quadvar.law_mean(law)
    lv = quadvar.law_variance(law)
    rows = []
    for level in levels:
        cells = 1 << level
        grid = simulate.make_grid(spec, t, cells)
        rq = _realized_per_path(spec, grid, seed, n_paths, level, with_mean)
        mc_var = float(rq.var(ddof=1))
        partition = grid.regular_times
        rows.append(
            ConvergenceRow(
                level=level,
                mesh=(t - spec.interval_lower) / cells,
                mc_mean=float(rq.mean()),
                mc_var=mc_var,
                mc_se=math.sqrt(mc_var / n_paths),
                expected_realized=expected_realized_qv(
                    spec, partition, include_mean=with_mean
                ),
                law_mean=lm,
                law_var=lv,
                n_paths=n_paths,
            )
        )
    return rows


@dataclass(frozen=True)
class VerifyResult:
    row: ConvergenceRow
    var_se: float
    mean_ok: bool
    var_ok: bool  # vacuously True for laws without jump variance

    @property
    def ok(self) -> bool:
        return self.mean_ok and self.var_ok


def verify_level(
    spec: ProcessSpec,
    t: float,
    level: int,
    n_paths: int,
    seed: int,
    *,
    with_mean: bool = False,
    bands: float = 4.0,
) -> VerifyResult:
    """Single-level check that the Monte Carlo moments sit within ``bands``
    standard errors of the law's mean and (when the law carries jump
    variance) of the law's variance."""
    law = quadvar.build_law(spec, t, include_mean=with_mean)
    lm = quadvar.law_mean(law)
    lv = quadvar.law_variance(law)
    grid = simulate.make_grid(spec, t, 1 << level)
    rq = _realized_per_path(spec, grid, seed, n_paths, level, with_mean)
    mc_mean = float(rq.mean())
    mc_var = float(rq.var(ddof=1))
    mc_se = math.sqrt(mc_var / n_paths)
    var_se = variance_standard_error(rq)
    row = ConvergenceRow(
        level=level,
        mesh=(t - spec.interval_lower) / (1 << level),
        mc_mean=mc_mean,
        mc_var=mc_var,
        mc_se=mc_se,
        expected_realized=expected_realized_qv(
            spec, grid.regular_times, include_mean=with_mean
        ),
        law_mean=lm,
        law_var=lv,
        n_paths=n_paths,
    )
    mean_ok = abs(mc_mean - lm) <= bands * mc_se
    var_ok = True if lv == 0.0 else abs(mc_var - lv) <= bands * var_se
    return VerifyResult(row, var_se, mean_ok, var_ok)


def write_convergence_csv(rows, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for r in rows:
        writer.writerow(
            [
                r.level,
                f"{r.mesh:.12g}",
                f"{r.mc_mean:.12g}",
                f"{r.mc_var:.12g}",
                f"{r.mc_se:.12g}",
                f"{r.expected_realized:.12g}",
                f"{r.law_mean:.12g}",
                f"{r.law_var:.12g}",
                r.n_paths,
            ]
        )
