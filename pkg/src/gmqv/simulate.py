"""Exact simulation of a Gauss-Markov semimartingale on a time grid.

Sampling walks the grid once using the Markov conditional transitions the
factor representation implies: within a block, X_t | X_s is Normal with
slope K(s,t)/K(s,s) and noise K(t,t) - K(s,t)^2/K(s,s); at an independence
boundary the process restarts from Normal(0, Var); degenerate conditioning
(variance below ``DEGENERATE_VAR_EPS``) also restarts, which covers process
starts and bridge endpoints exactly.

Grids carry ghost entries: each event time tau is preceded by an entry that
realizes the left limit X_{tau-} exactly, so the jump across tau is sampled
from its true conditional law.  Ghost entries share tau's timestamp and are
never consumed by realized-variation estimators.

Determinism contract: path k of ``sample_paths(spec, grid, seed, n)`` uses
the stream keyed (seed, k) and consumes exactly one normal draw (one uniform
double, see gmqv.randomness) per grid entry, in grid order.  Outputs are
bit-identical for identical inputs on one platform and independent of
evaluation order across paths.
"""

from dataclasses import dataclass

import numpy as np

from . import process_model as pm
from . import randomness
from .process_model import ProcessSpec, Side, SidedTime, SpecError

DEGENERATE_VAR_EPS = 1e-12
_NOISE_FLOOR = -1e-12


@dataclass(frozen=True, eq=False)
class SimGrid:
    """Sorted sampling times; ghost entries are left limits at event times."""

    times: np.ndarray
    is_ghost: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.is_ghost.shape or self.times.ndim != 1:
            raise ValueError("times and is_ghost must be 1-d arrays of equal length")
        if self.times.size == 0:
            raise ValueError("grid is empty")
        if self.is_ghost[0]:
            raise ValueError("grid cannot start with a ghost entry")
        if np.any(np.diff(self.regular_times) <= 0):
            raise ValueError("regular grid times must be strictly increasing")
        for j in np.nonzero(self.is_ghost)[0]:
            if (
                j + 1 >= self.times.size
                or self.is_ghost[j + 1]
                or self.times[j + 1] != self.times[j]
            ):
                raise ValueError(
                    f"ghost at index {j} must immediately precede a regular entry "
                    "at the same time"
                )

    def __len__(self):
        return self.times.size

    @property
    def regular_mask(self) -> np.ndarray:
        return ~self.is_ghost

    @property
    def regular_times(self) -> np.ndarray:
        return self.times[self.regular_mask]

    def sided(self, j: int) -> SidedTime:
        side = Side.LEFT if self.is_ghost[j] else Side.VALUE
        return SidedTime(float(self.times[j]), side)


def make_grid(spec: ProcessSpec, horizon: float, cells: int, extra_times=()) -> SimGrid:
    """Uniform grid of ``cells`` cells on [a, horizon] with every event time
    <= horizon inserted (each preceded by its ghost) plus any extra times."""
    spec.require_inside(horizon)
    a = spec.interval_lower
    if not (horizon > a):
        raise ValueError(f"horizon must exceed the interval start {a}")
    if cells < 1:
        raise ValueError("cells must be at least 1")
    base = a + (horizon - a) * np.arange(cells + 1) / cells
    events = [tau for tau in spec.event_times_all if tau <= horizon]
    for t in extra_times:
        spec.require_inside(t)
        if not (a < t <= horizon):
            raise ValueError(f"extra time {t} outside ({a}, {horizon}]")
    regular = np.unique(
        np.concatenate([base, np.asarray(events, dtype=float), np.asarray(extra_times, dtype=float)])
    )
    times, ghost = [], []
    event_set = set(events)
    for t in regular:
        if t in event_set:
            times.append(t)
            ghost.append(True)
        times.append(t)
        ghost.append(False)
    return SimGrid(np.array(times), np.array(ghost))


@dataclass(frozen=True, eq=False)
class PathSample:
    grid: SimGrid
    centred_values: np.ndarray
    values: np.ndarray  # centred + mean (left-limit mean at ghost entries)


def transition_params(spec: ProcessSpec, s, t, *, eps: float = DEGENERATE_VAR_EPS):
    """Conditional step law within a block: X_t | X_s ~ Normal(slope * X_s,
    noise_var) with slope = K(s,t)/K(s,s), noise_var = K(t,t) - K(s,t)^2/K(s,s)
    (equivalently g(t)/g(s) and g(t)^2 [(f/g)(t) - (f/g)(s)]).

    Raises when s and t resolve into different blocks or when Var(X_s) <= eps
    (callers must use the restart branch in both cases).  A noise variance
    below -1e-12 is a contract violation; tiny negatives are clamped to 0.
    """
    s, t = pm.as_sided(s), pm.as_sided(t)
    if not (s.sort_key < t.sort_key):
        raise SpecError(f"need s before t, got {s} and {t}")
    if spec.block_index(s) != spec.block_index(t):
        raise SpecError(f"{s} and {t} lie in different independence blocks")
    var_s = pm.variance(spec, s)
    if var_s <= eps:
        raise SpecError(f"degenerate conditioning: Var at {s} is {var_s}")
    kst = pm.eval_kernel(spec, s, t)
    slope = kst / var_s
    noise_var = pm.variance(spec, t) - kst * slope
    if noise_var < _NOISE_FLOOR:
        raise SpecError(f"negative conditional variance {noise_var} on {s} -> {t}")
    return slope, max(noise_var, 0.0)


def _step_plan(spec: ProcessSpec, grid: SimGrid, eps: float) -> np.ndarray:
    """Per-entry (slope, sd) pairs; slope 0 marks an (independent) restart."""
    plan = np.empty((len(grid), 2))
    prev = grid.sided(0)
    plan[0] = (0.0, np.sqrt(max(pm.variance(spec, prev), 0.0)))
    for j in range(1, len(grid)):
        cur = grid.sided(j)
        if spec.block_index(prev) != spec.block_index(cur):
            restart = True
        elif pm.variance(spec, prev) <= eps:
            if pm.eval_kernel(spec, prev, cur) > eps:
                raise SpecError(
                    f"inconsistent spec: Var at {prev} vanishes but the "
                    f"covariance with {cur} does not"
                )
            restart = True
        else:
            restart = False
        if restart:
            plan[j] = (0.0, np.sqrt(max(pm.variance(spec, cur), 0.0)))
        else:
            slope, noise = transition_params(spec, prev, cur, eps=eps)
            plan[j] = (slope, np.sqrt(noise))
        prev = cur
    return plan


def _simulate_rows(spec: ProcessSpec, grid: SimGrid, stream_keys) -> np.ndarray:
    """One centred path per stream key, vectorized across rows."""
    plan = _step_plan(spec, grid, DEGENERATE_VAR_EPS)
    m = len(grid)
    out = np.empty((len(stream_keys), m))
    for k, key in enumerate(stream_keys):
        rng = randomness.stream(*key)
        out[k] = randomness.normal_draws(rng, m)
    out[:, 0] *= plan[0, 1]
    for j in range(1, m):
        slope, sd = plan[j]
        out[:, j] = slope * out[:, j - 1] + sd * out[:, j]
    return out


def _mean_on_grid(spec: ProcessSpec, grid: SimGrid) -> np.ndarray:
    return np.array([spec.mean.eval_sided(grid.sided(j)) for j in range(len(grid))])


def sample_centred_matrix(
    spec: ProcessSpec, grid: SimGrid, seed: int, n: int, stream_key=()
) -> np.ndarray:
    """(n, len(grid)) matrix of centred paths; row k drawn from the stream
    keyed (seed, *stream_key, k)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return _simulate_rows(spec, grid, [(seed, *stream_key, k) for k in range(n)])


def sample_path(spec: ProcessSpec, grid: SimGrid, seed: int, stream: int = 0) -> PathSample:
    """One path from the stream keyed (seed, stream)."""
    matrix = _simulate_rows(spec, grid, [(seed, stream)])
    return _wrap_paths(spec, grid, matrix)[0]


def sample_paths(spec: ProcessSpec, grid: SimGrid, seed: int, n: int) -> list[PathSample]:
    """n independent paths; path k uses the stream keyed (seed, k)."""
    matrix = sample_centred_matrix(spec, grid, seed, n)
    return _wrap_paths(spec, grid, matrix)


def _wrap_paths(spec, grid, matrix):
    mean_vec = _mean_on_grid(spec, grid)
    return [PathSample(grid, row, row + mean_vec) for row in matrix]
