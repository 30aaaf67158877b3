"""Process specification: independence blocks, piecewise covariance factors,
kernel evaluation, structural and sampled validation, factor extraction.

A process lives on ``[interval_lower, interval_upper)`` and is cut into
independence blocks.  Inside block ``i`` the covariance is
``K(s, t) = f_i(min(s, t)) * g_i(max(s, t))``; across blocks it is zero.
``f_i`` and ``g_i`` are piecewise functions whose segment breakpoints are the
declared factor-discontinuity times of the block.

Times are addressed with a side: ``value`` is the cadlag value at ``t``,
``left`` the limit from below.  A left-sided time at a block's lower boundary
resolves into the previous block; a left-sided time inside a segment resolves
to the segment itself (segments are continuous on their closed intervals, so
the left limit at a segment's upper endpoint is the expression value there).
"""

from dataclasses import dataclass, field
import enum
import itertools
import math

import numpy as np

from . import exprfn
from .exprfn import Expr

INF = math.inf


class SpecError(ValueError):
    """A process specification violated one of its structural contracts."""


class Side(enum.Enum):
    LEFT = "left"    # limit from below
    VALUE = "value"  # cadlag value

    def __repr__(self):
        return f"Side.{self.name}"


@dataclass(frozen=True)
class SidedTime:
    t: float
    side: Side = Side.VALUE

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise SpecError(f"time must be finite, got {self.t!r}")

    @property
    def sort_key(self):
        # left limits order strictly before the value at the same time
        return (self.t, 0 if self.side is Side.LEFT else 1)


def at(t: float) -> SidedTime:
    return SidedTime(float(t), Side.VALUE)


def left(t: float) -> SidedTime:
    return SidedTime(float(t), Side.LEFT)


def as_sided(t) -> SidedTime:
    return t if isinstance(t, SidedTime) else at(t)


@dataclass(frozen=True)
class Segment:
    """One continuous piece of a factor or mean: ``expr`` on [lower, upper).

    The expression must evaluate without domain error on the closed interval;
    its value at ``upper`` is the left limit there.  ``upper`` may be +inf
    only for the final segment of the final block (or of the mean).
    """

    lower: float
    upper: float
    expr: Expr

    def __post_init__(self):
        if not (self.lower < self.upper):
            raise SpecError(f"segment needs lower < upper, got [{self.lower}, {self.upper})")
        if not math.isfinite(self.lower):
            raise SpecError("segment lower bound must be finite")

    def eval(self, x: float) -> float:
        return exprfn.evaluate(self.expr, x)


@dataclass(frozen=True)
class PiecewiseFn:
    """Ordered abutting segments covering [lower, upper)."""

    segments: tuple[Segment, ...]

    def __post_init__(self):
        if not self.segments:
            raise SpecError("piecewise function needs at least one segment")
        for a, b in itertools.pairwise(self.segments):
            if a.upper != b.lower:
                raise SpecError(
                    f"segments must abut: [{a.lower}, {a.upper}) then [{b.lower}, {b.upper})"
                )

    @property
    def lower(self) -> float:
        return self.segments[0].lower

    @property
    def upper(self) -> float:
        return self.segments[-1].upper

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Interior segment boundaries."""
        return tuple(s.lower for s in self.segments[1:])

    def segment_at(self, st: SidedTime) -> Segment:
        t, side = st.t, st.side
        if side is Side.VALUE:
            if not (self.lower <= t < self.upper):
                raise SpecError(f"time {t} outside [{self.lower}, {self.upper})")
            for seg in self.segments:
                if seg.lower <= t < seg.upper:
                    return seg
        else:
            if not (self.lower < t <= self.upper):
                raise SpecError(f"left limit at {t} outside ({self.lower}, {self.upper}]")
            for seg in self.segments:
                if seg.lower < t <= seg.upper:
                    return seg
        raise AssertionError("unreachable: segments cover the interval")

    def eval_sided(self, st: SidedTime) -> float:
        return self.segment_at(st).eval(st.t)

    def eval_right(self, t: float) -> float:
        return self.eval_sided(at(t))

    def eval_left(self, t: float) -> float:
        return self.eval_sided(left(t))

    def __call__(self, t: float) -> float:
        return self.eval_right(t)


@dataclass(frozen=True)
class Block:
    """One independence block [lower, upper) with factors f and g."""

    lower: float
    upper: float
    f: PiecewiseFn
    g: PiecewiseFn

    def __post_init__(self):
        for name, fn in (("f", self.f), ("g", self.g)):
            if fn.lower != self.lower or fn.upper != self.upper:
                raise SpecError(
                    f"factor {name} covers [{fn.lower}, {fn.upper}) but the block is "
                    f"[{self.lower}, {self.upper})"
                )

    @property
    def discontinuity_times(self) -> tuple[float, ...]:
        """Declared factor breakpoints strictly inside the block, sorted."""
        return tuple(sorted(set(self.f.breakpoints) | set(self.g.breakpoints)))


@dataclass(frozen=True)
class ProcessSpec:
    """Interval, independence blocks and (possibly jumping) mean function."""

    interval_lower: float
    interval_upper: float
    blocks: tuple[Block, ...]
    mean: PiecewiseFn

    def __post_init__(self):
        if not self.blocks:
            raise SpecError("spec needs at least one block")
        if not (self.interval_lower < self.interval_upper):
            raise SpecError("interval needs lower < upper")
        if self.blocks[0].lower != self.interval_lower:
            raise SpecError("first block must start at the interval lower bound")
        if self.blocks[-1].upper != self.interval_upper:
            raise SpecError("last block must end at the interval upper bound")
        for a, b in itertools.pairwise(self.blocks):
            if a.upper != b.lower:
                raise SpecError(f"blocks must abut: gap between {a.upper} and {b.lower}")
        for blk in self.blocks[:-1]:
            if not math.isfinite(blk.upper):
                raise SpecError("only the final block may extend to +inf")
        if self.mean.lower != self.interval_lower or self.mean.upper != self.interval_upper:
            raise SpecError(
                f"mean covers [{self.mean.lower}, {self.mean.upper}) but the interval is "
                f"[{self.interval_lower}, {self.interval_upper})"
            )

    @property
    def boundary_times(self) -> tuple[float, ...]:
        """Interior independence boundaries."""
        return tuple(b.lower for b in self.blocks[1:])

    @property
    def event_times_all(self) -> tuple[float, ...]:
        """Interior block boundaries plus declared factor discontinuities, sorted."""
        times = set(self.boundary_times)
        for b in self.blocks:
            times.update(b.discontinuity_times)
        return tuple(sorted(times))

    @property
    def mean_break_times(self) -> tuple[float, ...]:
        return self.mean.breakpoints

    def require_inside(self, t: float):
        if not (self.interval_lower <= t < self.interval_upper):
            raise SpecError(
                f"time {t} outside the interval [{self.interval_lower}, {self.interval_upper})"
            )

    def block_index(self, st: SidedTime) -> int:
        t, side = st.t, st.side
        if side is Side.VALUE:
            if not (self.interval_lower <= t < self.interval_upper):
                raise SpecError(
                    f"time {t} outside [{self.interval_lower}, {self.interval_upper})"
                )
            for i, b in enumerate(self.blocks):
                if b.lower <= t < b.upper:
                    return i
        else:
            if t <= self.interval_lower or t > self.interval_upper:
                raise SpecError(
                    f"left limit at {t} outside ({self.interval_lower}, {self.interval_upper}]"
                )
            for i, b in enumerate(self.blocks):
                if b.lower < t <= b.upper:
                    return i
        raise AssertionError("unreachable: blocks cover the interval")

    def block_at(self, st: SidedTime) -> Block:
        return self.blocks[self.block_index(st)]


def eval_kernel(spec: ProcessSpec, s, t) -> float:
    """Covariance between the sided times ``s`` and ``t``.

    Zero when the two resolve into different independence blocks, otherwise
    f(earlier) * g(later) with side-resolved segment values.
    """
    s, t = as_sided(s), as_sided(t)
    if t.sort_key < s.sort_key:
        s, t = t, s
    bi = spec.block_index(s)
    bj = spec.block_index(t)
    if bi != bj:
        return 0.0
    block = spec.blocks[bi]
    return block.f.eval_sided(s) * block.g.eval_sided(t)


def variance(spec: ProcessSpec, t) -> float:
    return eval_kernel(spec, t, t)


def check_markov_oracle(kernel, triples, tol: float = 1e-9) -> list[bool]:
    """Test K(r,s)K(s,t) == K(s,s)K(r,t) for each ordered triple r <= s <= t.

    ``kernel`` is any callable (s, t) -> covariance.  Returns one bool per
    triple; the comparison is relative: |lhs - rhs| <= tol * (1 + |rhs|).
    """
    results = []
    for r, s, t in triples:
        if not (r <= s <= t):
            raise ValueError(f"triple must be ordered, got ({r}, {s}, {t})")
        lhs = kernel(r, s) * kernel(s, t)
        rhs = kernel(s, s) * kernel(r, t)
        results.append(abs(lhs - rhs) <= tol * (1.0 + abs(rhs)))
    return results


def extract_factors(kernel, block_lower, block_upper, anchor, grid):
    """Tabulate factor values (f, g) on ``grid`` from a kernel oracle.

    Anchored construction: for x <= anchor, f(x) = K(x, anchor) and
    g(x) = K(x, x) / K(x, anchor); for x > anchor,
    f(x) = K(x, x) K(anchor, anchor) / K(anchor, x) and
    g(x) = K(anchor, x) / K(anchor, anchor).  Factors are unique only up to
    the gauge (f, g) -> (c f, g / c), so the result may differ from any
    reference pair by a positive constant.

    A zero where a division is required means the grid point sits across an
    independence boundary from the anchor, i.e. the declared block is wrong;
    this raises SpecError.
    """
    if not (block_lower < anchor < block_upper):
        raise SpecError(f"anchor {anchor} not inside ({block_lower}, {block_upper})")
    kaa = kernel(anchor, anchor)
    if kaa <= 0.0:
        raise SpecError(f"kernel variance at the anchor must be positive, got {kaa}")
    f_vals = np.empty(len(grid))
    g_vals = np.empty(len(grid))
    for i, x in enumerate(grid):
        if not (block_lower <= x < block_upper):
            raise SpecError(f"grid point {x} outside [{block_lower}, {block_upper})")
        if x <= anchor:
            kxa = kernel(x, anchor)
            if kxa == 0.0:
                raise SpecError(
                    f"kernel(x, anchor) = 0 at x={x}: the point lies across an "
                    "independence boundary from the anchor"
                )
            f_vals[i] = kxa
            g_vals[i] = kernel(x, x) / kxa
        else:
            kax = kernel(anchor, x)
            if kax == 0.0:
                raise SpecError(
                    f"kernel(anchor, x) = 0 at x={x}: the point lies across an "
                    "independence boundary from the anchor"
                )
            f_vals[i] = kernel(x, x) * kaa / kax
            g_vals[i] = kax / kaa
    return f_vals, g_vals


def psd_quadratic_form(f: PiecewiseFn, g: PiecewiseFn, points, weights):
    """Evaluate the factor kernel's quadratic form two ways.

    Returns (gram_value, telescoped_value): the direct double sum
    sum_{u,j} f(min(x_u, x_j)) g(max(x_u, x_j)) y_u y_j, and the telescoped
    rearrangement (f/g)(x_1) (sum_j g_j y_j)^2
    + sum_u [(f/g)(x_{u+1}) - (f/g)(x_u)] (sum_{j>u} g_j y_j)^2.
    The two agree up to roundoff, and the telescoped form is manifestly
    nonnegative when f/g is positive and nondecreasing.
    """
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if points.size != weights.size or points.size < 1:
        raise ValueError("need equally many points and weights, at least one")
    if np.any(np.diff(points) <= 0):
        raise ValueError("points must be strictly increasing")
    fs = np.array([f(x) for x in points])
    gs = np.array([g(x) for x in points])
    if np.any(gs == 0.0):
        raise SpecError("g vanishes at a supplied point")

    idx = np.arange(points.size)
    gram_matrix = fs[np.minimum.outer(idx, idx)] * gs[np.maximum.outer(idx, idx)]
    gram_value = float(weights @ gram_matrix @ weights)

    ratio = fs / gs
    # suffix[u] = sum_{j >= u} g_j y_j
    suffix = np.cumsum((gs * weights)[::-1])[::-1]
    telescoped = ratio[0] * suffix[0] ** 2
    telescoped += float(np.sum(np.diff(ratio) * suffix[1:] ** 2))
    return gram_value, float(telescoped)


@dataclass
class CheckResult:
    name: str
    passed: bool
    location: str
    detail: str = ""

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        tail = f": {self.detail}" if self.detail else ""
        return f"{status}  {self.name} ({self.location}){tail}"


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)
    discontinuity_times: tuple[float, ...] = ()

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        lines = [str(c) for c in self.checks]
        if self.discontinuity_times:
            times = ", ".join(f"{t:g}" for t in self.discontinuity_times)
            lines.append(f"factor-discontinuity times: {times}")
        lines.append("validation " + ("PASSED" if self.ok else "FAILED"))
        return "\n".join(lines)


# Sampled validation cannot prove positivity/monotonicity, only probe it; the
# defaults below (dense per-piece grids incl. both one-sided limits at every
# breakpoint) catch every discontinuity the factor segments can express.
DEFAULT_GRID_POINTS = 257
TRIPLE_POINTS_PER_BLOCK = 12
INFINITE_SAMPLING_SPAN = 10.0


def _block_pieces(block: Block):
    """Sub-intervals of the block on which both f and g are single segments."""
    cuts = [block.lower, *block.discontinuity_times, block.upper]
    for lo, hi in itertools.pairwise(cuts):
        mid = SidedTime(lo, Side.VALUE)
        yield lo, hi, block.f.segment_at(mid), block.g.segment_at(mid)


def _finite_span(lo, hi):
    return hi if math.isfinite(hi) else max(lo + INFINITE_SAMPLING_SPAN, 2 * abs(lo))


def validate(
    spec: ProcessSpec,
    grid_points_per_segment: int = DEFAULT_GRID_POINTS,
    *,
    oracle=None,
    kernel_tol: float = 1e-9,
    algebra_tol: float = 1e-10,
) -> ValidationReport:
    """Run the sampled structural checks and return a report.

    Per block: (a) g > 0 on the sampled grid (the left limit at the block's
    upper end may vanish), (b) the variance f*g is nonnegative everywhere and
    strictly positive at interior sample points (an interior zero would force
    an undeclared independence boundary), (c) f/g is nondecreasing along the
    sampled grid including both one-sided limits at breakpoints, (d) the
    within-block kernel triple identity holds on a coarse grid of ordered
    triples.  With an ``oracle`` kernel supplied, also check it agrees with
    the factor-built kernel inside blocks and vanishes across declared
    boundaries.  Failures are report entries, never exceptions.
    """
    if grid_points_per_segment < 2:
        raise ValueError("grid_points_per_segment must be at least 2")
    report = ValidationReport()
    disc = []
    for bi, block in enumerate(spec.blocks):
        disc.extend(block.discontinuity_times)
        loc = f"block {bi}"
        samples = []  # (x, f, g, is_lower_edge, is_upper_left_limit)
        eval_failure = None
        for lo, hi, f_seg, g_seg in _block_pieces(block):
            hi_eff = _finite_span(lo, hi)
            xs = np.linspace(lo, hi_eff, grid_points_per_segment)
            for x in xs:
                try:
                    fv, gv = f_seg.eval(x), g_seg.eval(x)
                except exprfn.DomainError as err:
                    eval_failure = str(err)
                    break
                samples.append(
                    (x, fv, gv, x == block.lower, math.isfinite(hi) and x == block.upper)
                )
            if eval_failure:
                break
        if eval_failure:
            report.checks.append(
                CheckResult("segment_evaluable", False, loc, eval_failure)
            )
            continue
        report.checks.append(CheckResult("segment_evaluable", True, loc))

        bad_g = [
            (x, gv)
            for x, _, gv, _, up in samples
            if (gv <= 0.0 and not up) or (gv < 0.0 and up)
        ]
        report.checks.append(
            CheckResult(
                "g_positive",
                not bad_g,
                loc,
                "" if not bad_g else f"g = {bad_g[0][1]:g} at x = {bad_g[0][0]:g}",
            )
        )

        bad_var = []
        for x, fv, gv, low, up in samples:
            v = fv * gv
            if v < 0.0 or (v == 0.0 and not (low or up)):
                bad_var.append((x, v))
        report.checks.append(
            CheckResult(
                "variance_nonnegative",
                not bad_var,
                loc,
                ""
                if not bad_var
                else f"variance = {bad_var[0][1]:g} at interior x = {bad_var[0][0]:g}",
            )
        )

        ratios = [(x, fv / gv) for x, fv, gv, _, _ in samples if gv != 0.0]
        bad_ratio = [
            (a, b)
            for a, b in itertools.pairwise(ratios)
            if b[1] < a[1] - algebra_tol * (1.0 + abs(a[1]))
        ]
        report.checks.append(
            CheckResult(
                "ratio_nondecreasing",
                not bad_ratio,
                loc,
                ""
                if not bad_ratio
                else "f/g decreases from {:g} at x = {:g} to {:g} at x = {:g}".format(
                    bad_ratio[0][0][1],
                    bad_ratio[0][0][0],
                    bad_ratio[0][1][1],
                    bad_ratio[0][1][0],
                ),
            )
        )

        tps = np.linspace(
            block.lower, _finite_span(block.lower, block.upper), TRIPLE_POINTS_PER_BLOCK
        )
        tps = tps[tps < block.upper]
        triples = list(itertools.combinations_with_replacement(tps, 3))
        verdicts = check_markov_oracle(
            lambda s, t: eval_kernel(spec, s, t), triples, kernel_tol
        )
        first_bad = next((tr for tr, okay in zip(triples, verdicts) if not okay), None)
        report.checks.append(
            CheckResult(
                "markov_triple",
                first_bad is None,
                loc,
                "" if first_bad is None else f"triple relation fails at {first_bad}",
            )
        )

        if oracle is not None:
            worst = (0.0, None)
            for s, t in itertools.combinations_with_replacement(tps, 2):
                expected = eval_kernel(spec, s, t)
                got = oracle(s, t)
                err = abs(got - expected) / (1.0 + abs(expected))
                if err > worst[0]:
                    worst = (err, (s, t))
            okay = worst[0] <= kernel_tol
            report.checks.append(
                CheckResult(
                    "oracle_agreement",
                    okay,
                    loc,
                    ""
                    if okay
                    else f"oracle differs from factor kernel by {worst[0]:.3g} at {worst[1]}",
                )
            )

    if oracle is not None:
        for boundary in spec.boundary_times:
            before = spec.block_at(SidedTime(boundary, Side.LEFT))
            after = spec.block_at(SidedTime(boundary, Side.VALUE))
            ss = np.linspace(before.lower, boundary, 5, endpoint=False)
            hi_eff = _finite_span(after.lower, after.upper)
            ts = np.linspace(boundary, hi_eff, 5)
            ts = ts[ts < after.upper]
            bad = None
            for s in ss:
                for t in ts:
                    scale = 1.0 + math.sqrt(abs(oracle(s, s) * oracle(t, t)))
                    if abs(oracle(s, t)) > kernel_tol * scale:
                        bad = (s, t, oracle(s, t))
                        break
                if bad:
                    break
            report.checks.append(
                CheckResult(
                    "oracle_boundary_zero",
                    bad is None,
                    f"boundary {boundary:g}",
                    "" if bad is None else f"oracle({bad[0]:g}, {bad[1]:g}) = {bad[2]:g}",
                )
            )

    report.discontinuity_times = tuple(sorted(disc))
    return report
