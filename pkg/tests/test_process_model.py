import itertools
import math

import numpy as np
import pytest

from conftest import make_spec, seg
from gmqv import process_model as pm
from gmqv.process_model import (
    Block,
    PiecewiseFn,
    SpecError,
    at,
    check_markov_oracle,
    eval_kernel,
    extract_factors,
    left,
    psd_quadratic_form,
    validate,
    variance,
)


class TestKernel:
    @pytest.mark.parametrize(
        "s,t,expected",
        [(0.3, 0.6, 0.12), (1.5, 2.5, 0.0), (2.5, 3.0, 1.5), (0.6, 0.3, 0.12)],
    )
    def test_stitched_values(self, stitched_spec, s, t, expected):
        assert eval_kernel(stitched_spec, s, t) == pytest.approx(expected, abs=1e-15)

    def test_stitched_variances(self, stitched_spec):
        assert variance(stitched_spec, 1.5) == pytest.approx(0.5)
        assert variance(stitched_spec, left(1.0)) == 0.0
        assert variance(stitched_spec, at(1.0)) == 0.0

    def test_brownian_at_origin(self, brownian_spec):
        assert variance(brownian_spec, 0.0) == 0.0

    def test_left_limit_at_factor_jump(self, meanjump_spec):
        assert variance(meanjump_spec, left(0.5)) == pytest.approx(0.5)
        assert variance(meanjump_spec, at(0.5)) == pytest.approx(1.5)
        # kernel across the jump uses f from the left, g from the right
        assert eval_kernel(meanjump_spec, left(0.5), at(0.5)) == pytest.approx(0.5)

    def test_out_of_interval(self, meanjump_spec):
        with pytest.raises(SpecError):
            eval_kernel(meanjump_spec, 0.3, 1.0)  # 1.0 == interval upper
        with pytest.raises(SpecError):
            variance(meanjump_spec, left(0.0))  # no left limit at the start

    def test_triple_relation_exact_within_blocks(self, all_specs):
        for spec in all_specs.values():
            for block in spec.blocks:
                hi = block.upper if math.isfinite(block.upper) else block.lower + 5.0
                pts = np.linspace(block.lower, hi, 7)
                pts = pts[pts < block.upper]
                for r, s, t in itertools.combinations(pts, 3):
                    lhs = eval_kernel(spec, r, s) * eval_kernel(spec, s, t)
                    rhs = eval_kernel(spec, s, s) * eval_kernel(spec, r, t)
                    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_cauchy_schwarz_sampled(self, all_specs):
        for spec in all_specs.values():
            hi = min(spec.interval_upper, spec.interval_lower + 4.0)
            pts = np.linspace(spec.interval_lower, hi, 25, endpoint=False)
            for s, t in itertools.combinations(pts, 2):
                k2 = eval_kernel(spec, s, t) ** 2
                bound = variance(spec, s) * variance(spec, t)
                assert k2 <= bound + 1e-12

    def test_factor_gauge_invariance(self, stitched_spec):
        # scaling (f, g) -> (c f, g / c) leaves the kernel unchanged
        rng = np.random.default_rng(5)
        for c in (0.25, 3.0, 17.5):
            scaled = _scale_factors(stitched_spec, c, divide_g=True)
            for _ in range(30):
                s, t = np.sort(rng.uniform(0.0, 3.0, size=2))
                assert eval_kernel(scaled, s, t) == pytest.approx(
                    eval_kernel(stitched_spec, s, t), rel=1e-12, abs=1e-15
                )


def _scale_factors(spec, c, divide_g=False):
    from gmqv.exprfn import BinOp, Num

    def scale_fn(fn, factor, invert):
        segs = tuple(
            pm.Segment(
                s.lower,
                s.upper,
                BinOp("/" if invert else "*", s.expr, Num(factor))
                if invert
                else BinOp("*", Num(factor), s.expr),
            )
            for s in fn.segments
        )
        return PiecewiseFn(segs)

    blocks = tuple(
        Block(
            b.lower,
            b.upper,
            scale_fn(b.f, c, invert=False),
            scale_fn(b.g, c, invert=True) if divide_g else b.g,
        )
        for b in spec.blocks
    )
    return pm.ProcessSpec(spec.interval_lower, spec.interval_upper, blocks, spec.mean)


class TestValidate:
    def test_bundled_specs_pass(self, all_specs):
        for name, spec in all_specs.items():
            report = validate(spec)
            assert report.ok, f"{name}: {report}"

    def test_meanjump_reports_discontinuity(self, meanjump_spec):
        report = validate(meanjump_spec)
        assert report.ok
        assert report.discontinuity_times == (0.5,)

    def test_corrupted_bridge_fails_against_oracle(self):
        # self-consistent factors (ratio x/(1+x) is nondecreasing) that do not
        # match the intended bridge kernel
        spec = make_spec(
            [Block(0.0, 1.0, PiecewiseFn((seg(0, 1, "x"),)), PiecewiseFn((seg(0, 1, "1+x"),)))],
            (0.0, 1.0),
        )
        bridge = lambda s, t: min(s, t) * (1.0 - max(s, t))
        report = validate(spec, oracle=bridge)
        by_name = {c.name: c for c in report.checks}
        assert by_name["g_positive"].passed
        assert by_name["variance_nonnegative"].passed
        assert by_name["ratio_nondecreasing"].passed
        assert by_name["markov_triple"].passed
        assert not by_name["oracle_agreement"].passed
        # the two kernels visibly differ, e.g. at (0.2, 0.8)
        assert eval_kernel(spec, 0.2, 0.8) != pytest.approx(bridge(0.2, 0.8))

    def test_matching_oracle_passes(self, stitched_spec):
        def stitched_kernel(s, t):
            lo, hi = min(s, t), max(s, t)
            if lo < 1.0 <= hi or lo < 2.0 <= hi:
                return 0.0
            if hi < 1.0:
                return lo * (1.0 - hi)
            return lo - 1.0

        report = validate(stitched_spec, oracle=stitched_kernel)
        assert report.ok, str(report)

    def test_interior_variance_zero_rejected(self):
        spec = make_spec(
            [
                Block(
                    0.0,
                    2.0,
                    PiecewiseFn((seg(0, 2, "(x-1)^2"),)),
                    PiecewiseFn((seg(0, 2, "1"),)),
                )
            ],
            (0.0, 2.0),
        )
        report = validate(spec)
        assert not report.ok
        assert any(
            c.name == "variance_nonnegative" and not c.passed for c in report.checks
        )

    def test_decreasing_ratio_rejected(self):
        spec = make_spec(
            [
                Block(
                    0.0,
                    1.0,
                    PiecewiseFn((seg(0, 1, "2-x"),)),
                    PiecewiseFn((seg(0, 1, "1"),)),
                )
            ],
            (0.0, 1.0),
        )
        report = validate(spec)
        assert any(c.name == "ratio_nondecreasing" and not c.passed for c in report.checks)

    def test_negative_g_rejected(self):
        spec = make_spec(
            [
                Block(
                    0.0,
                    1.0,
                    PiecewiseFn((seg(0, 1, "-x"),)),
                    PiecewiseFn((seg(0, 1, "-1"),)),
                )
            ],
            (0.0, 1.0),
        )
        report = validate(spec)
        assert any(c.name == "g_positive" and not c.passed for c in report.checks)


class TestMarkovOracle:
    def test_brownian_kernel_passes(self):
        assert check_markov_oracle(lambda s, t: min(s, t), [(1.0, 2.0, 3.0)]) == [True]

    def test_stationary_exponential_passes(self):
        k = lambda s, t: math.exp(-abs(s - t))
        assert check_markov_oracle(k, [(0.5, 1.0, 2.0)]) == [True]

    def test_non_markov_kernel_fails(self):
        k = lambda s, t: (1.0 + abs(s - t)) * math.exp(-abs(s - t))
        assert check_markov_oracle(k, [(0.0, 1.0, 2.0)]) == [False]

    def test_unordered_triple_rejected(self):
        with pytest.raises(ValueError):
            check_markov_oracle(lambda s, t: 1.0, [(2.0, 1.0, 3.0)])


class TestExtractFactors:
    def test_brownian_reproduces_linear_factor(self):
        f, g = extract_factors(lambda s, t: min(s, t), 0.0, 5.0, 1.0, [0.5, 1.0, 2.0])
        assert f == pytest.approx([0.5, 1.0, 2.0])
        assert g == pytest.approx([1.0, 1.0, 1.0])

    def test_bridge_tabulation(self):
        bridge = lambda s, t: min(s, t) * (1.0 - max(s, t))
        f, g = extract_factors(bridge, 0.0, 1.0, 0.5, [0.25, 0.75])
        assert f == pytest.approx([0.125, 0.375])
        assert g == pytest.approx([1.5, 0.5])

    def test_round_trip_reproduces_kernel(self):
        bridge = lambda s, t: min(s, t) * (1.0 - max(s, t))
        grid = np.linspace(0.1, 0.9, 17)
        f, g = extract_factors(bridge, 0.0, 1.0, 0.5, grid)
        for i, j in itertools.combinations_with_replacement(range(len(grid)), 2):
            rebuilt = f[i] * g[j]
            assert rebuilt == pytest.approx(bridge(grid[i], grid[j]), rel=1e-10)

    def test_degenerate_anchor_rejected(self):
        # variance vanishes at the anchor
        with pytest.raises(SpecError):
            extract_factors(lambda s, t: 0.0, 0.0, 1.0, 0.5, [0.25])

    def test_zero_across_boundary_detected(self):
        def split_kernel(s, t):
            if min(s, t) < 1.0 <= max(s, t):
                return 0.0
            return min(s, t) % 1.0 + 0.5

        with pytest.raises(SpecError):
            extract_factors(split_kernel, 0.0, 2.0, 0.5, [0.25, 1.5])


class TestPsdQuadraticForm:
    def test_two_point_brownian(self, brownian_spec):
        block = brownian_spec.blocks[0]
        gram, tele = psd_quadratic_form(block.f, block.g, [1.0, 2.0], [1.0, -1.0])
        assert gram == pytest.approx(1.0)
        assert tele == pytest.approx(1.0)

    def test_single_point_collapses(self, stitched_spec):
        block = stitched_spec.blocks[0]
        gram, tele = psd_quadratic_form(block.f, block.g, [0.3], [2.0])
        expected = 0.3 * 0.7 * 4.0  # f g y^2
        assert gram == pytest.approx(expected)
        assert tele == pytest.approx(expected)

    def test_bridge_three_points(self, stitched_spec):
        block = stitched_spec.blocks[0]
        points, weights = [0.25, 0.5, 0.75], [1.0, 1.0, 1.0]
        gram, tele = psd_quadratic_form(block.f, block.g, points, weights)
        # brute-force Gram oracle over the 3x3 kernel matrix
        oracle = sum(
            min(a, b) * (1 - max(a, b)) * wa * wb
            for a, wa in zip(points, weights)
            for b, wb in zip(points, weights)
        )
        assert gram == pytest.approx(oracle, rel=1e-12)
        assert tele == pytest.approx(gram, rel=1e-10)

    def test_rejects_vanishing_g(self):
        f = PiecewiseFn((seg(0, 2, "x"),))
        g = PiecewiseFn((seg(0, 2, "1-x"),))
        with pytest.raises(SpecError):
            psd_quadratic_form(f, g, [0.5, 1.0], [1.0, 1.0])

    def test_rejects_unsorted_points(self, brownian_spec):
        block = brownian_spec.blocks[0]
        with pytest.raises(ValueError):
            psd_quadratic_form(block.f, block.g, [2.0, 1.0], [1.0, 1.0])


class TestStructure:
    def test_blocks_must_abut(self):
        b1 = Block(0.0, 1.0, PiecewiseFn((seg(0, 1, "x"),)), PiecewiseFn((seg(0, 1, "1"),)))
        b2 = Block(1.5, 2.0, PiecewiseFn((seg(1.5, 2, "x"),)), PiecewiseFn((seg(1.5, 2, "1"),)))
        with pytest.raises(SpecError):
            make_spec([b1, b2], (0.0, 2.0))

    def test_factor_coverage_must_match_block(self):
        with pytest.raises(SpecError):
            Block(0.0, 2.0, PiecewiseFn((seg(0, 1, "x"),)), PiecewiseFn((seg(0, 2, "1"),)))

    def test_segments_must_abut(self):
        with pytest.raises(SpecError):
            PiecewiseFn((seg(0, 1, "x"), seg(1.5, 2, "x")))

    def test_infinite_upper_only_last_block(self):
        b1 = Block(
            0.0, math.inf, PiecewiseFn((seg(0, math.inf, "x"),)), PiecewiseFn((seg(0, math.inf, "1"),))
        )
        b2 = Block(1.0, 2.0, PiecewiseFn((seg(1, 2, "x"),)), PiecewiseFn((seg(1, 2, "1"),)))
        with pytest.raises(SpecError):
            make_spec([b1, b2], (0.0, 2.0))

    def test_sided_eval_at_breakpoints(self, meanjump_spec):
        f = meanjump_spec.blocks[0].f
        assert f.eval_left(0.5) == pytest.approx(0.5)
        assert f.eval_right(0.5) == pytest.approx(1.5)
