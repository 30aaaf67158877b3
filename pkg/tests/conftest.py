import pytest

from gmqv import exprfn
from gmqv.process_model import Block, PiecewiseFn, ProcessSpec, Segment
from gmqv.specfile import bundled_path, load_spec


def seg(lo, hi, src):
    return Segment(lo, hi, exprfn.parse(src))


def make_spec(blocks, interval, mean_segments=None):
    mean = PiecewiseFn(
        tuple(mean_segments) if mean_segments else (seg(interval[0], interval[1], "0"),)
    )
    return ProcessSpec(interval[0], interval[1], tuple(blocks), mean)


@pytest.fixture(scope="session")
def brownian_spec():
    return load_spec(bundled_path("brownian"))


@pytest.fixture(scope="session")
def ou_spec():
    return load_spec(bundled_path("ou"))


@pytest.fixture(scope="session")
def stitched_spec():
    return load_spec(bundled_path("stitched"))


@pytest.fixture(scope="session")
def meanjump_spec():
    return load_spec(bundled_path("meanjump"))


@pytest.fixture(scope="session")
def all_specs(brownian_spec, ou_spec, stitched_spec, meanjump_spec):
    return {
        "brownian": brownian_spec,
        "ou": ou_spec,
        "stitched": stitched_spec,
        "meanjump": meanjump_spec,
    }


@pytest.fixture
def two_jump_spec():
    """One block on [0,10): f jumps +0.5 at 2, g jumps -0.25 at 4."""
    f = PiecewiseFn((seg(0, 2, "x+1"), seg(2, 4, "x+1.5"), seg(4, 10, "x+1.5")))
    g = PiecewiseFn((seg(0, 4, "4"), seg(4, 10, "3.75")))
    return make_spec([Block(0.0, 10.0, f, g)], (0.0, 10.0))
