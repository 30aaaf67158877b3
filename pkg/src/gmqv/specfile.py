"""Plain-text process-spec files.

Line-oriented format; ``#`` starts a comment and blank lines are ignored:

    interval <lo> <hi|inf>
    block <lo> <hi|inf>
        f [<lo>,<hi>) "<expr>"
        g [<lo>,<hi>) "<expr>"
    mean [<lo>,<hi>) "<expr>"

``interval`` must come first.  Each ``block`` section collects the ``f`` and
``g`` segment lines that follow it; segments must cover the block exactly.
``mean`` lines may appear anywhere after ``interval`` and must cover the
whole interval; with no mean lines the mean defaults to 0.  ``inf`` is only
legal as an upper endpoint.  Expressions use the gmqv.exprfn grammar.
"""

import importlib.resources
import math
import re
import shlex
from pathlib import Path

from . import exprfn
from .process_model import Block, PiecewiseFn, ProcessSpec, Segment, SpecError, validate

_RANGE_RE = re.compile(r"^\[([^,\s]+)\s*,\s*([^)\s]+)\)$")


class SpecFileError(ValueError):
    """Syntax problem in a spec file (bad token, malformed line)."""

    def __init__(self, message, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line


class SpecValidationError(SpecFileError):
    """The file parses but the described process is invalid (coverage gaps,
    ordering problems, failed sampled checks)."""


def _number(token, line, allow_inf=False):
    if token == "inf":
        if not allow_inf:
            raise SpecFileError("'inf' is only allowed as an upper endpoint", line)
        return math.inf
    try:
        value = float(token)
    except ValueError:
        raise SpecFileError(f"expected a number, got {token!r}", line) from None
    if not math.isfinite(value):
        raise SpecFileError(f"expected a finite number, got {token!r}", line)
    return value


def _parse_range(tokens, line):
    """Consume tokens forming '[lo,hi)' (possibly split on spaces); return
    (lo, hi, remaining tokens)."""
    joined = ""
    for i, tok in enumerate(tokens):
        joined += tok
        if joined.endswith(")"):
            m = _RANGE_RE.match(joined)
            if m is None:
                raise SpecFileError(f"malformed range {joined!r}", line)
            lo = _number(m.group(1), line)
            hi = _number(m.group(2), line, allow_inf=True)
            return lo, hi, tokens[i + 1 :]
    raise SpecFileError("expected a range like [0,1)", line)


def _parse_segment(tokens, line):
    lo, hi, rest = _parse_range(tokens, line)
    if len(rest) != 1:
        raise SpecFileError("expected exactly one quoted expression after the range", line)
    try:
        expr = exprfn.parse(rest[0])
    except exprfn.ParseError as err:
        raise SpecFileError(f"bad expression {rest[0]!r}: {err}", line) from None
    try:
        return Segment(lo, hi, expr)
    except SpecError as err:
        raise SpecValidationError(str(err), line) from None


def _piecewise(segments, what, cover_lo, cover_hi, line):
    if not segments:
        raise SpecValidationError(f"no {what} segments given", line)
    segments = sorted(segments, key=lambda s: s.lower)
    try:
        fn = PiecewiseFn(tuple(segments))
    except SpecError as err:
        raise SpecValidationError(f"{what} segments: {err}", line) from None
    if fn.lower != cover_lo or fn.upper != cover_hi:
        raise SpecValidationError(
            f"{what} segments cover [{fn.lower:g}, {fn.upper:g}) but must cover "
            f"[{cover_lo:g}, {cover_hi:g})",
            line,
        )
    return fn


def parse_spec_text(text: str) -> ProcessSpec:
    """Parse (structure only; run validate() for the sampled checks)."""
    interval = None
    interval_line = None
    blocks_raw = []  # (lo, hi, f_segments, g_segments, line)
    mean_segments = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        try:
            tokens = shlex.split(raw, comments=True)
        except ValueError as err:
            raise SpecFileError(f"unbalanced quote: {err}", lineno) from None
        if not tokens:
            continue
        keyword, rest = tokens[0], tokens[1:]
        if keyword == "interval":
            if interval is not None:
                raise SpecFileError("duplicate interval line", lineno)
            if len(rest) != 2:
                raise SpecFileError("interval needs a lower and an upper bound", lineno)
            interval = (_number(rest[0], lineno), _number(rest[1], lineno, allow_inf=True))
            interval_line = lineno
            continue
        if interval is None:
            raise SpecFileError("the interval line must come first", lineno)
        if keyword == "block":
            if len(rest) != 2:
                raise SpecFileError("block needs a lower and an upper bound", lineno)
            lo = _number(rest[0], lineno)
            hi = _number(rest[1], lineno, allow_inf=True)
            blocks_raw.append((lo, hi, [], [], lineno))
        elif keyword in ("f", "g"):
            if not blocks_raw:
                raise SpecFileError(f"'{keyword}' line outside any block", lineno)
            seg = _parse_segment(rest, lineno)
            blocks_raw[-1][2 if keyword == "f" else 3].append(seg)
        elif keyword == "mean":
            mean_segments.append(_parse_segment(rest, lineno))
        else:
            raise SpecFileError(
                f"unknown keyword {keyword!r} (expected interval, block, f, g or mean)",
                lineno,
            )

    if interval is None:
        raise SpecFileError("missing interval line")
    if not blocks_raw:
        raise SpecFileError("spec declares no blocks", interval_line)

    blocks = []
    for lo, hi, f_segs, g_segs, lineno in blocks_raw:
        f_fn = _piecewise(f_segs, "f", lo, hi, lineno)
        g_fn = _piecewise(g_segs, "g", lo, hi, lineno)
        try:
            blocks.append(Block(lo, hi, f_fn, g_fn))
        except SpecError as err:
            raise SpecValidationError(str(err), lineno) from None

    if mean_segments:
        mean = _piecewise(mean_segments, "mean", interval[0], interval[1], interval_line)
    else:
        mean = PiecewiseFn((Segment(interval[0], interval[1], exprfn.parse("0")),))

    try:
        return ProcessSpec(interval[0], interval[1], tuple(blocks), mean)
    except SpecError as err:
        raise SpecValidationError(str(err), interval_line) from None


def parse_spec_file(path) -> ProcessSpec:
    return parse_spec_text(Path(path).read_text())


def load_spec(path) -> ProcessSpec:
    """Parse and validate; raises SpecValidationError naming the failing check."""
    spec = parse_spec_file(path)
    report = validate(spec)
    if not report.ok:
        failures = "; ".join(str(c) for c in report.failures())
        raise SpecValidationError(f"spec fails validation: {failures}")
    return spec


def bundled_path(name: str) -> Path:
    """Path of a bundled spec (brownian, ou, stitched, meanjump)."""
    if not name.endswith(".gmspec"):
        name = f"{name}.gmspec"
    resource = importlib.resources.files("gmqv") / "specs" / name
    with importlib.resources.as_file(resource) as p:
        if not p.exists():
            raise FileNotFoundError(f"no bundled spec named {name!r}")
        return Path(p)


def resolve_spec_path(arg: str) -> Path:
    """A CLI convenience: an existing path wins, otherwise try bundled names."""
    p = Path(arg)
    if p.exists():
        return p
    try:
        return bundled_path(arg)
    except FileNotFoundError:
        raise SpecFileError(f"spec file not found: {arg}") from None
