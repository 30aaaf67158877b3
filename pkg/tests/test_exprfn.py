import math
import random

import pytest

from gmqv.exprfn import (
    BinOp,
    Call,
    DomainError,
    Neg,
    Num,
    ParseError,
    Var,
    evaluate,
    parse,
    to_source,
)


def test_parse_variable():
    assert parse("x") == Var()


def test_parse_scaled_exponential():
    tree = parse("2*exp(-0.5*x)")
    assert tree == BinOp("*", Num(2.0), Call("exp", BinOp("*", Neg(Num(0.5)), Var())))


def test_bridge_variance_on_diagonal():
    # x*(1-x) at 0.3 is the bridge variance min*(1-max) on the diagonal
    assert evaluate(parse("x*(1-x)"), 0.3) == pytest.approx(0.21, abs=1e-15)


@pytest.mark.parametrize(
    "src,x,expected",
    [
        ("1", 17.3, 1.0),
        ("exp(-x)", 0.0, 1.0),
        ("x/(1-x)", 0.5, 1.0),
        ("2+3*4", 0.0, 14.0),
        ("2^3^2", 0.0, 512.0),
        ("-2^2", 0.0, -4.0),
        ("2^-1", 0.0, 0.5),
        ("ln(exp(3))", 0.0, 3.0),
        ("(-2)^3", 0.0, -8.0),
        ("1-2-3", 0.0, -4.0),
        ("8/4/2", 0.0, 1.0),
    ],
)
def test_eval_values(src, x, expected):
    assert evaluate(parse(src), x) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize(
    "src,offset_check",
    [
        ("", None),
        ("   ", None),
        ("(1+2", 4),
        ("1+", 2),
        ("y+1", 0),
        ("sin(x)", 0),
        ("1 2", 2),
        ("exp 2", 4),
        ("2 $ 2", 2),
    ],
)
def test_parse_errors(src, offset_check):
    with pytest.raises(ParseError) as exc:
        parse(src)
    if offset_check is not None:
        assert exc.value.offset == offset_check


@pytest.mark.parametrize(
    "src,x",
    [
        ("1/x", 0.0),
        ("ln(x)", 0.0),
        ("ln(x)", -1.0),
        ("x^0.5", -4.0),
        ("exp(x)", 1000.0),
        ("x^x", 1e200),  # overflow via pow
    ],
)
def test_domain_errors(src, x):
    with pytest.raises(DomainError):
        evaluate(parse(src), x)


def test_domain_error_carries_context():
    with pytest.raises(DomainError) as exc:
        evaluate(parse("1+1/x"), 0.0)
    assert exc.value.x == 0.0
    assert to_source(exc.value.expr) == "1.0/x"


def _random_tree(rng, depth):
    if depth == 0:
        return rng.choice([Var(), Num(round(rng.uniform(0, 3), 3))])
    kind = rng.randrange(6)
    if kind == 0:
        return Neg(_random_tree(rng, depth - 1))
    if kind == 1:
        return Call(rng.choice(["exp", "ln"]), _random_tree(rng, depth - 1))
    if kind == 2:
        # keep exponents small so evaluation stays finite often enough
        return BinOp("^", _random_tree(rng, depth - 1), Num(float(rng.randrange(0, 3))))
    op = rng.choice(["+", "-", "*", "/"])
    return BinOp(op, _random_tree(rng, depth - 1), _random_tree(rng, depth - 1))


def test_print_parse_round_trip_is_structural():
    rng = random.Random(20240917)
    for _ in range(300):
        tree = _random_tree(rng, rng.randrange(1, 5))
        printed = to_source(tree)
        assert parse(printed) == tree
        # and eval agrees wherever the tree is defined
        for x in (0.3, 1.7):
            try:
                expected = evaluate(tree, x)
            except DomainError:
                continue
            assert evaluate(parse(printed), x) == expected


def test_round_trip_examples():
    for src in ["x*(1-x)", "2*exp(-0.5*x)", "x/(1-x)", "2^3^2", "-(1+x)^2"]:
        tree = parse(src)
        assert parse(to_source(tree)) == tree


def test_eval_never_returns_nonfinite():
    cases = [("exp(x)*exp(x)", 700.0), ("1/(x*1e-300)", 1e-300)]
    for src, x in cases:
        tree = parse(src)
        try:
            value = evaluate(tree, x)
        except DomainError:
            continue
        assert math.isfinite(value)
