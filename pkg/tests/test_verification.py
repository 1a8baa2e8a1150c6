import random
from dataclasses import replace

import pytest

from rsrforge.discovery import property_from_identity
from rsrforge.errors import DomainError
from rsrforge.parser import parse
from rsrforge.rational import Rational
from rsrforge.sampling import oracle_from_expr, taylor_program
from rsrforge.verification import (
    CHANNEL_PROPERTY_TEST,
    CHANNEL_SYMBOLIC_EXACT,
    CHANNEL_SYMBOLIC_NUMERIC,
    VerifyConfig,
    VerifyOutcome,
    classify,
    property_test,
    symbolic_verify,
)

CFG = VerifyConfig()


def test_property_test_true_identity():
    p = property_from_identity(parse("f(x+r) - f(x)*f(r)"))
    oracle = oracle_from_expr("exp", parse("exp(x)"), 1, box=(-3, 3))
    out = property_test(p, oracle, CFG, seed=1)
    assert out.passed and out.channel == CHANNEL_PROPERTY_TEST
    assert out.mean_abs_residual < 1e-12


def test_property_test_wrong_oracle():
    p = property_from_identity(parse("f(x+r) - f(x)*f(r)"))
    oracle = oracle_from_expr("sin", parse("sin(x)"), 1)
    out = property_test(p, oracle, CFG, seed=1)
    assert not out.passed
    assert out.reason  # nonempty on fail


def test_property_test_sigmoid_mutant():
    ident = parse(
        "2*f(x)*f(x+r)*f(r) - f(x)*f(x+r) - f(x)*f(r) - f(x+r)*f(r) + f(x+r)"
    )
    p = property_from_identity(ident)
    oracle = oracle_from_expr("sigmoid", parse("1/(1+exp(-x))"), 1)
    assert property_test(p, oracle, CFG, seed=2).passed
    # perturb the leading 2 to 201/100
    mono, coef = p.pairs[0]
    assert coef == Rational(2)
    mutant = replace(p, pairs=((mono, Rational(201, 100)),) + p.pairs[1:])
    out = property_test(mutant, oracle, CFG, seed=2)
    assert not out.passed


def test_property_test_epsilon_monotone():
    ident = parse("f(x+r) - f(x) - f(r)")
    p = property_from_identity(ident)
    oracle = oracle_from_expr("linear", parse("3*x"), 1)
    for eps in (1e-6, 1e-3, 1e-1):
        out = property_test(p, oracle, VerifyConfig(epsilon=eps), seed=3)
        assert out.passed  # pass at eps implies pass at larger eps, same seed


def test_symbolic_exact_linearity_example():
    out = symbolic_verify("Eq(f(x) + f(y) - f(x+y), 0)", parse("c*x"), CFG)
    assert out.passed and out.channel == CHANNEL_SYMBOLIC_EXACT
    assert out.reason == ""
    out2 = symbolic_verify("f(x) + f(y) - f(x+y)", parse("c*x"), CFG)
    assert out2.passed and out2.channel == CHANNEL_SYMBOLIC_EXACT


def test_symbolic_fail_carries_witness():
    out = symbolic_verify("f(x+y) - f(x) - f(y)", parse("sin(x)"), CFG, seed=4)
    assert not out.passed
    assert "witness" in out.reason


def test_symbolic_numeric_log():
    out = symbolic_verify(
        "f(x*r) - f(x) - f(r)", parse("log(x)"), CFG, box=(0.001, 10), seed=5
    )
    assert out.passed and out.channel == CHANNEL_SYMBOLIC_NUMERIC
    assert out.max_abs_residual < 2**-100


def test_verify_outcome_requires_reason_on_fail():
    with pytest.raises(ValueError):
        VerifyOutcome("fail", CHANNEL_PROPERTY_TEST, 1.0, 1.0, reason="")


def test_classify_paths():
    blr = property_from_identity(parse("f(x+r) - f(x) - f(r)"))
    linear = oracle_from_expr("linear", parse("3*x"), 1)
    out = classify(blr, linear, closed_form=parse("3*x"), cfg=CFG, seed=6)
    assert out.status == "verified_symbolic"
    assert out.channel == CHANNEL_SYMBOLIC_EXACT

    # no closed form registered: numeric at best
    taylor = taylor_program("sigmoid", 30, box=(-4, 4))
    ident = parse(
        "2*f(x)*f(x+r)*f(r) - f(x)*f(x+r) - f(x)*f(r) - f(x+r)*f(r) + f(x+r)"
    )
    p = property_from_identity(ident)
    out = classify(p, taylor, closed_form=None, cfg=CFG, seed=6)
    assert out.status == "verified_numeric"

    # a wrong identity ends up unverified with a reason
    bad = property_from_identity(parse("f(x+r) - f(x) - 2*f(r)"))
    out = classify(bad, linear, closed_form=parse("3*x"), cfg=CFG, seed=6)
    assert out.status == "unverified"
    assert out.reason


def _random_false_identity(rng):
    """A rational expression that is not identically zero."""
    atoms = ["f(x)", "f(r)", "f(x+r)", "x", "r"]
    terms = []
    for _ in range(rng.randint(1, 3)):
        c = rng.randint(1, 5) * rng.choice((1, -1))
        a = rng.choice(atoms)
        b = rng.choice(atoms)
        terms.append(f"{c}*{a}*{b}")
    offset = rng.randint(1, 9)
    return " + ".join(terms) + f" + {offset}/7"


def test_fuzzed_false_identities_never_pass():
    """Neither channel may pass a false rational identity (smoke-scale;
    the acceptance suite runs the full 10^3)."""
    rng = random.Random(77)
    closed = parse("c*x + 1/3")
    for _ in range(100):
        text = _random_false_identity(rng)
        out = symbolic_verify(text, closed, CFG, box=(0.5, 3.0), seed=8)
        assert not out.passed, text


def test_symbolic_verify_domain_retries_exhausted():
    cfg = VerifyConfig(max_point_retries=5)
    with pytest.raises(DomainError):
        # log of a negative box never yields a valid point
        symbolic_verify("f(x) - w", parse("log(x)"), cfg, box=(-5.0, -1.0), seed=9)
