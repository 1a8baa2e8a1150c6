"""Validation of candidate identities.

Two independent channels:

  * property_test draws fresh correlated samples from the black-box
    oracle and checks the identity's scale-normalized residuals against
    the statistical error bound;
  * symbolic_verify substitutes a closed form for the function symbol
    and first attempts exact rational simplification (sound), falling
    back to randomized identity testing at high precision
    (probabilistically sound; a false polynomial identity of modest
    degree passing 64 random points below 2^-100 has negligible
    probability).

classify() stamps the property status: verified_symbolic when the
symbolic channel passes, else verified_numeric when property testing
passes, else unverified.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .discovery import (
    Property,
    STATUS_UNVERIFIED,
    STATUS_VERIFIED_NUMERIC,
    STATUS_VERIFIED_SYMBOLIC,
)
from .errors import DomainError, SamplingExhausted, UnboundSymbol
from .expr import (
    Builtin,
    Env,
    Expr,
    FuncApp,
    children,
    evaluate_hp,
    free_vars,
    subst_func,
)
from .parser import parse
from .polyratio import rational_residual_zero
from .queries import input_vars
from .sampling import Oracle, SamplingConfig, draw_samples

CHANNEL_PROPERTY_TEST = "property_test"
CHANNEL_SYMBOLIC_EXACT = "symbolic_exact"
CHANNEL_SYMBOLIC_NUMERIC = "symbolic_numeric"


@dataclass
class VerifyConfig:
    n_test: int = 1000
    epsilon: float = 1e-3
    hp_points: int = 64
    hp_precision_bits: int = 256
    hp_tolerance_exponent: int = 100
    max_point_retries: int = 500
    guard_magnitude: float = 1e6

    def __post_init__(self):
        for name in (
            "n_test",
            "epsilon",
            "hp_points",
            "hp_precision_bits",
            "hp_tolerance_exponent",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class VerifyOutcome:
    status: str  # "pass" | "fail"
    channel: str
    mean_abs_residual: float
    max_abs_residual: float
    reason: str = ""

    def __post_init__(self):
        if self.status == "fail" and not self.reason:
            raise ValueError("failing outcomes must carry a reason")

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json_dict(self) -> dict:
        return {
            "status": self.status,
            "channel": self.channel,
            "mean_abs_residual": self.mean_abs_residual,
            "max_abs_residual": self.max_abs_residual,
            "reason": self.reason,
        }


def property_test(
    p: Property, oracle: Oracle, cfg: VerifyConfig, seed: int = 0
) -> VerifyOutcome:
    """Statistical test on fresh draws.

    Residuals are normalized per row by max(1, largest |monomial value|)
    so the bound is meaningful across functions of any scale.  Passes
    when the mean normalized residual is at most epsilon and the maximum
    at most 10 * epsilon.
    """
    monomials = [mono for mono, _coef in p.pairs]
    coeffs = np.array([float(coef) for _mono, coef in p.pairs])
    scfg = SamplingConfig(m=cfg.n_test, box=oracle.box, seed=seed)
    table = draw_samples(oracle, p.basis, monomials, scfg)
    values = table.monomial_values
    residual = np.abs(values @ coeffs)
    norms = np.maximum(1.0, np.max(np.abs(values), axis=1))
    scaled = residual / norms
    mean_res = float(np.mean(scaled))
    max_res = float(np.max(scaled))
    if mean_res <= cfg.epsilon and max_res <= 10 * cfg.epsilon:
        return VerifyOutcome("pass", CHANNEL_PROPERTY_TEST, mean_res, max_res)
    return VerifyOutcome(
        "fail",
        CHANNEL_PROPERTY_TEST,
        mean_res,
        max_res,
        reason=(
            f"mean residual {mean_res:.3g} (bound {cfg.epsilon:.3g}) or max "
            f"{max_res:.3g} (bound {10 * cfg.epsilon:.3g}) out of bounds over "
            f"{cfg.n_test} fresh samples"
        ),
    )


def _collect_atoms(e: Expr) -> list:
    """Maximal function-application subterms (opaque atoms for the guard)."""
    out = []

    def walk(n: Expr):
        if isinstance(n, (Builtin, FuncApp)):
            if n not in out:
                out.append(n)
            return
        for c in children(n):
            walk(c)

    walk(e)
    return out


def symbolic_verify(
    expr_or_text,
    closed_form: Expr,
    cfg: VerifyConfig = None,
    box=(-10.0, 10.0),
    seed: int = 0,
    arity: int = 1,
    fname: str = "f",
) -> VerifyOutcome:
    """Verify that an identity holds after closed-form substitution.

    Accepts an expression, or text in the module grammar (an Eq(lhs, rhs)
    wrapper is read as lhs - rhs).  Exact rational simplification to zero
    passes on the symbolic_exact channel; otherwise the residual is
    evaluated at random in-domain points with hp_precision_bits of
    precision and must stay below 2^-hp_tolerance_exponent everywhere
    (symbolic_numeric channel).  Points where any atom exceeds the guard
    magnitude are redrawn; they sit inside a pole's guard band, where
    cancellation noise would swamp the threshold.
    """
    if cfg is None:
        cfg = VerifyConfig()
    e = parse(expr_or_text) if isinstance(expr_or_text, str) else expr_or_text
    params = input_vars(arity)
    substituted = subst_func(e, fname, params, closed_form)

    if rational_residual_zero(substituted):
        return VerifyOutcome("pass", CHANNEL_SYMBOLIC_EXACT, 0.0, 0.0)

    names = sorted(free_vars(substituted))
    atoms = _collect_atoms(substituted)
    threshold = 2.0 ** (-cfg.hp_tolerance_exponent)
    lo, hi = float(box[0]), float(box[1])
    rng = np.random.Generator(np.random.PCG64(seed))

    residuals = []
    retries = 0
    while len(residuals) < cfg.hp_points:
        point = {name: float(rng.uniform(lo, hi)) for name in names}
        env = Env(point)
        try:
            for atom in atoms:
                v = evaluate_hp(atom, env, cfg.hp_precision_bits)
                if abs(v) > cfg.guard_magnitude:
                    raise DomainError("atom magnitude inside pole guard band")
            value = evaluate_hp(substituted, env, cfg.hp_precision_bits)
        except (DomainError, UnboundSymbol) as exc:
            if isinstance(exc, UnboundSymbol):
                raise
            retries += 1
            if retries >= cfg.max_point_retries:
                raise DomainError(
                    f"could not find {cfg.hp_points} in-domain test points "
                    f"after {retries} retries"
                ) from None
            continue
        mag = abs(float(value))
        if mag >= threshold:
            mean_res = float(np.mean(residuals + [mag])) if residuals else mag
            return VerifyOutcome(
                "fail",
                CHANNEL_SYMBOLIC_NUMERIC,
                mean_res,
                mag,
                reason=(
                    f"residual {mag:.3e} at witness point "
                    f"{ {k: round(v, 6) for k, v in point.items()} } exceeds "
                    f"2^-{cfg.hp_tolerance_exponent}"
                ),
            )
        residuals.append(mag)

    mean_res = float(np.mean(residuals)) if residuals else 0.0
    max_res = float(np.max(residuals)) if residuals else 0.0
    return VerifyOutcome("pass", CHANNEL_SYMBOLIC_NUMERIC, mean_res, max_res)


def classify(
    p: Property,
    oracle: Oracle,
    closed_form: Expr = None,
    cfg: VerifyConfig = None,
    seed: int = 0,
) -> Property:
    """Stamp a candidate's verification status.

    Symbolic verification runs first when a closed form is registered;
    property testing against the oracle is the fallback channel.
    """
    if cfg is None:
        cfg = VerifyConfig()
    reason = ""
    if closed_form is not None:
        try:
            outcome = symbolic_verify(
                p.identity,
                closed_form,
                cfg,
                box=oracle.box,
                seed=seed,
                arity=oracle.arity,
            )
        except DomainError as exc:
            outcome = None
            reason = str(exc)
        if outcome is not None and outcome.passed:
            return replace(
                p, status=STATUS_VERIFIED_SYMBOLIC, channel=outcome.channel
            )
        if outcome is not None:
            reason = outcome.reason

    try:
        pt = property_test(p, oracle, cfg, seed=seed)
    except SamplingExhausted as exc:
        return replace(
            p, status=STATUS_UNVERIFIED, channel="", reason=f"{reason}; {exc}".strip("; ")
        )
    if pt.passed:
        return replace(p, status=STATUS_VERIFIED_NUMERIC, channel=pt.channel)
    combined = "; ".join(s for s in (reason, pt.reason) if s)
    return replace(p, status=STATUS_UNVERIFIED, channel="", reason=combined)
