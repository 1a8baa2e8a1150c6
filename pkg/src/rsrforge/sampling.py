"""Black-box oracles and correlated sample generation.

Rows are drawn one at a time from a seeded PCG64 stream (the documented,
cross-platform generator numpy guarantees stable streams for), so a
(seed, config, basis) triple reproduces a SampleTable bit for bit.  A
row is rejected and redrawn whenever any basis atom or monomial value
raises a domain error or comes out non-finite; this keeps accepted rows
i.i.d. on the feasible region.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, SamplingExhausted, TooFewRows, UnboundSymbol, UnknownSeries
from .expr import Env, Expr, evaluate
from .parser import format_expr
from .queries import TermBasis, input_vars, randomness_vars

DEFAULT_BOX = (-10.0, 10.0)


@dataclass
class Oracle:
    """Deterministic black-box program allegedly computing some f."""

    arity: int
    evaluator: Callable
    name: str = "oracle"
    box: tuple = DEFAULT_BOX  # one (lo, hi) applied per coordinate, or a tuple of them

    def coordinate_boxes(self) -> list:
        box = self.box
        if box and isinstance(box[0], (tuple, list)):
            if len(box) != self.arity:
                raise ValueError("per-coordinate box count does not match arity")
            return [tuple(map(float, b)) for b in box]
        lo, hi = box
        return [(float(lo), float(hi))] * self.arity

    def __call__(self, *args):
        return self.evaluator(*args)


def oracle_from_expr(name: str, expr: Expr, arity: int, box=DEFAULT_BOX) -> Oracle:
    names = input_vars(arity)

    def evaluator(*args):
        return evaluate(expr, Env(dict(zip(names, args))))

    return Oracle(arity=arity, evaluator=evaluator, name=name, box=box)


@dataclass
class SamplingConfig:
    m: int = 100
    box: tuple = DEFAULT_BOX
    seed: int = 0
    max_retries_per_row: int = 100
    train_fraction: float = 0.8

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie strictly in (0, 1)")


@dataclass
class SampleTable:
    """Evaluated monomials plus the raw draw log, one row per (x, r)."""

    monomial_values: np.ndarray  # m x |MON|
    atom_values: np.ndarray  # m x |basis|
    xs: np.ndarray  # m x arity
    rs: np.ndarray  # m x arity
    seed: int
    basis: TermBasis
    monomials: list
    column_names: list = field(default_factory=list)

    def __post_init__(self):
        if not self.column_names:
            from .queries import monomial_to_expr

            self.column_names = [
                format_expr(monomial_to_expr(m, self.basis)) for m in self.monomials
            ]

    @property
    def m(self) -> int:
        return self.monomial_values.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(f'"{c}"' for c in self.column_names) + "\n")
        for row in self.monomial_values:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    def draw_log_jsonl(self) -> str:
        lines = []
        for x, r in zip(self.xs, self.rs):
            lines.append(json.dumps({"x": list(map(float, x)), "r": list(map(float, r))}))
        return "\n".join(lines) + "\n"

    def _take(self, rows: slice) -> "SampleTable":
        return SampleTable(
            monomial_values=self.monomial_values[rows],
            atom_values=self.atom_values[rows],
            xs=self.xs[rows],
            rs=self.rs[rows],
            seed=self.seed,
            basis=self.basis,
            monomials=self.monomials,
            column_names=self.column_names,
        )


def split(table: SampleTable, train_fraction: float) -> tuple:
    """Prefix/suffix row partition: floor(train_fraction * m) rows train."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly in (0, 1)")
    if table.m < 5:
        raise TooFewRows(f"need at least 5 rows to split, have {table.m}")
    k = int(math.floor(train_fraction * table.m))
    k = max(1, min(table.m - 1, k))
    return table._take(slice(0, k)), table._take(slice(k, table.m))


def _exponent_matrix(monomials, k: int) -> np.ndarray:
    return np.array([m.exponents for m in monomials], dtype=np.int64)


def evaluate_atom_row(basis: TermBasis, oracle: Oracle, x: np.ndarray, r: np.ndarray):
    """Evaluate every basis atom at one (x, r) draw; DomainError on trouble."""
    xs = input_vars(oracle.arity)
    rs = randomness_vars(oracle.arity)
    bindings = {**dict(zip(xs, map(float, x))), **dict(zip(rs, map(float, r)))}
    env = Env(bindings, {"f": oracle.evaluator})
    out = np.empty(len(basis))
    for i, term in enumerate(basis.terms):
        out[i] = evaluate(term, env)
    return out


def draw_samples(
    oracle: Oracle,
    basis: TermBasis,
    monomials: list,
    cfg: SamplingConfig,
) -> SampleTable:
    """Draw cfg.m accepted rows of correlated samples.

    Raises SamplingExhausted after cfg.max_retries_per_row consecutive
    rejections, which signals that the box is not usefully contained in
    the oracle's domain.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    boxes = oracle.coordinate_boxes() if oracle.box is not None else None
    if boxes is None:
        boxes = [tuple(map(float, cfg.box))] * oracle.arity

    expmat = _exponent_matrix(monomials, len(basis))
    arity = oracle.arity

    mono_rows = np.empty((cfg.m, len(monomials)))
    atom_rows = np.empty((cfg.m, len(basis)))
    xs = np.empty((cfg.m, arity))
    rs = np.empty((cfg.m, arity))

    row = 0
    failures = 0
    while row < cfg.m:
        x = np.array([rng.uniform(lo, hi) for lo, hi in boxes])
        r = np.array([rng.uniform(lo, hi) for lo, hi in boxes])
        try:
            atoms = evaluate_atom_row(basis, oracle, x, r)
        except (DomainError, UnboundSymbol) as exc:
            if isinstance(exc, UnboundSymbol):
                raise
            failures += 1
            if failures >= cfg.max_retries_per_row:
                raise SamplingExhausted(
                    f"{failures} consecutive rejected draws for {oracle.name}"
                ) from None
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            mono = np.prod(np.power(atoms[None, :], expmat), axis=1)
        if not np.all(np.isfinite(mono)):
            failures += 1
            if failures >= cfg.max_retries_per_row:
                raise SamplingExhausted(
                    f"{failures} consecutive rejected draws for {oracle.name}"
                )
            continue
        mono_rows[row] = mono
        atom_rows[row] = atoms
        xs[row] = x
        rs[row] = r
        row += 1
        failures = 0

    return SampleTable(
        monomial_values=mono_rows,
        atom_values=atom_rows,
        xs=xs,
        rs=rs,
        seed=cfg.seed,
        basis=basis,
        monomials=list(monomials),
    )


# --------------------------------------------------------------------------
# Truncated-series reference programs
# --------------------------------------------------------------------------


def _taylor_sigmoid(terms: int):
    def program(x: float) -> float:
        # mirrors the reference C loop: sum accumulates the series of
        # exp(-x) truncated to `terms` terms, then 1/(1+sum)
        total = 1.0
        trm = 1.0
        neg_x = -x
        for n in range(1, terms):
            trm *= neg_x / n
            total += trm
        denom = 1.0 + total
        if denom == 0.0 or not math.isfinite(denom):
            raise DomainError("truncated sigmoid series denominator vanished")
        return 1.0 / denom

    return program


def _taylor_exp(terms: int):
    def program(x: float) -> float:
        total = 1.0
        trm = 1.0
        for n in range(1, terms):
            trm *= x / n
            total += trm
        if not math.isfinite(total):
            raise DomainError("truncated exp series overflowed")
        return total

    return program


def _taylor_sin(terms: int):
    def program(x: float) -> float:
        total = 0.0
        trm = x
        for k in range(terms):
            total += trm
            trm *= -x * x / ((2 * k + 2) * (2 * k + 3))
        if not math.isfinite(total):
            raise DomainError("truncated sin series overflowed")
        return total

    return program


def _taylor_cos(terms: int):
    def program(x: float) -> float:
        total = 0.0
        trm = 1.0
        for k in range(terms):
            total += trm
            trm *= -x * x / ((2 * k + 1) * (2 * k + 2))
        if not math.isfinite(total):
            raise DomainError("truncated cos series overflowed")
        return total

    return program


_SERIES = {
    "sigmoid": _taylor_sigmoid,
    "exp": _taylor_exp,
    "sin": _taylor_sin,
    "cos": _taylor_cos,
}


def taylor_program(builtin_name: str, terms: int, box=DEFAULT_BOX) -> Oracle:
    """Oracle computing the truncated Taylor series of a registered function."""
    maker = _SERIES.get(builtin_name)
    if maker is None:
        raise UnknownSeries(
            f"no truncated series registered for {builtin_name!r}; "
            f"known: {sorted(_SERIES)}"
        )
    if terms < 1:
        raise ValueError("terms must be at least 1")
    return Oracle(
        arity=1,
        evaluator=maker(terms),
        name=f"taylor:{builtin_name}:{terms}",
        box=box,
    )
