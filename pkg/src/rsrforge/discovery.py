"""End-to-end inference of randomized self-reduction identities.

Every monomial of the basis (not only the degree-1 atoms) serves in turn
as the supervised variable, regressed on all remaining monomials.  Two
deterministic routes produce candidate identities per target:

  * route A fits on the full column set: minimum-norm least squares (or
    cross-validated ridge/lasso in the small-noise regime), followed by
    backward elimination;
  * route B, for degree-1 targets, scans atom subsets by increasing size
    and keeps the first subset whose restricted design fits the target
    exactly; this recovers minimal-query identities that the full design
    hides inside its null space.

Candidates are snapped to bounded-denominator rationals and re-checked
on the train and held-out splits before becoming Properties.  Residuals
are scale-free throughout: each row is divided by max(1, largest
|monomial value| among the identity's monomials).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .errors import NoSparseModel, NotSolvable
from .expr import Const, Expr, FuncApp, Product, Quotient, Sum, Var, canonicalize
from .parser import format_expr
from .polyratio import expand_to_polynomial, identity_normal_form
from .queries import (
    Monomial,
    TermBasis,
    build_basis,
    default_query_class,
    gen_monomials,
    input_vars,
    monomial_to_expr,
)
from .rational import ONE, Rational
from .regression import (
    FitResult,
    RegularizerSpec,
    cross_validate,
    fit,
    fit_integer_bounded,
    mse,
    rationalize,
    sparsify,
    stability_sample_complexity,
)
from .sampling import DEFAULT_BOX, Oracle, SamplingConfig, draw_samples, split

_PLAIN = RegularizerSpec("none")

_FAST_PATH_MSE = 1e-10
_SUBSET_EXACT_MSE = 1e-8
_SUBSET_SIZE_CAP = 6
_SUBSET_COUNT_CAP = 256

STATUS_CANDIDATE = "candidate"
STATUS_VERIFIED_NUMERIC = "verified_numeric"
STATUS_VERIFIED_SYMBOLIC = "verified_symbolic"
STATUS_UNVERIFIED = "unverified"


@dataclass
class InferConfig:
    queries: tuple = None  # None -> default class for the oracle's arity
    max_degree: int = 2
    m: int = 100
    epsilon: float = 1e-3
    max_denominator: int = 100
    method: str = "regression"  # "regression" | "integer"
    seed: int = 0
    include_raw_vars: bool = False
    var_bound: int = 3
    max_active_terms: int = None
    drop_threshold: float = 1e-3
    train_fraction: float = 0.8
    box: tuple = None  # overrides the oracle's sampling box
    monomial_cap: int = 20_000
    folds: int = 5

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_degree < 1:
            raise ValueError("max_degree must be at least 1")
        if self.method not in ("regression", "integer"):
            raise ValueError(f"unknown method {self.method!r}")

    def snapshot(self) -> dict:
        return {
            "queries": [q.name for q in self.queries] if self.queries else None,
            "max_degree": self.max_degree,
            "m": self.m,
            "epsilon": self.epsilon,
            "max_denominator": self.max_denominator,
            "method": self.method,
            "seed": self.seed,
            "include_raw_vars": self.include_raw_vars,
            "var_bound": self.var_bound,
            "max_active_terms": self.max_active_terms,
            "drop_threshold": self.drop_threshold,
            "train_fraction": self.train_fraction,
            "box": list(self.box) if self.box else None,
            "monomial_cap": self.monomial_cap,
            "folds": self.folds,
        }


@dataclass(frozen=True)
class Property:
    """One discovered implicit identity, implicitly "= 0"."""

    id: str
    identity: Expr
    pairs: tuple  # ((Monomial, Rational), ...) normalized coefficients
    basis: TermBasis
    queries_used: tuple
    recovery: Expr = None
    side_condition: Expr = None
    train_mse: float = 0.0
    test_residual: float = 0.0
    status: str = STATUS_CANDIDATE
    sample_complexity: int = -1
    channel: str = ""
    reason: str = ""
    duplicates: tuple = ()

    def identity_string(self) -> str:
        return format_expr(self.identity) + " = 0"

    def coefficient_map(self) -> dict:
        """Monomial-expression string -> Rational, for assertions."""
        return {
            format_expr(monomial_to_expr(mono, self.basis)): coef
            for mono, coef in self.pairs
        }

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "identity": self.identity_string(),
            "recovery": None
            if self.recovery is None
            else format_expr(self.recovery),
            "side_condition": None
            if self.side_condition is None
            else format_expr(self.side_condition) + " != 0",
            "queries": [q.name for q in self.queries_used],
            "coefficients": [
                {
                    "monomial": format_expr(monomial_to_expr(mono, self.basis)),
                    "rational": str(coef),
                }
                for mono, coef in self.pairs
            ],
            "train_mse": self.train_mse,
            "test_residual": self.test_residual,
            "status": self.status,
            "channel": self.channel,
            "sample_complexity": self.sample_complexity,
            "duplicates": list(self.duplicates),
        }


def _derived_seed(seed: int, *key) -> int:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *key])
    return int(ss.generate_state(1)[0])


def _row_scales(monomial_values: np.ndarray, cols=None) -> np.ndarray:
    sub = monomial_values if cols is None else monomial_values[:, cols]
    if sub.shape[1] == 0:
        return np.ones(sub.shape[0])
    return np.maximum(1.0, np.max(np.abs(sub), axis=1))


def normalize_identity(e: Expr) -> Expr:
    """Canonical representative of the identity's dedupe class."""
    expr, _scale = identity_normal_form(e)
    return expr


def _monomial_mentions_f(mono: Monomial, basis: TermBasis) -> bool:
    return any(
        k > 0 and isinstance(term, FuncApp)
        for term, k in zip(basis.terms, mono.exponents)
    )


def _regress(X: np.ndarray, y: np.ndarray, cfg: InferConfig, cv_seed: int):
    """Shared estimation core: returns (local support, raw coefficients)."""
    if X.shape[1] == 0:
        return None
    if cfg.method == "integer":
        try:
            fr = fit_integer_bounded(X, y, cfg.var_bound, cfg.max_active_terms)
        except Exception:
            return None
        if fr.train_mse > cfg.epsilon:
            return None
        sup = list(fr.surviving)
        return sup, fr.coefficients[sup]

    scales = np.sqrt(np.mean(X * X, axis=0))
    scales[scales < 1e-12] = 1.0
    Xn = X / scales

    coef0 = fit(Xn, y, _PLAIN)
    full_mse = mse(Xn, y, coef0)
    if full_mse > cfg.epsilon:
        return None  # even the unregularized optimum misses the bound
    if full_mse <= min(cfg.epsilon, _FAST_PATH_MSE):
        fr0 = FitResult(
            coefficients=coef0,
            surviving=tuple(int(j) for j in np.nonzero(coef0)[0]),
            train_mse=full_mse,
        )
    else:
        try:
            _spec, fr0 = cross_validate(
                Xn, y, folds=min(cfg.folds, X.shape[0]), seed=cv_seed
            )
        except Exception:
            return None

    try:
        fr = sparsify(Xn, y, fr0, cfg.drop_threshold, cfg.epsilon)
    except NoSparseModel:
        return None
    sup = list(fr.surviving)
    return sup, fr.coefficients[sup] / scales[sup]


class _Run:
    """Shared state for one infer() invocation."""

    def __init__(self, oracle: Oracle, cfg: InferConfig):
        self.cfg = cfg
        queries = (
            tuple(cfg.queries) if cfg.queries else tuple(default_query_class(oracle.arity))
        )
        self.basis = build_basis("f", queries, oracle.arity, cfg.include_raw_vars)
        self.monomials = gen_monomials(self.basis, cfg.max_degree, cfg.monomial_cap)

        run_oracle = oracle
        if cfg.box is not None:
            run_oracle = Oracle(
                arity=oracle.arity,
                evaluator=oracle.evaluator,
                name=oracle.name,
                box=cfg.box,
            )
        scfg = SamplingConfig(
            m=cfg.m,
            box=cfg.box if cfg.box is not None else DEFAULT_BOX,
            seed=cfg.seed,
            train_fraction=cfg.train_fraction,
        )
        table = draw_samples(run_oracle, self.basis, self.monomials, scfg)
        self.train, self.test = split(table, cfg.train_fraction)
        self.M_train = self.train.monomial_values
        self.M_test = self.test.monomial_values
        self.all_scale = _row_scales(self.M_train)

        # column index of every monomial supported inside an atom subset
        self.support_sets = [
            frozenset(i for i, k in enumerate(m.exponents) if k > 0)
            for m in self.monomials
        ]

    def finish(self, tcol: int, support, raw, pid: str):
        """Rationalize, re-check, normalize, and package one candidate."""
        cfg = self.cfg
        monomials, basis = self.monomials, self.basis
        M_train, M_test = self.M_train, self.M_test

        rats = [rationalize(c, cfg.max_denominator) for c in raw]
        keep = [j for j, r in enumerate(rats) if not r.is_zero]
        support = [support[j] for j in keep]
        rats = [rats[j] for j in keep]

        ident_cols = support + [tcol]
        if not any(
            _monomial_mentions_f(monomials[j], basis) for j in ident_cols
        ):
            return None  # vacuous pure (x, r) relation

        coeff_vec = np.array([float(r) for r in rats])
        resid_train = M_train[:, tcol] - (
            M_train[:, support] @ coeff_vec if support else 0.0
        )
        scale_train = _row_scales(M_train, ident_cols)
        train_mse_rat = float(np.mean((resid_train / scale_train) ** 2))
        if train_mse_rat > cfg.epsilon:
            return None  # wrong snap: rationalized model rejected

        resid_test = M_test[:, tcol] - (
            M_test[:, support] @ coeff_vec if support else 0.0
        )
        scale_test = _row_scales(M_test, ident_cols)
        test_residual = float(np.mean(np.abs(resid_test / scale_test)))
        if test_residual > cfg.epsilon:
            return None

        raw_pairs = {monomials[tcol]: ONE}
        for j, r in zip(support, rats):
            raw_pairs[monomials[j]] = -r

        raw_expr = canonicalize(
            Sum(
                tuple(
                    Product((Const(c), monomial_to_expr(mono, basis)))
                    for mono, c in raw_pairs.items()
                )
            )
        )
        identity, scale = identity_normal_form(raw_expr)
        pairs = tuple(
            sorted(
                ((mono, c * scale) for mono, c in raw_pairs.items()),
                key=lambda mc: mc[0].exponents,
                reverse=True,
            )
        )

        used = []
        for j in ident_cols:
            for bi, k in enumerate(monomials[j].exponents):
                if k > 0:
                    for q in basis.origins[bi]:
                        if q not in used:
                            used.append(q)

        sc = stability_sample_complexity(
            M_train[:, support] if support else np.zeros((M_train.shape[0], 0)),
            M_train[:, tcol],
            tuple(range(len(support))),
            rats,
            cfg.max_denominator,
        )

        prop = Property(
            id=pid,
            identity=identity,
            pairs=pairs,
            basis=basis,
            queries_used=tuple(used),
            train_mse=train_mse_rat,
            test_residual=test_residual,
            sample_complexity=sc,
        )
        try:
            rec, side = solve_recovery(prop)
            prop = replace(prop, recovery=rec, side_condition=side)
        except NotSolvable:
            pass
        return prop

    def route_full(self, tcol: int, pid: str):
        cols = [j for j in range(len(self.monomials)) if j != tcol]
        X = self.M_train[:, cols] / self.all_scale[:, None]
        y = self.M_train[:, tcol] / self.all_scale
        got = _regress(X, y, self.cfg, _derived_seed(self.cfg.seed, 101, tcol))
        if got is None:
            return None
        sup_local, raw = got
        return self.finish(tcol, [cols[j] for j in sup_local], raw, pid)

    def route_subsets(self, tcol: int, pid: str):
        """Scan atom subsets containing the target atom, smallest first.

        Only machine-precision fits count here: this route exists to pull
        minimal-query identities out of designs whose full column set is
        rank deficient, so approximate subsets are left to route A.
        """
        cfg = self.cfg
        exact_eps = min(cfg.epsilon, _SUBSET_EXACT_MSE)
        target_support = self.support_sets[tcol]
        k = len(self.basis)
        rest = [i for i in range(k) if i not in target_support]
        arity = max(
            (len(t.args) for t in self.basis.terms if isinstance(t, FuncApp)),
            default=1,
        )
        bare = canonicalize(FuncApp("f", tuple(Var(v) for v in input_vars(arity))))
        f_idx = (
            self.basis.terms.index(bare) if bare in self.basis.terms else None
        )

        candidates = []
        for size in range(len(target_support), min(k, _SUBSET_SIZE_CAP) + 1):
            for extra in combinations(rest, size - len(target_support)):
                candidates.append(target_support | set(extra))
        # identities able to recover f(x) need the bare atom present, so
        # subsets containing it are probed first within each size
        candidates.sort(
            key=lambda S: (
                len(S),
                0 if (f_idx is not None and f_idx in S) else 1,
                tuple(sorted(S)),
            )
        )

        y = self.M_train[:, tcol] / self.all_scale
        for scanned, S in enumerate(candidates):
            if scanned >= _SUBSET_COUNT_CAP:
                return None
            cols = [
                j
                for j in range(len(self.monomials))
                if j != tcol and self.support_sets[j] <= S
            ]
            if not cols:
                continue
            X = self.M_train[:, cols] / self.all_scale[:, None]
            coef0 = fit(X, y, _PLAIN)
            exact_mse = mse(X, y, coef0)
            if exact_mse > exact_eps:
                continue
            try:
                fr = sparsify(
                    X,
                    y,
                    FitResult(
                        coefficients=coef0,
                        surviving=tuple(int(i) for i in np.nonzero(coef0)[0]),
                        train_mse=exact_mse,
                    ),
                    cfg.drop_threshold,
                    cfg.epsilon,
                )
            except NoSparseModel:
                continue
            sup_local = list(fr.surviving)
            raw = fr.coefficients[sup_local]
            prop = self.finish(tcol, [cols[j] for j in sup_local], raw, pid)
            if prop is not None:
                return prop
        return None


def infer(oracle: Oracle, cfg: InferConfig):
    """Run the full pipeline.

    Returns (properties, mean_errors, sample_complexities, error): maps
    keyed by property id in deterministic order, plus an error message
    when nothing survived (the maps are then empty).
    """
    run = _Run(oracle, cfg)

    properties = []
    for j, mono in enumerate(run.monomials):
        if mono.degree == 0:
            continue
        prop_a = run.route_full(j, f"p{2 * j + 1}")
        if prop_a is not None:
            properties.append(prop_a)
        if mono.degree == 1 and cfg.method == "regression":
            prop_b = run.route_subsets(j, f"p{2 * j + 2}")
            if prop_b is not None:
                properties.append(prop_b)

    classes = dedupe(properties)
    reps = [replace(rep, duplicates=tuple(members)) for rep, members in classes]

    props = {p.id: p for p in reps}
    mean_errors = {p.id: p.test_residual for p in reps}
    complexities = {p.id: p.sample_complexity for p in reps}
    error = None if props else "no property survived the error bound"
    return props, mean_errors, complexities, error


def property_from_identity(identity: Expr, pid: str = "gt") -> Property:
    """Wrap a known identity as a Property so it can be property-tested.

    The basis is reconstructed from the identity's own atoms; coefficients
    carry the same normalization as discovered properties; queries_used is
    left empty.
    """
    poly, atoms = expand_to_polynomial(identity)
    if not poly:
        raise ValueError("identity is trivially zero")
    normalized, scale = identity_normal_form(identity)
    basis = TermBasis(terms=tuple(atoms))
    pairs = []
    for mono, coef in poly.items():
        exps = [0] * len(atoms)
        for ai, k in mono:
            exps[ai] = k
        pairs.append((Monomial(tuple(exps)), coef * scale))
    pairs.sort(key=lambda mc: mc[0].exponents, reverse=True)
    return Property(
        id=pid,
        identity=normalized,
        pairs=tuple(pairs),
        basis=basis,
        queries_used=(),
    )


def solve_recovery(p: Property):
    """Solve the identity for f(x) when it appears with degree exactly 1.

    Returns (recovery expression, cofactor expression); the recovery is
    valid wherever the cofactor is nonzero.
    """
    arity = max(
        (len(t.args) for t in p.basis.terms if isinstance(t, FuncApp)), default=1
    )
    f_atom = canonicalize(FuncApp("f", tuple(Var(v) for v in input_vars(arity))))
    try:
        f_index = p.basis.terms.index(f_atom)
    except ValueError:
        raise NotSolvable("f(x) is not among the basis atoms") from None

    cofactor_terms = []
    rest_terms = []
    for mono, coef in p.pairs:
        k = mono.exponents[f_index]
        if k == 0:
            rest_terms.append(Product((Const(coef), monomial_to_expr(mono, p.basis))))
            continue
        if k > 1:
            raise NotSolvable("f(x) appears with degree >= 2")
        reduced = list(mono.exponents)
        reduced[f_index] = 0
        reduced_expr = monomial_to_expr(Monomial(tuple(reduced)), p.basis)
        cofactor_terms.append(Product((Const(coef), reduced_expr)))

    if not cofactor_terms:
        raise NotSolvable("f(x) is absent from the identity")

    cofactor = canonicalize(Sum(tuple(cofactor_terms)))
    if not rest_terms:
        rest = Const(Rational(0))
    else:
        rest = canonicalize(Sum(tuple(rest_terms)))
    recovery = canonicalize(Quotient(Product((Const(Rational(-1)), rest)), cofactor))
    return recovery, cofactor


def dedupe(props) -> list:
    """Group properties by normalized identity; representative = lowest id."""

    def id_key(p: Property):
        return (len(p.id), p.id)

    groups: dict = {}
    order = []
    for p in sorted(props, key=id_key):
        key = p.identity
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(p)

    out = []
    for key in order:
        members = groups[key]
        rep = members[0]
        out.append((rep, [q.id for q in members[1:]]))
    return out


def count_report(props) -> tuple:
    """(rsr, verified, unverified) in the result-table sense."""
    verified = [
        p
        for p in props
        if p.status in (STATUS_VERIFIED_NUMERIC, STATUS_VERIFIED_SYMBOLIC)
    ]
    unverified = [p for p in props if p.status == STATUS_UNVERIFIED]
    rsr = [p for p in verified if p.recovery is not None]
    return len(rsr), len(verified), len(unverified)
