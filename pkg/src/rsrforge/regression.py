"""Sparsifying linear regression with rational coefficient recovery.

fit/cross_validate/sparsify operate on plain matrices; the discovery
pipeline owns row and column scaling.  Sparsification is greedy backward
elimination: columns with coefficients below the relative threshold are
always dropped, and once none remain, the smallest surviving coefficient
is tentatively dropped and kept out only while the refit error stays
within the bound.  Refits use minimum-norm least squares, so the final
coefficients on the surviving support are unbiased and snap cleanly to
rationals.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .errors import (
    NoSparseModel,
    SearchSpaceTooLarge,
    SingularDesign,
    TooFewRows,
)
from .rational import Rational

_LASSO_GAP = 1e-10
# well-conditioned problems hit the duality-gap target in tens of sweeps;
# the cap only bites on rank-deficient borderline fits where the exact
# optimum is immaterial to model selection
_LASSO_MAX_SWEEPS = 120
_TIE_REL = 1e-9


@dataclass(frozen=True)
class RegularizerSpec:
    kind: str  # "none" | "ridge" | "lasso"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "ridge", "lasso"):
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")

    def __str__(self):
        return self.kind if self.kind == "none" else f"{self.kind}({self.lam:g})"


# fixed hyperparameter grids; documented, overridable by passing your own
# spec list to cross_validate
RIDGE_GRID = (1e-8, 1e-4, 1e-2)
LASSO_GRID = (1e-6, 1e-4, 1e-2)


def default_specs() -> list:
    specs = [RegularizerSpec("none")]
    specs += [RegularizerSpec("ridge", lam) for lam in RIDGE_GRID]
    specs += [RegularizerSpec("lasso", lam) for lam in LASSO_GRID]
    return specs


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray
    surviving: tuple
    train_mse: float
    cv_score: float = float("nan")
    target_index: int = -1
    sample_complexity: int = -1


def _as_matrix(design, targets):
    X = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2:
        raise ValueError("design must be a 2-D matrix")
    if X.shape[0] != y.shape[0]:
        raise ValueError("design and target row counts differ")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError("design must have at least one row and one column")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("design and targets must be finite")
    return X, y


def mse(X: np.ndarray, y: np.ndarray, coef: np.ndarray) -> float:
    res = y - X @ coef
    return float(res @ res) / len(y)


def fit(design, targets, reg: RegularizerSpec) -> np.ndarray:
    """Solve one regularized least-squares problem.

    none  -> minimum-norm solution of the rank-revealing SVD solver
    ridge -> closed-form (X'X + lam I)^-1 X'y
    lasso -> cyclic coordinate descent to duality gap < 1e-10
    """
    X, y = _as_matrix(design, targets)
    if reg.kind == "none" or reg.lam == 0.0:
        coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
        if rank == 0:
            raise SingularDesign("design matrix has rank zero")
        return coef
    if reg.kind == "ridge":
        k = X.shape[1]
        gram = X.T @ X + reg.lam * np.eye(k)
        return np.linalg.solve(gram, X.T @ y)
    return _lasso_cd(X, y, reg.lam)


def _lasso_cd(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Minimize (1/2m)||y - Xc||^2 + lam * ||c||_1 by cyclic updates."""
    m, k = X.shape
    gram = X.T @ X / m
    xty = X.T @ y / m
    diag = np.diag(gram).copy()
    coef = np.zeros(k)
    y_sq = float(y @ y) / (2 * m)

    # alternate one full pass with passes over the active set only
    active = list(range(k))
    for sweep in range(_LASSO_MAX_SWEEPS):
        full = sweep % 10 == 0
        idxs = range(k) if full else active
        max_delta = 0.0
        for j in idxs:
            if diag[j] <= 0.0:
                continue
            rho = xty[j] - gram[j] @ coef + diag[j] * coef[j]
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / diag[j]
            delta = abs(new - coef[j])
            if delta > max_delta:
                max_delta = delta
            coef[j] = new
        if full:
            active = [j for j in range(k) if coef[j] != 0.0]
            if max_delta < 1e-14 or _lasso_gap(X, y, coef, lam, y_sq) < _LASSO_GAP:
                break
    return coef


def _lasso_gap(X, y, coef, lam, y_sq) -> float:
    m = len(y)
    res = y - X @ coef
    primal = float(res @ res) / (2 * m) + lam * float(np.sum(np.abs(coef)))
    corr = np.abs(X.T @ res) / m
    scale = min(1.0, lam / max(float(corr.max()), 1e-300))
    theta = scale * res / m
    dual = float(y @ theta) - m / 2 * float(theta @ theta)
    return primal - dual


def cross_validate(design, targets, specs=None, folds: int = 5, seed: int = 0):
    """Pick the spec with the lowest mean held-out MSE.

    The fold partition is a seeded permutation cut into contiguous
    blocks.  Ties (within 1e-9 relative) break toward stronger
    regularization, then ridge before lasso before none.
    """
    X, y = _as_matrix(design, targets)
    m = X.shape[0]
    if specs is None:
        specs = default_specs()
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if m < folds:
        raise TooFewRows(f"{m} rows cannot make {folds} folds")

    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(m)
    blocks = np.array_split(perm, folds)

    scores = []
    for spec in specs:
        errs = []
        for b in blocks:
            mask = np.ones(m, dtype=bool)
            mask[b] = False
            if not mask.any():
                continue
            try:
                coef = fit(X[mask], y[mask], spec)
            except SingularDesign:
                errs.append(float("inf"))
                continue
            errs.append(mse(X[b], y[b], coef))
        scores.append(float(np.mean(errs)))

    best = min(scores)
    kind_rank = {"ridge": 0, "lasso": 1, "none": 2}
    tied = [
        i
        for i, s in enumerate(scores)
        if s <= best + _TIE_REL * max(1e-300, abs(best))
    ]
    winner = min(tied, key=lambda i: (-specs[i].lam, kind_rank[specs[i].kind], i))

    spec = specs[winner]
    coef = fit(X, y, spec)
    result = FitResult(
        coefficients=coef,
        surviving=tuple(int(j) for j in np.nonzero(coef)[0]),
        train_mse=mse(X, y, coef),
        cv_score=scores[winner],
    )
    return spec, result


_SPARSIFY_ATTEMPTS = 6
_QUALITY_FLOOR = 1e-20


def sparsify(
    design,
    targets,
    fit_result: FitResult,
    drop_threshold: float = 1e-3,
    eps: float = 1e-3,
) -> FitResult:
    """Backward elimination until no single column can be removed.

    Each round walks the surviving columns by ascending |coefficient| and
    removes the first one whose refit keeps the train MSE within bounds;
    columns below drop_threshold (relative to the largest coefficient)
    are the primary candidates, and at most a handful of above-threshold
    drops are attempted per round so the loop stays near-linear.  A drop
    must keep the MSE within eps AND must not degrade an (almost) exact
    fit into a merely eps-good one, so machine-precision identities never
    get pruned into loose approximations.  Refits are minimum-norm least
    squares, which debiases the survivors.
    """
    X, y = _as_matrix(design, targets)
    k = X.shape[1]
    active = list(range(k))
    coef = np.asarray(fit_result.coefficients, dtype=float).copy()
    if len(coef) != k:
        raise ValueError("fit result does not match design width")

    current = mse(X, y, coef)
    if current > eps:
        raise NoSparseModel(
            f"full model train MSE {current:.3g} already exceeds eps {eps:.3g}"
        )

    def refit(cols):
        if not cols:
            return np.zeros(0), float(y @ y) / len(y)
        sub = X[:, cols]
        c, _, _, _ = np.linalg.lstsq(sub, y, rcond=None)
        return c, mse(sub, y, c)

    def allowed(cur: float) -> float:
        return min(eps, max(16.0 * cur, _QUALITY_FLOOR))

    coef_active = coef[list(active)]
    while active:
        magnitudes = np.abs(coef_active)
        tau = drop_threshold * float(magnitudes.max())
        bound = allowed(current)
        order = sorted(range(len(active)), key=lambda i: (magnitudes[i], i))
        dropped = False
        attempts = 0
        for i in order:
            below = magnitudes[i] < tau
            if not below:
                attempts += 1
                if attempts > _SPARSIFY_ATTEMPTS:
                    break
            trial = [c for pos, c in enumerate(active) if pos != i]
            new_coef, new_mse = refit(trial)
            if new_mse <= bound:
                active = trial
                coef_active = new_coef
                current = new_mse
                dropped = True
                break
        if not dropped:
            break

    coef_full = np.zeros(k)
    if active:
        coef_active, final_mse = refit(active)
        coef_full[active] = coef_active
    else:
        final_mse = float(y @ y) / len(y)
    if final_mse > eps:
        raise NoSparseModel(
            f"sparsified model MSE {final_mse:.3g} exceeds eps {eps:.3g}"
        )
    return replace(
        fit_result,
        coefficients=coef_full,
        surviving=tuple(active),
        train_mse=final_mse,
    )


def rationalize(c: float, max_denominator: int) -> Rational:
    """Best rational approximation with bounded denominator.

    Continued-fraction convergents/semiconvergents via
    Fraction.limit_denominator: no rational with denominator at most
    max_denominator is strictly closer to c.
    """
    if not np.isfinite(c):
        raise ValueError("cannot rationalize a non-finite value")
    if max_denominator < 1:
        raise ValueError("max_denominator must be at least 1")
    frac = Fraction(float(c)).limit_denominator(max_denominator)
    return Rational(frac.numerator, frac.denominator)


# --------------------------------------------------------------------------
# Bounded integer-coefficient exact search
# --------------------------------------------------------------------------


def _tie_better(cand, best) -> bool:
    """cand/best are (mse, nnz, coef_tuple); exact-mse ties break toward
    fewer nonzeros, then the lexicographically smallest vector."""
    mse_c, nnz_c, vec_c = cand
    mse_b, nnz_b, vec_b = best
    tol = _TIE_REL * max(1.0, abs(mse_b))
    if mse_c < mse_b - tol:
        return True
    if mse_c > mse_b + tol:
        return False
    return (nnz_c, vec_c) < (nnz_b, vec_b)


def fit_integer_bounded(
    design,
    targets,
    var_bound: int,
    max_active_terms: int = None,
) -> FitResult:
    """Exact search over integer coefficient vectors in [-B, B]^k.

    Finds the vector with at most max_active_terms nonzeros minimizing
    train MSE; among minimizers, fewest nonzeros, then lexicographically
    smallest.  Branch and bound with a real-relaxation lower bound per
    prefix; instances beyond the documented desk scale raise.
    """
    X, y = _as_matrix(design, targets)
    m, k = X.shape
    if k > 12:
        raise SearchSpaceTooLarge(f"{k} columns exceeds the 12-column limit")
    if var_bound > 10:
        raise SearchSpaceTooLarge("var_bound above 10 is not supported")
    if var_bound < 0:
        raise ValueError("var_bound must be nonnegative")
    if max_active_terms is None:
        max_active_terms = k

    zero_mse = float(y @ y) / m
    best = (zero_mse, 0, (0,) * k)

    if var_bound == 0:
        return FitResult(
            coefficients=np.zeros(k),
            surviving=(),
            train_mse=zero_mse,
            target_index=-1,
        )

    # Residual lower bound: projecting out all still-free columns can only
    # reduce the norm, so ||P_j r||^2/m under-estimates every completion.
    projs = []
    for j in range(k + 1):
        suffix = X[:, j:]
        if suffix.shape[1] == 0:
            projs.append(None)
            continue
        q, _ = np.linalg.qr(suffix, mode="reduced")
        projs.append(q)

    values = [0]
    for v in range(1, var_bound + 1):
        values.extend((v, -v))

    budget = [5_000_000]
    prefix = [0] * k

    def descend(j: int, residual: np.ndarray, nnz: int):
        nonlocal best
        budget[0] -= 1
        if budget[0] < 0:
            raise SearchSpaceTooLarge("node budget exhausted in integer search")
        if j == k:
            cand = (float(residual @ residual) / m, nnz, tuple(prefix))
            if _tie_better(cand, best):
                best = cand
            return
        q = projs[j]
        if q is not None:
            proj = residual - q @ (q.T @ residual)
            lower = float(proj @ proj) / m
        else:
            lower = float(residual @ residual) / m
        if lower > best[0] + _TIE_REL * max(1.0, best[0]):
            return
        col = X[:, j]
        for v in values:
            if v != 0 and nnz == max_active_terms:
                continue
            prefix[j] = v
            descend(j + 1, residual - v * col, nnz + (v != 0))
        prefix[j] = 0

    descend(0, y.copy(), 0)

    coef = np.array(best[2], dtype=float)
    return FitResult(
        coefficients=coef,
        surviving=tuple(int(j) for j in np.nonzero(coef)[0]),
        train_mse=best[0],
    )


def fit_result_to_json(
    fr: FitResult, monomial_names, max_denominator: int = 100
) -> dict:
    """Documented wire format for a fit: floats alongside their snaps."""
    return {
        "target": None
        if fr.target_index < 0
        else monomial_names[fr.target_index],
        "coefficients": [
            {
                "monomial": monomial_names[j],
                "float": float(fr.coefficients[j]),
                "rational": str(rationalize(float(fr.coefficients[j]), max_denominator)),
            }
            for j in fr.surviving
        ],
        "train_mse": fr.train_mse,
        "cv_score": None if np.isnan(fr.cv_score) else fr.cv_score,
        "sample_complexity": fr.sample_complexity,
    }


def stability_sample_complexity(
    design,
    targets,
    surviving,
    final_rationals,
    max_denominator: int = 100,
) -> int:
    """Smallest train-prefix length whose support-restricted refit
    rationalizes to the final coefficients; m if it never stabilizes."""
    X, y = _as_matrix(design, targets)
    m = X.shape[0]
    cols = list(surviving)
    if not cols:
        return m
    sub = X[:, cols]
    target = list(final_rationals)
    for mprime in range(1, m + 1):
        coef, _, _, _ = np.linalg.lstsq(sub[:mprime], y[:mprime], rcond=None)
        snapped = [rationalize(c, max_denominator) for c in coef]
        if snapped == target and not any(r.is_zero for r in snapped):
            return mprime
    return m
