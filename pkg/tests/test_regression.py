import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsrforge.errors import (
    NoSparseModel,
    SearchSpaceTooLarge,
    SingularDesign,
    TooFewRows,
)
from rsrforge.rational import Rational
from rsrforge.regression import (
    FitResult,
    RegularizerSpec,
    cross_validate,
    fit,
    fit_integer_bounded,
    fit_result_to_json,
    mse,
    rationalize,
    sparsify,
    stability_sample_complexity,
)


def test_fit_exact_line():
    X = np.array([[1.0], [2.0], [3.0]])
    y = np.array([2.0, 4.0, 6.0])
    coef = fit(X, y, RegularizerSpec("none"))
    assert coef[0] == pytest.approx(2.0, abs=1e-12)


def test_ridge_closed_form():
    X = np.array([[1.0], [2.0], [3.0]])
    y = np.array([2.0, 4.0, 6.0])
    coef = fit(X, y, RegularizerSpec("ridge", 1.0))
    # (X'X + 1)^-1 X'y = 28/15
    assert coef[0] == pytest.approx(28 / 15, abs=1e-12)


def test_lasso_full_shrinkage():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = X @ np.array([1.0, -2.0, 0.5]) + 0.01 * rng.normal(size=40)
    coef = fit(X, y, RegularizerSpec("lasso", 1e6))
    assert np.all(coef == 0.0)


def test_lasso_recovers_sparse_support():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(60, 6))
    y = 2.0 * X[:, 1] - 1.0 * X[:, 4]
    coef = fit(X, y, RegularizerSpec("lasso", 1e-4))
    big = {j for j in range(6) if abs(coef[j]) > 0.1}
    assert big == {1, 4}


def test_singular_design():
    with pytest.raises(SingularDesign):
        fit(np.zeros((5, 2)), np.ones(5), RegularizerSpec("none"))


def test_cross_validate_noiseless_prefers_none():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 4))
    y = X @ np.array([1.0, 0.0, -3.0, 0.5])
    spec, result = cross_validate(X, y, folds=5, seed=0)
    assert spec.kind == "none"
    assert result.cv_score < 1e-18


def test_cross_validate_noise_prefers_shrinkage():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 8))
    y = rng.normal(size=40)  # pure noise target
    spec, _result = cross_validate(X, y, folds=5, seed=0)
    assert spec.kind in ("ridge", "lasso")
    assert spec.lam > 0


def test_cross_validate_too_few_rows():
    X = np.ones((3, 1))
    with pytest.raises(TooFewRows):
        cross_validate(X, np.ones(3), folds=5, seed=0)


def _squared_design(m=50, seed=4):
    """Columns f(x+r), f(x-r), f(x), f(r) for f = t^2; target f(x+r)."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-10, 10, size=m)
    r = rng.uniform(-10, 10, size=m)
    cols = np.stack([(x - r) ** 2, x**2, r**2], axis=1)
    y = (x + r) ** 2
    return cols, y


def test_sparsify_parallelogram():
    X, y = _squared_design()
    coef = fit(X, y, RegularizerSpec("none"))
    fr = FitResult(coefficients=coef, surviving=(0, 1, 2), train_mse=mse(X, y, coef))
    out = sparsify(X, y, fr, drop_threshold=1e-3, eps=1e-3)
    assert out.surviving == (0, 1, 2)
    assert np.allclose(out.coefficients, [-1.0, 2.0, 2.0], atol=1e-9)
    assert out.train_mse <= 1e-3


def test_sparsify_drops_noise_column():
    X, y = _squared_design()
    rng = np.random.default_rng(9)
    X = np.column_stack([X, rng.normal(size=len(y))])
    coef = fit(X, y, RegularizerSpec("none"))
    fr = FitResult(coefficients=coef, surviving=tuple(range(4)), train_mse=mse(X, y, coef))
    out = sparsify(X, y, fr)
    assert 3 not in out.surviving


def test_sparsify_is_fixed_point():
    X, y = _squared_design()
    coef = fit(X, y, RegularizerSpec("none"))
    fr = FitResult(coefficients=coef, surviving=(0, 1, 2), train_mse=mse(X, y, coef))
    once = sparsify(X, y, fr)
    twice = sparsify(X, y, once)
    assert once.surviving == twice.surviving
    assert np.allclose(once.coefficients, twice.coefficients)


def test_sparsify_eps_zero_noisy():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(30, 2))
    y = X[:, 0] + 0.1 * rng.normal(size=30)
    coef = fit(X, y, RegularizerSpec("none"))
    fr = FitResult(coefficients=coef, surviving=(0, 1), train_mse=mse(X, y, coef))
    with pytest.raises(NoSparseModel):
        sparsify(X, y, fr, eps=0.0)


def test_rationalize_examples():
    assert rationalize(0.5, 100) == Rational(1, 2)
    assert rationalize(0.3333333, 10) == Rational(1, 3)
    assert rationalize(3.14159265, 113) == Rational(355, 113)
    assert rationalize(-0.25, 100) == Rational(-1, 4)


def _brute_force_best(c: float, max_den: int) -> Rational:
    best = None
    err = None
    for q in range(1, max_den + 1):
        p = round(c * q)
        cand = abs(c - p / q)
        if err is None or cand < err - 1e-18:
            best, err = Rational(int(p), q), cand
    return best


@settings(max_examples=300, deadline=None)
@given(
    p=st.integers(-200, 200),
    q=st.integers(1, 50),
    max_den=st.integers(1, 50),
)
def test_rationalize_optimality_vs_brute_force(p, q, max_den):
    c = p / q
    got = rationalize(c, max_den)
    best = _brute_force_best(c, max_den)
    assert abs(c - float(got)) <= abs(c - float(best)) + 1e-15


def test_integer_fit_examples():
    rng = np.random.default_rng(11)
    x = rng.uniform(-3, 3, size=25)
    r = rng.uniform(-3, 3, size=25)
    # exp: target f(x+r), design {f(x)*f(r)} -> coefficient (1,) exactly
    design = (np.exp(x) * np.exp(r))[:, None]
    target = np.exp(x + r)
    out = fit_integer_bounded(design, target, var_bound=3)
    assert tuple(out.coefficients) == (1.0,)
    assert out.train_mse < 1e-15

    # BLR: design {f(x), f(r)} -> (1, 1), identity (1, -1, -1)
    design = np.stack([3 * x, 3 * r], axis=1)
    target = 3 * (x + r)
    out = fit_integer_bounded(design, target, var_bound=3)
    assert tuple(out.coefficients) == (1.0, 1.0)


def test_integer_fit_var_bound_zero():
    y = np.array([1.0, 2.0, 2.0])
    out = fit_integer_bounded(np.ones((3, 2)), y, var_bound=0)
    assert np.all(out.coefficients == 0)
    assert out.train_mse == pytest.approx(float(y @ y) / 3)


def test_integer_fit_scale_limits():
    with pytest.raises(SearchSpaceTooLarge):
        fit_integer_bounded(np.ones((4, 13)), np.ones(4), var_bound=1)
    with pytest.raises(SearchSpaceTooLarge):
        fit_integer_bounded(np.ones((4, 2)), np.ones(4), var_bound=11)


def _exhaustive_integer(X, y, B, max_active):
    m, k = X.shape
    best = None
    for vec in itertools.product(range(-B, B + 1), repeat=k):
        nnz = sum(v != 0 for v in vec)
        if nnz > max_active:
            continue
        res = y - X @ np.array(vec, dtype=float)
        cand = (float(res @ res) / m, nnz, vec)
        if best is None:
            best = cand
            continue
        tol = 1e-9 * max(1.0, abs(best[0]))
        if cand[0] < best[0] - tol:
            best = cand
        elif cand[0] <= best[0] + tol and (cand[1], cand[2]) < (best[1], best[2]):
            best = cand
    return best


def test_integer_fit_matches_exhaustive_small():
    rng = np.random.default_rng(12)
    for trial in range(25):
        k = int(rng.integers(1, 5))
        m = int(rng.integers(6, 15))
        B = int(rng.integers(1, 4))
        X = rng.normal(size=(m, k))
        true = rng.integers(-B, B + 1, size=k)
        y = X @ true.astype(float)
        if rng.random() < 0.5:
            y = rng.normal(size=m)  # noise instance
        got = fit_integer_bounded(X, y, var_bound=B)
        want = _exhaustive_integer(X, y, B, k)
        assert got.train_mse == pytest.approx(want[0], rel=1e-6, abs=1e-12)
        assert tuple(int(v) for v in got.coefficients) == want[2]


def test_stability_sample_complexity():
    rng = np.random.default_rng(13)
    x = rng.uniform(-10, 10, size=50)
    r = rng.uniform(-10, 10, size=50)
    X = np.stack([3 * x, 3 * r], axis=1)
    y = 3 * (x + r)
    rats = [Rational(1), Rational(1)]
    sc = stability_sample_complexity(X, y, (0, 1), rats)
    assert sc <= 4  # |MON| + 2 for an exact linear relation

    # appending rows never increases the stability point
    X2 = np.vstack([X, X[:10]])
    y2 = np.concatenate([y, y[:10]])
    assert stability_sample_complexity(X2, y2, (0, 1), rats) <= sc

    # pure noise never stabilizes to a fixed snap
    noise_y = rng.normal(size=50)
    final = [rationalize(float(fit(X, noise_y, RegularizerSpec("none"))[0]), 100),
             rationalize(float(fit(X, noise_y, RegularizerSpec("none"))[1]), 100)]
    sc_noise = stability_sample_complexity(X, noise_y, (0, 1), final)
    assert sc_noise >= 45


def test_lasso_duality_gap_contract():
    rng = np.random.default_rng(14)
    X = rng.normal(size=(30, 4))
    y = X @ np.array([1.0, 0.0, 0.0, -1.0]) + 0.05 * rng.normal(size=30)
    lam = 1e-2
    coef = fit(X, y, RegularizerSpec("lasso", lam))
    m = len(y)
    res = y - X @ coef
    primal = float(res @ res) / (2 * m) + lam * float(np.sum(np.abs(coef)))
    corr = np.abs(X.T @ res) / m
    scale = min(1.0, lam / max(float(corr.max()), 1e-300))
    theta = scale * res / m
    dual = float(y @ theta) - m / 2 * float(theta @ theta)
    assert primal - dual < 1e-10


def test_fit_result_json_shape():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    y = np.array([0.5, 1.0, 1.5])
    coef = fit(X, y, RegularizerSpec("none"))
    fr = FitResult(
        coefficients=coef,
        surviving=(0, 1),
        train_mse=mse(X, y, coef),
        target_index=0,
        sample_complexity=3,
    )
    doc = fit_result_to_json(fr, ["f(x)", "f(r)"], 100)
    assert doc["target"] == "f(x)"
    assert doc["coefficients"][0]["rational"] == "1/2"
    assert doc["sample_complexity"] == 3
