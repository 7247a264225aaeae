import numpy as np
import pytest
import statsmodels.api as sm
from hypothesis import given, settings
from hypothesis import strategies as st

from ssmeta.encoding import INTERCEPT, DesignMatrix, build_design_matrix
from ssmeta.linreg import EmptyPartitionError, ols_fit, run_horizon_regressions
from ssmeta.meta_db import Dataset, partition_by_horizon


def test_matches_statsmodels(synthetic_db):
    for part in partition_by_horizon(synthetic_db).values():
        dm = build_design_matrix(part)
        fit = ols_fit(dm)
        ref = sm.OLS(dm.y, dm.X).fit()
        np.testing.assert_allclose(fit.coefficients, ref.params, rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(fit.standard_errors, ref.bse, rtol=1e-8)
        np.testing.assert_allclose(fit.t_stats, ref.tvalues, rtol=1e-8)
        np.testing.assert_allclose(fit.p_values, ref.pvalues, rtol=1e-6, atol=1e-300)
        assert fit.r_squared == pytest.approx(ref.rsquared, rel=1e-10)
        assert fit.adj_r_squared == pytest.approx(ref.rsquared_adj, rel=1e-10)
        assert fit.df_resid == ref.df_resid


def test_exact_recovery_noise_free():
    rng = np.random.default_rng(1)
    X = np.column_stack([np.ones(40), rng.normal(size=(40, 3))])
    beta = np.array([2.0, -1.0, 0.5, 3.0])
    fit = ols_fit(DesignMatrix((INTERCEPT, "a", "b", "c"), X, X @ beta))
    np.testing.assert_allclose(fit.coefficients, beta, atol=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    np.testing.assert_allclose(fit.predict(X), X @ beta, atol=1e-12)


def test_dropped_column_reduces_dof():
    rng = np.random.default_rng(2)
    x = rng.normal(size=30)
    y = 1 + x + rng.normal(size=30)
    X = np.column_stack([np.ones(30), x, 3 * x, np.zeros(30)])
    fit = ols_fit(DesignMatrix((INTERCEPT, "x", "x3", "z"), X, y))
    assert fit.column_names == (INTERCEPT, "x")
    assert fit.df_resid == 28
    assert {d[0] for d in fit.dropped_columns} == {"x3", "z"}


def test_too_few_rows():
    X = np.column_stack([np.ones(3), [1.0, 2, 4], [0.0, 1, 5]])
    with pytest.raises(ValueError, match="more rows"):
        ols_fit(DesignMatrix((INTERCEPT, "a", "b"), X, np.array([1.0, 2, 3])))


def test_horizon_regressions_cover_three_classes(synthetic_db):
    fits = run_horizon_regressions(synthetic_db)
    assert list(fits) == ["intra_hour", "intra_day", "day_ahead"]
    sizes = {k: len(v) for k, v in partition_by_horizon(synthetic_db).items()}
    assert {k: f.n for k, f in fits.items()} == sizes
    assert "CZE" not in fits["intra_day"].column_names


def test_empty_partition(synthetic_db):
    intra_hour = partition_by_horizon(synthetic_db)["intra_hour"]
    with pytest.raises(EmptyPartitionError):
        run_horizon_regressions(intra_hour)
    fits = run_horizon_regressions(intra_hour, strict=False)
    assert list(fits) == ["intra_hour"]


@settings(max_examples=40, deadline=None)
@given(st.integers(12, 80), st.integers(0, 2**32 - 1))
def test_residuals_orthogonal_to_design(n, seed):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 3)) * [1, 100, 0.01]])
    y = rng.normal(size=n) * 10
    fit = ols_fit(DesignMatrix((INTERCEPT, "a", "b", "c"), X, y))
    Xs = X / np.linalg.norm(X, axis=0)
    assert np.max(np.abs(Xs.T @ fit.residuals)) <= 1e-9 * np.linalg.norm(y)
    assert 0.0 <= fit.r_squared <= 1.0
    assert np.all(fit.p_values >= 0) and np.all(fit.p_values <= 1)
