"""Ordinary least squares with classical inference, per horizon class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .encoding import INTERCEPT, DesignMatrix, build_design_matrix, drop_degenerate_columns
from .meta_db import HORIZON_CLASSES, Dataset, partition_by_horizon


class EmptyPartitionError(ValueError):
    pass


@dataclass(frozen=True)
class OlsFit:
    column_names: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r_squared: float
    adj_r_squared: float
    n: int
    residuals: np.ndarray
    dropped_columns: tuple[tuple[str, str], ...] = ()

    @property
    def df_resid(self) -> int:
        return self.n - len(self.column_names)

    @property
    def rss(self) -> float:
        return float(self.residuals @ self.residuals)

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.column_names.index(name)])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Predict from rows whose columns follow ``column_names``."""
        return np.asarray(X, dtype=float) @ self.coefficients


def ols_fit(matrix: DesignMatrix) -> OlsFit:
    """Least squares via Householder QR with homoskedastic standard errors.

    Degenerate columns are removed first, so degrees of freedom use the
    retained column count.
    """
    dm = drop_degenerate_columns(matrix)
    X, y = dm.X, dm.y
    n, p = X.shape
    if n <= p:
        raise ValueError(f"need more rows than columns (n={n}, p={p})")

    Q, R = linalg.qr(X, mode="economic")
    beta = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    df = n - p
    sigma2 = rss / df
    Rinv = linalg.solve_triangular(R, np.eye(p))
    se = np.sqrt(sigma2 * np.sum(Rinv**2, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    pvals = 2.0 * stats.t.sf(np.abs(t), df)

    if INTERCEPT in dm.column_names:
        tss = float(np.sum((y - y.mean()) ** 2))
        dof_total = n - 1
    else:
        tss = float(y @ y)
        dof_total = n
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    adj = 1.0 - (1.0 - r2) * dof_total / df
    return OlsFit(
        column_names=dm.column_names,
        coefficients=beta,
        standard_errors=se,
        t_stats=t,
        p_values=pvals,
        r_squared=r2,
        adj_r_squared=adj,
        n=n,
        residuals=resid,
        dropped_columns=dm.dropped_columns,
    )


def run_horizon_regressions(dataset: Dataset, strict: bool = True) -> dict[str, OlsFit]:
    """Fit the regression separately for intra-hour, intra-day and day-ahead.

    Each class is encoded on its own, so the degenerate columns dropped can
    differ between classes.  With ``strict=False`` empty classes are left
    out of the result instead of raising.
    """
    fits = {}
    for cls, part in partition_by_horizon(dataset).items():
        if len(part) == 0:
            if strict:
                raise EmptyPartitionError(f"horizon class {cls!r} has no rows")
            continue
        fits[cls] = ols_fit(build_design_matrix(part))
    return fits


__all__ = ["OlsFit", "ols_fit", "run_horizon_regressions", "EmptyPartitionError",
           "HORIZON_CLASSES"]
