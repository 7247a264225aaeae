"""Numeric design matrices with baseline-referenced dummy coding."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .meta_db import Dataset

INTERCEPT = "Constant"

# (family, record field, baseline, [(level, column name), ...]) in regression-table order
CATEGORY_COLUMNS = {
    "climate_zone": ("C", [("A", "CZA"), ("B", "CZB"), ("D", "CZD"),
                           ("E", "CZE"), ("N", "CZN")]),
    "model_class": ("TS", [("Ensemble", "ModClassEns"),
                           ("EnsembleHybrid", "ModClassEns_Hyb"),
                           ("Hybrid", "ModClassHybrid"),
                           ("ImageBased", "ModClassImageBased"),
                           ("ML", "ModClassML"),
                           ("NWP", "ModClassNWP"),
                           ("Regression", "ModClassReg")]),
    "reference_model": ("CP", [("Persistence", "ReferencePersistence"),
                               ("SP", "ReferenceSP")]),
    "forecast_type": ("PV", [("Sources", "TypeSources")]),
}

NUMERIC_COLUMNS = {
    "Horizon": "horizon_min",
    "ResMin": "res_min",
    "TestLength": "test_length_days",
    "TrainLength": "train_length_days",
    "Year": "year",
}

DUMMY_COLUMNS = {
    "InputHist": "input_hist",
    "InputMete": "input_mete",
    "InputNWP": "input_nwp",
    "InputST": "input_st",
}

# slope column order (alphabetical, as the regression table lists them)
COLUMN_ORDER = (
    ["CZA", "CZB", "CZD", "CZE", "CZN", "Horizon",
     "InputHist", "InputMete", "InputNWP", "InputST"]
    + [c for _, c in CATEGORY_COLUMNS["model_class"][1]]
    + ["ReferencePersistence", "ReferenceSP", "ResMin", "TestLength",
       "TrainLength", "TypeSources", "Year"]
)

COLLINEAR_RTOL = 1e-8


@dataclass(frozen=True)
class DesignMatrix:
    column_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    baselines: dict = field(default_factory=dict)
    dropped_columns: tuple[tuple[str, str], ...] = ()

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    def index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise KeyError(f"unknown column {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.index(name)]

    def has_intercept(self) -> bool:
        return INTERCEPT in self.column_names

    def is_binary(self, name: str) -> bool:
        col = self.column(name)
        return bool(np.all((col == 0) | (col == 1)))

    def take_rows(self, rows) -> "DesignMatrix":
        return replace(self, X=self.X[rows], y=self.y[rows])

    def to_csv(self, precision: int = 17) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("SS",) + self.column_names)
        for yi, row in zip(self.y, self.X):
            writer.writerow([f"{v:.{precision}g}" for v in (yi, *row)])
        return buf.getvalue()


def build_design_matrix(dataset: Dataset, include_intercept: bool = True,
                        drop_degenerate: bool = True) -> DesignMatrix:
    """Encode a Dataset for regression.

    Numeric factors pass through in raw units; each categorical factor
    expands to one 0/1 column per non-baseline level (baselines: climate
    zone C, model class TS, reference CP, forecast type PV).
    """
    if len(dataset) == 0:
        raise ValueError("cannot encode an empty dataset")
    recs = dataset.records
    cols: dict[str, np.ndarray] = {}
    for name, fld in NUMERIC_COLUMNS.items():
        cols[name] = np.array([getattr(r, fld) for r in recs], dtype=float)
    for name, fld in DUMMY_COLUMNS.items():
        cols[name] = np.array([getattr(r, fld) for r in recs], dtype=float)
    baselines = {}
    for fld, (base, levels) in CATEGORY_COLUMNS.items():
        baselines[fld] = base
        values = np.array([getattr(r, fld) for r in recs], dtype=object)
        for level, name in levels:
            cols[name] = (values == level).astype(float)

    names = [INTERCEPT] if include_intercept else []
    names += COLUMN_ORDER
    X = np.column_stack([np.ones(len(recs)) if n == INTERCEPT else cols[n] for n in names])
    y = np.array([r.skill_score_pct for r in recs], dtype=float)
    dm = DesignMatrix(tuple(names), X, y, baselines)
    return drop_degenerate_columns(dm) if drop_degenerate else dm


def drop_degenerate_columns(matrix: DesignMatrix) -> DesignMatrix:
    """Remove zero-variance columns and columns collinear with earlier ones.

    Columns are scanned left to right.  A column is collinear when its
    residual after projecting on the retained columns has norm below
    ``1e-8`` times its own norm.  The intercept is never treated as
    zero-variance.
    """
    X = matrix.X
    n, p = X.shape
    keep: list[int] = []
    dropped = list(matrix.dropped_columns)
    basis = np.empty((n, 0))
    for j in range(p):
        name = matrix.column_names[j]
        col = X[:, j]
        if name != INTERCEPT and (n == 0 or np.ptp(col) == 0):
            dropped.append((name, "zero variance"))
            continue
        norm = np.linalg.norm(col)
        if norm == 0:
            dropped.append((name, "zero variance"))
            continue
        resid = col - basis @ (basis.T @ col)
        # second pass keeps Gram-Schmidt orthogonal to working precision
        resid -= basis @ (basis.T @ resid)
        rnorm = np.linalg.norm(resid)
        if rnorm < COLLINEAR_RTOL * norm:
            dropped.append((name, "collinear"))
            continue
        basis = np.column_stack([basis, resid / rnorm])
        keep.append(j)
    if not keep:
        raise ValueError("all columns are degenerate")
    return replace(matrix,
                   column_names=tuple(matrix.column_names[j] for j in keep),
                   X=X[:, keep].copy(),
                   dropped_columns=tuple(dropped))
