"""Partial dependence of a fitted model on one or two features."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .encoding import DesignMatrix


@dataclass(frozen=True)
class PdpGrid:
    features: tuple[str, ...]
    grid_values: np.ndarray          # (n_points, len(features))
    averaged_predictions: np.ndarray  # (n_points,)
    n_background: int

    def __len__(self) -> int:
        return self.averaged_predictions.size

    def axis(self, feature: str) -> np.ndarray:
        """Distinct grid values of one feature, in grid order."""
        col = self.grid_values[:, self.features.index(feature)]
        _, first = np.unique(col, return_index=True)
        return col[np.sort(first)]


def default_grid(values: np.ndarray, knots: Sequence[float] = (), n_points: int = 50) -> np.ndarray:
    """Evenly spaced points over the observed range plus any model knots inside it.

    0/1 columns get the grid ``[0, 1]``.
    """
    values = np.asarray(values, dtype=float)
    if np.all((values == 0) | (values == 1)):
        return np.array([0.0, 1.0])
    lo, hi = float(values.min()), float(values.max())
    pts = np.linspace(lo, hi, n_points)
    extra = [k for k in knots if lo <= k <= hi]
    return np.unique(np.concatenate([pts, extra]))


def partial_dependence(model, rows, features: Sequence[str] | str,
                       grid: Sequence | None = None, n_points: int = 50,
                       column_names: Sequence[str] | None = None) -> PdpGrid:
    """Average model predictions with the chosen features fixed to grid values.

    Args:
        model: object with ``predict(X)`` and ``column_names``; ``X`` columns
            follow ``column_names``.  ``knots_for(name)`` is used when present
            to add breakpoints to the default grid.
        rows: background data, a :class:`DesignMatrix` or an array whose
            columns are named by ``column_names``.
        features: one or two column names.
        grid: explicit grid; one sequence of values per feature, crossed.
        n_points: points per numeric feature in the default grid.

    Returns:
        PdpGrid with one averaged prediction per grid tuple.  Two-feature
        grids are in long format, first feature varying slowest.
    """
    if isinstance(features, str):
        features = (features,)
    features = tuple(features)
    if not 1 <= len(features) <= 2:
        raise ValueError("partial dependence supports one or two features")
    if len(set(features)) != len(features):
        raise ValueError("features must be distinct")

    if isinstance(rows, DesignMatrix):
        names = list(rows.column_names)
        data = rows.X
    else:
        if column_names is None:
            column_names = model.column_names
        names = list(column_names)
        data = np.asarray(rows, dtype=float)
    if data.shape[0] == 0:
        raise ValueError("empty background data")
    for f in features:
        if f not in names:
            raise KeyError(f"unknown feature {f!r}")
    missing = [c for c in model.column_names if c not in names]
    if missing:
        raise KeyError(f"background data lacks model columns {missing}")
    model_idx = [names.index(c) for c in model.column_names]
    background = data[:, model_idx].astype(float, copy=True)
    local = list(model.column_names)

    axes = []
    for i, f in enumerate(features):
        if grid is not None:
            axes.append(np.asarray(grid[i], dtype=float))
            continue
        knots = model.knots_for(f) if hasattr(model, "knots_for") else ()
        axes.append(default_grid(data[:, names.index(f)], knots, n_points))

    tuples = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, len(features))
    cols = [local.index(f) if f in local else None for f in features]
    preds = np.empty(len(tuples))
    for g, point in enumerate(tuples):
        Xg = background.copy()
        for c, v in zip(cols, point):
            if c is not None:
                Xg[:, c] = v
        preds[g] = float(np.mean(model.predict(Xg)))
    return PdpGrid(features, tuples, preds, data.shape[0])
