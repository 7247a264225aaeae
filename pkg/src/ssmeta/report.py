"""Text tables and artifact files for fits, summaries and PDP grids."""

from __future__ import annotations

import io
import os
import tempfile
from contextlib import contextmanager
from typing import Mapping

import numpy as np

from .encoding import COLUMN_ORDER, INTERCEPT
from .linreg import OlsFit
from .pdp import PdpGrid

COLUMN_TITLES = {"intra_hour": "Intra-hour", "intra_day": "Intra-day", "day_ahead": "Day-ahead"}


def stars(p: float) -> str:
    if not np.isfinite(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def coefficient_cell(fit: OlsFit, name: str, decimals: int = 3) -> str:
    """``0.334*** (0.043)``, or an empty string if the column is absent."""
    if name not in fit.column_names:
        return ""
    i = fit.column_names.index(name)
    return (f"{fit.coefficients[i]:.{decimals}f}{stars(fit.p_values[i])} "
            f"({fit.standard_errors[i]:.{decimals}f})")


def _row_names(fits) -> list[str]:
    names = [c for c in COLUMN_ORDER]
    for fit in fits:
        for c in fit.column_names:
            if c not in names and c != INTERCEPT:
                names.append(c)
    return names + [INTERCEPT]


def format_regression_table(fit: OlsFit | Mapping[str, OlsFit], decimals: int = 3) -> str:
    """Regression table: one row per regressor, ``coef*** (SE)`` per column.

    Stars mark p < 0.1 / 0.05 / 0.01.  Regressors dropped from a fit (for
    example a climate zone absent from one horizon class) render as blank
    cells.  Accepts a single fit or a mapping of column title to fit.
    """
    fits = {"(1)": fit} if isinstance(fit, OlsFit) else dict(fit)
    titles = [COLUMN_TITLES.get(k, k) for k in fits]
    rows = [["", *titles]]
    for name in _row_names(fits.values()):
        rows.append([name, *(coefficient_cell(f, name, decimals) for f in fits.values())])
    rows.append(["Observations", *(f"{f.n:,}" for f in fits.values())])
    rows.append(["R2", *(f"{f.r_squared:.{decimals}f}" for f in fits.values())])
    rows.append(["Adjusted R2", *(f"{f.adj_r_squared:.{decimals}f}" for f in fits.values())])
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.append("Note: *: p < 0.1, **: p < 0.05, ***: p < 0.01")
    return "\n".join(lines) + "\n"


@contextmanager
def atomic_write(path: str | os.PathLike, mode: str = "w"):
    """Write to a temporary file next to ``path`` and rename on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, **({} if "b" in mode else {"encoding": "utf-8", "newline": ""})) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def pdp_to_csv(grid: PdpGrid, precision: int = 10) -> str:
    buf = io.StringIO()
    buf.write(",".join([*grid.features, "pd"]) + "\n")
    for point, value in zip(grid.grid_values, grid.averaged_predictions):
        buf.write(",".join(f"{v:.{precision}g}" for v in (*point, value)) + "\n")
    return buf.getvalue()


def _render_svg(grid: PdpGrid) -> bytes:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "ssmeta", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        if len(grid.features) == 1:
            ax.plot(grid.grid_values[:, 0], grid.averaged_predictions, color="k")
            ax.set_xlabel(grid.features[0])
            ax.set_ylabel("partial dependence")
        else:
            xs = grid.axis(grid.features[0])
            ys = grid.axis(grid.features[1])
            z = grid.averaged_predictions.reshape(xs.size, ys.size)
            mesh = ax.pcolormesh(ys, xs, z, shading="nearest")
            fig.colorbar(mesh, ax=ax, label="partial dependence")
            ax.set_xlabel(grid.features[1])
            ax.set_ylabel(grid.features[0])
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def emit_pdp_artifacts(grid: PdpGrid, path: str | os.PathLike, graphic: bool = True) -> list[str]:
    """Write the grid as CSV at ``path`` and an SVG plot next to it.

    Returns the paths written.  Nothing is left behind at ``path`` if
    writing fails.
    """
    path = os.fspath(path)
    with atomic_write(path) as fh:
        fh.write(pdp_to_csv(grid))
    written = [path]
    if graphic:
        svg_path = os.path.splitext(path)[0] + ".svg"
        with atomic_write(svg_path, "wb") as fh:
            fh.write(_render_svg(grid))
        written.append(svg_path)
    return written
