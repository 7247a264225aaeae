"""RMSE skill scores of solar forecasts against standard reference forecasts.

References: persistence ``x[i-h]``, smart persistence
``x[i-h] * ics[i] / ics[i-h]``, climatology (the sample mean) and the convex
combination ``alpha * SP + (1 - alpha) * mean``.

Forecast vectors are aligned with the series; indices without enough history
(and, for smart persistence, indices touching a zero clear-sky value) hold
NaN and are left out of scoring.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

REFERENCES = ("Persistence", "SP", "CP", "Climatology")
ALPHA_EDGE = 1e-6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SolarSeries:
    """Uniformly sampled power or irradiance values.

    ``warmup`` holds the values just before ``values[0]`` (oldest first) and
    lets lagged references forecast the first points; ``warmup_clear_sky``
    is its clear-sky counterpart.
    """

    values: np.ndarray
    step_minutes: float = 1.0
    clear_sky: np.ndarray | None = None
    warmup: np.ndarray | None = None
    warmup_clear_sky: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if self.step_minutes <= 0:
            raise ValueError("step_minutes must be > 0")
        for name in ("clear_sky", "warmup", "warmup_clear_sky"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=float))
        if self.clear_sky is not None:
            if self.clear_sky.shape != self.values.shape:
                raise ValueError("clear_sky must align with values")
            if np.any(self.clear_sky < 0):
                raise ValueError("clear-sky values must be non-negative")
        if self.warmup_clear_sky is not None:
            if self.warmup is None or self.warmup_clear_sky.shape != self.warmup.shape:
                raise ValueError("warmup_clear_sky must align with warmup")
            if np.any(self.warmup_clear_sky < 0):
                raise ValueError("clear-sky values must be non-negative")

    def __len__(self) -> int:
        return self.values.size

    def _lagged(self, values, warmup, h: int) -> np.ndarray:
        if h < 1:
            raise ValueError("h must be >= 1")
        n = values.size
        w = np.empty(0) if warmup is None else warmup[-h:] if warmup.size >= h else warmup
        if w.size == 0 and n <= h:
            raise ValueError(f"series of length {n} too short for h={h} without warmup")
        full = np.concatenate([w, values])
        out = np.full(n, np.nan)
        offset = w.size
        start = max(0, h - offset)
        out[start:] = full[offset + start - h:offset + n - h]
        return out


@dataclass(frozen=True)
class SkillScoreResult:
    rmse_forecast: float
    rmse_reference: float
    ss_pct: float
    reference_kind: str
    horizon_steps: int
    alpha: float | None = None
    n_scored: int = 0
    n_excluded: int = 0

    def report(self, precision: int = 4) -> str:
        def fmt(v):
            return "NA" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.{precision}g}"
        lines = [
            f"reference: {self.reference_kind}",
            f"horizon_steps: {self.horizon_steps}",
            f"alpha: {fmt(self.alpha)}",
            f"rmse_forecast: {fmt(self.rmse_forecast)}",
            f"rmse_reference: {fmt(self.rmse_reference)}",
            f"skill_score_pct: {fmt(self.ss_pct)}",
            f"n_scored: {self.n_scored}",
            f"n_excluded: {self.n_excluded}",
        ]
        return "\n".join(lines) + "\n"


def rmse(actual: Sequence[float], forecast: Sequence[float]) -> float:
    a = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if a.shape != f.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {f.shape}")
    if a.size == 0:
        raise ValueError("empty input")
    return float(np.sqrt(np.mean((a - f) ** 2)))


def persistence_forecast(series: SolarSeries, h: int = 1) -> np.ndarray:
    """``y[i] = x[i-h]``; NaN where no lagged value exists."""
    return series._lagged(series.values, series.warmup, h)


def smart_persistence_forecast(series: SolarSeries, h: int = 1) -> np.ndarray:
    """``y[i] = x[i-h] * ics[i] / ics[i-h]``: persistence of the clearness index.

    Indices where either clear-sky value is zero (night) are NaN.
    """
    if series.clear_sky is None:
        raise ValueError("smart persistence needs a clear-sky series")
    if series.warmup is not None and series.warmup_clear_sky is None:
        ics_warm = None
        lag_x = series._lagged(series.values, None, h)
    else:
        ics_warm = series.warmup_clear_sky
        lag_x = series._lagged(series.values, series.warmup, h)
    lag_ics = series._lagged(series.clear_sky, ics_warm, h)
    ics = series.clear_sky
    out = np.full(ics.size, np.nan)
    ok = np.isfinite(lag_x) & (lag_ics > 0) & (ics > 0)
    out[ok] = lag_x[ok] * (ics[ok] / lag_ics[ok])
    return out


def climatology_forecast(series: SolarSeries) -> np.ndarray:
    if len(series) == 0:
        raise ValueError("empty series")
    return np.full(len(series), float(np.mean(series.values)))


def cp_forecast(series: SolarSeries, h: int, alpha: float, strict: bool = True) -> np.ndarray:
    """``alpha * SP + (1 - alpha) * mean``.

    ``strict`` enforces ``0 < alpha < 1``; without it the endpoints are
    accepted (both limits are useful identities to test against).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if strict and not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    sp = smart_persistence_forecast(series, h)
    return alpha * sp + (1.0 - alpha) * float(np.mean(series.values))


def golden_section(fun, lo: float, hi: float, tol: float = 1e-6) -> float:
    """Minimizer of a unimodal function on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return (a + b) / 2.0


def optimize_alpha(train: SolarSeries, h: int = 1, tol: float = 1e-6) -> float:
    """Mixing weight minimizing the training RMSE of the convex combination.

    The squared error is quadratic in alpha, so golden-section search on
    [0, 1] finds the optimum; the result is clamped to
    ``[1e-6, 1 - 1e-6]``.
    """
    sp = smart_persistence_forecast(train, h)
    ok = np.isfinite(sp)
    if not ok.any():
        raise ValueError("no index available for smart persistence")
    x = train.values[ok]
    s = sp[ok]
    mean = float(np.mean(train.values))

    def loss(a):
        return float(np.mean((x - (a * s + (1.0 - a) * mean)) ** 2))

    a = golden_section(loss, 0.0, 1.0, tol)
    return min(max(a, ALPHA_EDGE), 1.0 - ALPHA_EDGE)


def skill_score(a_f: float, a_r: float) -> float:
    """``100 * (1 - a_f / a_r)``, percent."""
    if a_f < 0:
        raise ValueError("forecast error must be >= 0")
    if a_r <= 0:
        raise ZeroDivisionError("reference error is zero: skill score undefined")
    return 100.0 * (1.0 - a_f / a_r)


def reference_forecast(series: SolarSeries, kind: str, h: int = 1,
                       alpha: float | None = None) -> tuple[np.ndarray, float | None]:
    kind = normalize_reference(kind)
    if kind == "Persistence":
        return persistence_forecast(series, h), None
    if kind == "SP":
        return smart_persistence_forecast(series, h), None
    if kind == "Climatology":
        return climatology_forecast(series), None
    if alpha is None:
        alpha = optimize_alpha(series, h)
    return cp_forecast(series, h, alpha), alpha


def normalize_reference(kind: str) -> str:
    table = {"persistence": "Persistence", "p": "Persistence", "sp": "SP",
             "smartpersistence": "SP", "cp": "CP", "climatology": "Climatology",
             "clim": "Climatology"}
    key = "".join(ch for ch in kind.lower() if ch.isalnum())
    try:
        return table[key]
    except KeyError:
        raise ValueError(f"unknown reference {kind!r}") from None


def score_forecast(series: SolarSeries, forecast: Sequence[float], reference: str,
                   h: int = 1, alpha: float | None = None,
                   train: SolarSeries | None = None) -> SkillScoreResult:
    """Skill score of ``forecast`` against one reference on the same indices.

    Only indices where both the forecast and the reference are defined are
    scored.  For the CP reference, ``alpha`` defaults to the value that is
    optimal on ``train`` (or on ``series`` itself when no training series
    is given).
    """
    forecast = np.asarray(forecast, dtype=float)
    if forecast.shape != series.values.shape:
        raise ValueError("forecast must align with the series")
    kind = normalize_reference(reference)
    if kind == "CP" and alpha is None:
        alpha = optimize_alpha(train if train is not None else series, h)
    ref, alpha = reference_forecast(series, kind, h, alpha)
    ok = np.isfinite(ref) & np.isfinite(forecast)
    if not ok.any():
        raise ValueError("no index where both forecast and reference are defined")
    a_f = rmse(series.values[ok], forecast[ok])
    a_r = rmse(series.values[ok], ref[ok])
    ss = skill_score(a_f, a_r) if a_r > 0 else math.nan
    return SkillScoreResult(a_f, a_r, ss, kind, h, alpha, int(ok.sum()), int((~ok).sum()))


def read_series(path: str | os.PathLike, step_minutes: float | None = None,
                delimiter: str = ",") -> tuple[SolarSeries, np.ndarray | None]:
    """Read ``timestamp, value[, clear_sky][, forecast]`` delimited text.

    Columns are matched by header name (``value``, ``clear_sky``,
    ``forecast``; the first column is the timestamp).  Returns the series
    and the forecast column if present.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = [h.strip().lower() for h in next(reader)]
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if len(header) < 2:
        raise ValueError(f"{path}: need at least timestamp and value columns")

    def col(name, fallback=None):
        if name in header:
            return header.index(name)
        return fallback

    vi = col("value", 1)
    ci = col("clear_sky", 2 if len(header) >= 3 and "forecast" != header[2] else None)
    fi = col("forecast")
    try:
        values = np.array([float(r[vi]) for r in rows])
        ics = np.array([float(r[ci]) for r in rows]) if ci is not None else None
        fc = np.array([float(r[fi]) for r in rows]) if fi is not None else None
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: bad numeric value ({exc})") from None
    if step_minutes is None:
        step_minutes = _infer_step([r[0] for r in rows])
    return SolarSeries(values, step_minutes, ics), fc


def _infer_step(stamps: list[str]) -> float:
    """Step in minutes from ISO timestamps; 1.0 when they do not parse."""
    from datetime import datetime
    try:
        t = [datetime.fromisoformat(s.strip()) for s in stamps[:2]]
    except ValueError:
        return 1.0
    if len(t) < 2:
        return 1.0
    step = (t[1] - t[0]).total_seconds() / 60.0
    return step if step > 0 else 1.0
