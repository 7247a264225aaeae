"""Synthetic databases and series with the published schema.

The generated skill scores follow a hand-made response surface (rising with
horizon up to a few hours, falling beyond) plus Gaussian noise.  They are
meant for tests, demos and timing runs, not as a stand-in for the real
database.
"""

from __future__ import annotations

import numpy as np

from .meta_db import Dataset, ObservationRecord

_HORIZONS = np.array([0.17, 1, 5, 10, 15, 30, 45, 60,
                      90, 120, 180, 240, 300, 360,
                      720, 1440, 2160, 2880, 4320])
_HORIZON_P = np.array([0.5, 4, 6, 8, 8, 9, 3, 7.5,
                       3, 8, 7, 6, 3, 6,
                       4, 11, 1, 4, 1.5])
_RES = np.array([0.02, 1, 5, 10, 15, 30, 60, 180, 360])
_RES_P = np.array([0.2, 3, 8, 8, 12, 14, 52, 2, 0.8])
_TEST = np.array([1, 7, 14, 30, 60, 90, 120, 180, 270, 365, 547, 730, 1095, 1460])
_TRAIN = np.array([0, 7, 30, 60, 90, 180, 270, 365, 547, 730, 1095, 1460, 1825, 2555, 3650, 7305])
_YEARS = np.arange(2006, 2023)

_CZ = ("A", "B", "C", "D", "E", "N")
_CZ_P = np.array([7, 20, 55, 9, 2, 7])
_CZ_EFFECT = {"A": 5.5, "B": 3.0, "C": 0.0, "D": 3.0, "E": -15.0, "N": 4.0}
_MC = ("TS", "Regression", "NWP", "ML", "ImageBased", "Ensemble", "Hybrid", "EnsembleHybrid")
_MC_P = np.array([14, 8, 2, 35, 12, 10, 15, 4])
_MC_EFFECT = {"TS": 0.0, "Regression": -6.0, "NWP": -14.0, "ML": -1.5, "ImageBased": 4.0,
              "Ensemble": 2.0, "Hybrid": 3.0, "EnsembleHybrid": 13.0}
_REF = ("Persistence", "SP", "CP")
_REF_P = np.array([45, 45, 10])


def _choice(rng, values, weights, size):
    w = np.asarray(weights, dtype=float)
    return rng.choice(values, size=size, p=w / w.sum())


def skill_surface(horizon, res_min, test_len, train_len, year, cz, mc, ref, ftype,
                  hist, mete, nwp, st) -> np.ndarray:
    """Noise-free skill score of the synthetic generator (vectorized)."""
    h = np.asarray(horizon, dtype=float)
    ss = (-12.0
          + 0.30 * np.minimum(h, 75.0)
          + 0.04 * np.clip(h - 75.0, 0.0, 270.0)
          - 0.008 * np.maximum(h - 345.0, 0.0)
          + 0.02 * (np.asarray(res_min) - 60.0)
          - 0.008 * np.asarray(test_len)
          + 0.002 * np.minimum(train_len, 2000.0)
          + 1.5 * (np.asarray(year) - 2018.0)
          + 6.0 * hist + 4.0 * mete + 3.0 * st
          + np.where(h > 360, 8.0, -5.0) * nwp)
    ss = ss + np.array([_CZ_EFFECT[c] for c in cz])
    ss = ss + np.array([_MC_EFFECT[m] for m in mc])
    ref = np.asarray(ref)
    ss = ss + np.where(ref == "Persistence", 15.0 + 0.02 * np.minimum(h, 345.0), 0.0)
    ss = ss + np.where(ref == "SP", 10.0, 0.0)
    ss = ss + np.where(np.asarray(ftype) == "Sources", -4.0, 0.0)
    return ss


def make_database(n: int = 4687, seed: int = 0, noise_sd: float = 15.0) -> Dataset:
    """Random Dataset of ``n`` records drawn from the synthetic surface.

    Polar climate (E) never occurs with intra-day horizons, so encoding the
    intra-day class drops that column.
    """
    rng = np.random.default_rng(seed)
    horizon = _choice(rng, _HORIZONS, _HORIZON_P, n)
    res = _choice(rng, _RES, _RES_P, n)
    test = _choice(rng, _TEST, np.ones(_TEST.size), n).astype(float)
    train = _choice(rng, _TRAIN, np.ones(_TRAIN.size), n).astype(float)
    year = _choice(rng, _YEARS, np.linspace(1, 6, _YEARS.size) ** 2, n).astype(int)
    cz = _choice(rng, np.array(_CZ), _CZ_P, n).astype(object)
    intra_day = (horizon > 60) & (horizon <= 360)
    cz[intra_day & (cz == "E")] = "C"
    mc = _choice(rng, np.array(_MC), _MC_P, n).astype(object)
    ref = _choice(rng, np.array(_REF), _REF_P, n).astype(object)
    ftype = np.where(rng.random(n) < 0.5, "PV", "Sources").astype(object)
    hist = (rng.random(n) < 0.91).astype(int)
    mete = (rng.random(n) < 0.53).astype(int)
    nwp = (rng.random(n) < np.where(horizon > 360, 0.5, 0.1)).astype(int)
    st = (rng.random(n) < 0.23).astype(int)

    ss = skill_surface(horizon, res, test, train, year, cz, mc, ref, ftype, hist, mete, nwp, st)
    ss = ss + rng.normal(0.0, noise_sd, n)
    ss = np.round(np.clip(ss, -94.61, 96.10), 2)

    records = tuple(
        ObservationRecord(float(ss[i]), float(horizon[i]), float(res[i]), float(test[i]),
                          float(train[i]), int(year[i]), str(cz[i]), str(mc[i]), str(ref[i]),
                          str(ftype[i]), int(hist[i]), int(mete[i]), int(nwp[i]), int(st[i]))
        for i in range(n))
    return Dataset(records, f"<synthetic n={n} seed={seed}>")


def make_series(n: int = 288, seed: int = 0, step_minutes: float = 5.0,
                phi: float = 0.9, clear_peak: float = 900.0):
    """Irradiance-like series: daylight clear-sky curve times AR(1) clearness.

    Returns ``(values, clear_sky)``; the clear-sky curve is strictly
    positive so every index is usable by smart persistence.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    clear = clear_peak * (0.15 + 0.85 * np.sin(np.pi * (t + 0.5) / n) ** 1.5)
    k = np.empty(n)
    k[0] = 0.7
    for i in range(1, n):
        k[i] = 0.7 + phi * (k[i - 1] - 0.7) + rng.normal(0.0, 0.08)
    k = np.clip(k, 0.05, 1.2)
    return k * clear, clear
