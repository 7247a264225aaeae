"""Loading, validation and description of the skill-score meta database.

Each row of the database is one reported forecast result: the skill score
(percent, RMSE based) plus the ten explanatory factors that describe the
forecast setup.  Rows are parsed into immutable :class:`ObservationRecord`
objects; hard violations reject the row, soft ones only warn.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import tempfile
import warnings
from dataclasses import dataclass, fields
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

CLIMATE_ZONES = ("A", "B", "C", "D", "E", "N")
MODEL_CLASSES = ("TS", "Regression", "NWP", "ML", "ImageBased",
                 "Ensemble", "Hybrid", "EnsembleHybrid")
REFERENCE_MODELS = ("Persistence", "SP", "CP")
FORECAST_TYPES = ("PV", "Sources")

HORIZON_CLASSES = ("intra_hour", "intra_day", "day_ahead")

# record field -> default header in the delimited file
DEFAULT_COLUMNS = {
    "skill_score_pct": "SS",
    "horizon_min": "Horizon",
    "res_min": "ResMin",
    "test_length_days": "TestLength",
    "train_length_days": "TrainLength",
    "year": "Year",
    "climate_zone": "CZ",
    "model_class": "ModClass",
    "reference_model": "Reference",
    "forecast_type": "Type",
    "input_hist": "InputHist",
    "input_mete": "InputMete",
    "input_nwp": "InputNWP",
    "input_st": "InputST",
}

NUMERIC_FIELDS = ("skill_score_pct", "horizon_min", "res_min",
                  "test_length_days", "train_length_days", "year")
DUMMY_FIELDS = ("input_hist", "input_mete", "input_nwp", "input_st")
CATEGORICAL_FIELDS = ("climate_zone", "model_class", "reference_model",
                      "forecast_type")

# observed ranges of the published database; outside -> warning only
SOFT_RANGES = {
    "res_min": (0.02, 360.0),
    "year": (2006, 2022),
    "horizon_min": (0.17, 4320.0),
    "test_length_days": (1.0, 1460.0),
    "train_length_days": (0.0, 7305.0),
    "skill_score_pct": (-94.61, 96.10),
}


def _norm(label: str) -> str:
    return "".join(ch for ch in label.lower() if ch.isalnum())


_ALIASES = {
    "climate_zone": {
        **{z.lower(): z for z in CLIMATE_ZONES},
        **{"cz" + z.lower(): z for z in CLIMATE_ZONES},
        "na": "N", "czna": "N", "none": "N",
    },
    "model_class": {
        "ts": "TS", "timeseries": "TS",
        "reg": "Regression", "regression": "Regression",
        "nwp": "NWP",
        "ml": "ML", "machinelearning": "ML",
        "imagebased": "ImageBased", "image": "ImageBased",
        "ens": "Ensemble", "ensemble": "Ensemble",
        "hybrid": "Hybrid", "hyb": "Hybrid",
        "enshyb": "EnsembleHybrid", "ensemblehybrid": "EnsembleHybrid",
    },
    "reference_model": {
        "persistence": "Persistence", "p": "Persistence",
        "sp": "SP", "smartpersistence": "SP",
        "cp": "CP",
    },
    "forecast_type": {
        "pv": "PV", "sources": "Sources", "source": "Sources",
        "resources": "Sources", "resource": "Sources",
    },
}

# header-style variable names accepted by summarize()
_VARIABLE_NAMES = {_norm(v): k for k, v in DEFAULT_COLUMNS.items()}
_VARIABLE_NAMES.update({_norm(k): k for k in DEFAULT_COLUMNS})


class DatabaseError(ValueError):
    """Raised when a database file cannot be turned into a Dataset."""


class RangeWarning(UserWarning):
    """A value lies outside the range observed in the published database."""


@dataclass(frozen=True)
class ObservationRecord:
    """One extracted study result: skill score plus its ten factors."""

    skill_score_pct: float
    horizon_min: float
    res_min: float
    test_length_days: float
    train_length_days: float
    year: int
    climate_zone: str
    model_class: str
    reference_model: str
    forecast_type: str
    input_hist: int
    input_mete: int
    input_nwp: int
    input_st: int


@dataclass(frozen=True)
class Dataset:
    records: tuple[ObservationRecord, ...]
    source_path: str = ""
    rejected: tuple[str, ...] = ()

    @property
    def row_count(self) -> int:
        return len(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        """Return one field as an array (float for numerics, object otherwise)."""
        key = resolve_variable(name)
        values = [getattr(r, key) for r in self.records]
        if key in CATEGORICAL_FIELDS:
            return np.array(values, dtype=object)
        return np.asarray(values, dtype=float)

    def subset(self, mask: Sequence[bool]) -> "Dataset":
        kept = tuple(r for r, keep in zip(self.records, mask) if keep)
        return Dataset(kept, self.source_path)


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    sd: float
    median: float
    trimmed_mean: float
    mad: float
    min: float
    max: float
    range: float
    skew: float
    kurtosis: float
    se: float

    def as_row(self, name: str, precision: int = 2) -> str:
        cells = [name, str(self.n)]
        cells += [f"{getattr(self, f.name):.{precision}f}"
                  for f in fields(self) if f.name != "n"]
        return "\t".join(cells)


SUMMARY_HEADER = "\t".join(
    ["Variable", "N", "Mean", "SD", "Median", "Trim", "MAD", "Min", "Max",
     "Range", "Skew", "Kurtosis", "SE"])


def resolve_variable(name: str) -> str:
    """Map a database header or a record field name to the field name."""
    try:
        return _VARIABLE_NAMES[_norm(name)]
    except KeyError:
        raise KeyError(f"unknown column {name!r}") from None


def _parse_level(fld: str, raw: str) -> str:
    level = _ALIASES[fld].get(_norm(raw))
    if level is None:
        raise ValueError(f"unknown level {raw!r}")
    return level


def _parse_dummy(raw: str) -> int:
    value = float(raw)
    if value not in (0.0, 1.0):
        raise ValueError(f"dummy value {raw!r} not in {{0, 1}}")
    return int(value)


def _parse_row(row: Mapping[str, str], headers: Mapping[str, str]) -> tuple[dict, list[str]]:
    """Parse one raw row; raise ValueError(column, message) on hard violations."""
    out: dict = {}
    soft: list[str] = []
    for fld in DEFAULT_COLUMNS:
        col = headers[fld]
        raw = (row.get(col) or "").strip()
        if raw == "":
            raise ValueError(col, "missing value")
        try:
            if fld in CATEGORICAL_FIELDS:
                out[fld] = _parse_level(fld, raw)
            elif fld in DUMMY_FIELDS:
                out[fld] = _parse_dummy(raw)
            else:
                value = float(raw)
                if not math.isfinite(value):
                    raise ValueError(f"non-finite value {raw!r}")
                out[fld] = value
        except ValueError as exc:
            raise ValueError(col, str(exc)) from None

    year = out["year"]
    if year != int(year):
        raise ValueError(headers["year"], f"year {year!r} is not an integer")
    out["year"] = int(year)
    if out["horizon_min"] <= 0:
        raise ValueError(headers["horizon_min"], "horizon must be > 0")
    if out["res_min"] <= 0:
        raise ValueError(headers["res_min"], "resolution must be > 0")
    if out["test_length_days"] < 1:
        raise ValueError(headers["test_length_days"], "test length must be >= 1 day")
    if out["train_length_days"] < 0:
        raise ValueError(headers["train_length_days"], "train length must be >= 0")
    if out["skill_score_pct"] > 100:
        raise ValueError(headers["skill_score_pct"], "skill score must be <= 100")

    for fld, (lo, hi) in SOFT_RANGES.items():
        if not lo <= out[fld] <= hi:
            soft.append(f"{headers[fld]}={out[fld]} outside observed range [{lo}, {hi}]")
    return out, soft


def load_database(path: str | os.PathLike, column_map: Mapping[str, str] | None = None,
                  delimiter: str = ",") -> Dataset:
    """Read the skill-score database from delimited text.

    Args:
        path: UTF-8 file with a header row.
        column_map: overrides for the header names, keyed by record field
            (``"horizon_min"``) or by default header (``"Horizon"``).
        delimiter: field separator.

    Returns:
        Dataset in file order.  Rejected rows are listed in
        ``Dataset.rejected`` with their line numbers; out-of-range values
        produce :class:`RangeWarning`.

    Raises:
        FileNotFoundError: the file does not exist.
        DatabaseError: a required column is missing or no row is valid.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(path)

    headers = dict(DEFAULT_COLUMNS)
    for key, col in (column_map or {}).items():
        fld = key if key in headers else resolve_variable(key)
        headers[fld] = col

    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        present = {c.strip() for c in reader.fieldnames or ()}
        missing = [c for c in headers.values() if c not in present]
        if missing:
            raise DatabaseError(f"{path}: missing required column(s): {', '.join(missing)}")
        reader.fieldnames = [c.strip() for c in reader.fieldnames]

        records = []
        rejected = []
        for row in reader:
            line = reader.line_num
            try:
                parsed, soft = _parse_row(row, headers)
            except ValueError as exc:
                col, msg = exc.args if len(exc.args) == 2 else ("?", str(exc))
                diag = f"{path}:{line}: column {col}: {msg}"
                logger.warning("rejected row: %s", diag)
                rejected.append(diag)
                continue
            for msg in soft:
                warnings.warn(f"{path}:{line}: {msg}", RangeWarning, stacklevel=2)
            records.append(ObservationRecord(**parsed))

    if not records:
        detail = "; ".join(rejected[:5])
        raise DatabaseError(f"{path}: no valid rows ({len(rejected)} rejected): {detail}")
    return Dataset(tuple(records), path, tuple(rejected))


def write_database(dataset: Dataset, path: str | os.PathLike, delimiter: str = ",") -> None:
    """Write a Dataset with the default headers (atomic replace)."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            writer.writerow(DEFAULT_COLUMNS.values())
            for rec in dataset.records:
                writer.writerow(repr(v) if isinstance(v, float) else v
                                for v in (getattr(rec, f) for f in DEFAULT_COLUMNS))
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def summarize(dataset: Dataset, variable: str) -> SummaryStats:
    """Descriptive statistics of one numeric or dummy column.

    Trimmed mean drops 10% at each end, MAD is scaled by 1.4826, skewness is
    ``m3 / m2**1.5`` and kurtosis is the excess ``m4 / m2**2 - 3``.
    """
    key = resolve_variable(variable)
    if key in CATEGORICAL_FIELDS:
        raise TypeError(f"{variable!r} is categorical")
    x = dataset.column(key)
    n = x.size
    if n == 0:
        raise ValueError("empty dataset")
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    if sd > 0:
        skew = float(stats.skew(x, bias=True))
        kurt = float(stats.kurtosis(x, fisher=True, bias=True))
    else:
        skew = kurt = float("nan")
    lo, hi = float(x.min()), float(x.max())
    return SummaryStats(
        n=n,
        mean=float(np.mean(x)),
        sd=sd,
        median=float(np.median(x)),
        trimmed_mean=float(stats.trim_mean(x, 0.1)),
        mad=float(stats.median_abs_deviation(x, scale=1 / 1.4826)),
        min=lo,
        max=hi,
        range=hi - lo,
        skew=skew,
        kurtosis=kurt,
        se=sd / math.sqrt(n),
    )


def horizon_class(horizon_min: float) -> str:
    if horizon_min <= 60:
        return "intra_hour"
    if horizon_min <= 360:
        return "intra_day"
    return "day_ahead"


def partition_by_horizon(dataset: Dataset) -> dict[str, Dataset]:
    """Split into intra-hour (<= 60 min), intra-day (<= 360 min) and day-ahead."""
    labels = [horizon_class(r.horizon_min) for r in dataset.records]
    return {cls: dataset.subset([lab == cls for lab in labels]) for cls in HORIZON_CLASSES}


def dataset_from_records(records: Iterable[ObservationRecord], source_path: str = "") -> Dataset:
    return Dataset(tuple(records), source_path)
