"""Multivariate adaptive regression splines.

Piecewise-linear regression on products of hinge functions
``max(x - t, 0)`` / ``max(t - x, 0)``.  The forward pass greedily adds the
reflected hinge pair (or, for 0/1 columns, the single indicator) that most
reduces the residual sum of squares; the backward pass deletes terms one at
a time and keeps the subset with the lowest generalized cross-validation
score.

The forward search scores every candidate knot of a (parent, variable)
combination at once from suffix sums over the rows sorted by that variable.
Because the orthonormal basis of the current model only ever gains columns,
those sums are cached per combination and extended with each new column.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg

from .encoding import INTERCEPT, DesignMatrix

HINGE_PLUS = "hinge_plus"
HINGE_MINUS = "hinge_minus"
INDICATOR = "indicator"

# a new column whose residual norm falls below this fraction of its own norm
# is treated as linearly dependent on the model
_DEPENDENT_RTOL = 1e-8
# fast gain estimates are discarded below this relative orthogonal norm
_FAST_RTOL = 1e-9
# candidates re-scored exactly before a term is committed
_TOP_EXACT = 8


@dataclass(frozen=True)
class BasisFactor:
    kind: str
    variable: str
    knot: float | None = None

    def __post_init__(self):
        if self.kind not in (HINGE_PLUS, HINGE_MINUS, INDICATOR):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if (self.kind == INDICATOR) != (self.knot is None):
            raise ValueError("hinge factors need a knot, indicators must not have one")

    def evaluate(self, x: np.ndarray | float) -> np.ndarray | float:
        if self.kind == HINGE_PLUS:
            return np.maximum(x - self.knot, 0.0)
        if self.kind == HINGE_MINUS:
            return np.maximum(self.knot - x, 0.0)
        return x

    def label(self) -> str:
        if self.kind == INDICATOR:
            return self.variable
        if self.kind == HINGE_PLUS:
            if self.knot < 0:
                return f"h({self.variable}+{-self.knot:g})"
            return f"h({self.variable}-{self.knot:g})"
        return f"h({self.knot:g}-{self.variable})"


@dataclass(frozen=True)
class BasisTerm:
    factors: tuple[BasisFactor, ...]
    coefficient: float = 0.0

    def __post_init__(self):
        if not self.factors:
            raise ValueError("a basis term needs at least one factor")
        variables = [f.variable for f in self.factors]
        if len(set(variables)) != len(variables):
            raise ValueError("a variable may appear only once per term")

    @property
    def degree(self) -> int:
        return len(self.factors)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(f.variable for f in self.factors)

    def label(self) -> str:
        return "*".join(f.label() for f in self.factors)

    def knots(self) -> set[tuple[str, float]]:
        return {(f.variable, f.knot) for f in self.factors if f.kind != INDICATOR}

    def evaluate(self, X: np.ndarray, column_names: Sequence[str]) -> np.ndarray:
        out = np.ones(X.shape[0])
        for f in self.factors:
            try:
                j = list(column_names).index(f.variable)
            except ValueError:
                raise KeyError(f"unknown variable {f.variable!r}") from None
            out = out * f.evaluate(X[:, j])
        return out


def eval_term(term: BasisTerm, row: Mapping[str, float] | Sequence[float],
              column_names: Sequence[str] | None = None) -> float:
    """Evaluate one basis term on a single record.

    ``row`` is either a mapping from variable name to value or a vector
    whose entries follow ``column_names``.
    """
    if column_names is not None:
        row = dict(zip(column_names, row))
    value = 1.0
    for f in term.factors:
        if f.variable not in row:
            raise KeyError(f"unknown variable {f.variable!r}")
        value *= float(f.evaluate(float(row[f.variable])))
    return value


@dataclass(frozen=True)
class MarsConfig:
    max_degree: int = 2
    max_terms: int = 34
    min_rsq_gain: float = 0.001
    gcv_penalty_per_knot: float | None = None
    cv_folds: int = 10
    rng_seed: int = 20220101
    max_knots: int | None = None

    def __post_init__(self):
        if self.max_degree not in (1, 2):
            raise ValueError("max_degree must be 1 or 2")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if self.min_rsq_gain < 0:
            raise ValueError("min_rsq_gain must be >= 0")

    @property
    def penalty(self) -> float:
        if self.gcv_penalty_per_knot is not None:
            return self.gcv_penalty_per_knot
        return 3.0 if self.max_degree > 1 else 2.0


@dataclass(frozen=True)
class MarsModel:
    """Fitted MARS model.  ``max_terms`` counts the intercept."""

    intercept: float
    terms: tuple[BasisTerm, ...]
    variables: tuple[str, ...]
    rsq: float
    grsq: float
    gcv: float
    rss: float
    n: int
    config: MarsConfig = field(default_factory=MarsConfig)

    @property
    def column_names(self) -> tuple[str, ...]:
        return self.variables

    def basis(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        cols = [np.ones(X.shape[0])] + [t.evaluate(X, self.variables) for t in self.terms]
        return np.column_stack(cols)

    def predict(self, X: np.ndarray) -> np.ndarray:
        coefs = np.array([self.intercept] + [t.coefficient for t in self.terms])
        return self.basis(X) @ coefs

    def knots_for(self, variable: str) -> list[float]:
        return sorted({k for t in self.terms for v, k in t.knots() if v == variable})

    def used_variables(self) -> list[str]:
        seen = {v for t in self.terms for v in t.variables}
        return [v for v in self.variables if v in seen]

    def summary(self) -> str:
        lines = [f"{'Term':<48}Weight", f"{'(Intercept)':<48}{self.intercept:.3e}"]
        lines += [f"{t.label():<48}{t.coefficient:.3e}" for t in self.terms]
        lines.append(f"RSq {self.rsq:.4f}  GRSq {self.grsq:.4f}  GCV {self.gcv:.6g}  "
                     f"terms {len(self.terms) + 1}  n {self.n}")
        return "\n".join(lines)

    def to_json(self) -> str:
        doc = {
            "intercept": self.intercept,
            "terms": [
                {"label": t.label(), "coefficient": t.coefficient,
                 "factors": [asdict(f) for f in t.factors]}
                for t in self.terms
            ],
            "variables": list(self.variables),
            "rsq": self.rsq, "grsq": self.grsq, "gcv": self.gcv,
            "rss": self.rss, "n": self.n,
            "config": asdict(self.config),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MarsModel":
        doc = json.loads(text)
        terms = tuple(
            BasisTerm(tuple(BasisFactor(**f) for f in t["factors"]), t["coefficient"])
            for t in doc["terms"])
        return cls(doc["intercept"], terms, tuple(doc["variables"]), doc["rsq"],
                   doc["grsq"], doc["gcv"], doc["rss"], doc["n"],
                   MarsConfig(**doc["config"]))


def predict(model, rows) -> np.ndarray:
    """Predict from a DesignMatrix or from rows ordered like ``model.column_names``."""
    if isinstance(rows, DesignMatrix):
        idx = [rows.index(v) for v in model.column_names]
        return model.predict(rows.X[:, idx])
    return model.predict(np.asarray(rows, dtype=float))


# ---------------------------------------------------------------------------
# GCV

def count_knots(terms: Sequence[BasisTerm]) -> int:
    knots: set = set()
    for t in terms:
        knots |= t.knots()
    return len(knots)


def gcv_score(rss: float, n: int, n_coef: int, n_knots: int, penalty: float) -> float:
    """``(RSS/n) / (1 - C/n)**2`` with ``C = n_coef + penalty * n_knots``."""
    c = n_coef + penalty * n_knots
    if c >= n:
        return math.inf
    return (rss / n) / (1.0 - c / n) ** 2


def _gcv_null(y: np.ndarray) -> float:
    n = y.size
    tss = float(np.sum((y - y.mean()) ** 2))
    return gcv_score(tss, n, 1, 0, 0.0)


# ---------------------------------------------------------------------------
# forward pass

def _suffix(z: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Sums of z[pos_k:] along axis 0 for every k."""
    cs = np.cumsum(z[::-1], axis=0)[::-1]
    return cs[pos]


class _HingeCandidates:
    """All hinge pairs of one (parent, variable) combination."""

    def __init__(self, b: np.ndarray, x: np.ndarray, capacity: int, max_knots: int | None):
        active = np.flatnonzero(b != 0)
        order = np.argsort(x[active], kind="stable")
        self.rows = active[order]
        xs = x[self.rows]
        uniq = np.unique(xs)
        knots = uniq[1:-1]  # endpoint knots give a zero or purely linear hinge
        if max_knots is not None and knots.size > max_knots:
            pick = np.unique(np.round(np.linspace(0, knots.size - 1, max_knots)).astype(int))
            knots = knots[pick]
        self.knots = knots
        if knots.size == 0:
            return
        center = float(np.median(xs))
        self.xc = xs - center
        self.tc = knots - center
        self.pos = np.searchsorted(xs, knots, side="right")
        self.b = b[self.rows]
        bb = self.b**2
        p0 = _suffix(bb, self.pos)
        p1 = _suffix(bb * self.xc, self.pos)
        p2 = _suffix(bb * self.xc**2, self.pos)
        self.vnorm2 = np.maximum(p2 - 2 * self.tc * p1 + self.tc**2 * p0, 0.0)
        self.uv = p2 - self.tc * p1
        self.unorm2 = float(np.sum(bb * self.xc**2))
        self.A0 = np.empty((knots.size, capacity))
        self.A1 = np.empty((knots.size, capacity))
        self.qtu = np.empty(capacity)
        self.m = 0

    @property
    def empty(self) -> bool:
        return self.knots.size == 0

    def extend(self, Qnew: np.ndarray) -> None:
        j = Qnew.shape[1]
        qb = Qnew[self.rows] * self.b[:, None]
        qbx = qb * self.xc[:, None]
        self.A0[:, self.m:self.m + j] = _suffix(qb, self.pos)
        self.A1[:, self.m:self.m + j] = _suffix(qbx, self.pos)
        self.qtu[self.m:self.m + j] = qbx.sum(axis=0)
        self.m += j

    def gains(self, r: np.ndarray) -> np.ndarray:
        m = self.m
        rb = r[self.rows] * self.b
        rbx = rb * self.xc
        rv = _suffix(rbx, self.pos) - self.tc * _suffix(rb, self.pos)
        ru = float(rbx.sum())
        qtv = self.A1[:, :m] - self.tc[:, None] * self.A0[:, :m]
        qtu = self.qtu[:m]
        nu = self.unorm2 - float(qtu @ qtu)
        if nu > _FAST_RTOL * self.unorm2 and nu > 0:
            s = math.sqrt(nu)
            uhat_v = (self.uv - qtv @ qtu) / s
            r_uhat = ru / s
            gain_u = r_uhat**2
        else:
            uhat_v = np.zeros_like(self.uv)
            r_uhat = 0.0
            gain_u = 0.0
        nv = self.vnorm2 - np.einsum("ij,ij->i", qtv, qtv) - uhat_v**2
        rv2 = rv - r_uhat * uhat_v
        ok = nv > _FAST_RTOL * self.vnorm2
        gain_v = np.zeros_like(nv)
        gain_v[ok] = rv2[ok] ** 2 / nv[ok]
        return gain_u + gain_v


class _IndicatorCandidates:
    """Products of one parent with every eligible 0/1 column."""

    def __init__(self, b: np.ndarray, X: np.ndarray, var_idx: list[int], capacity: int):
        self.var_idx = np.array(var_idx, dtype=int)
        self.W = b[:, None] * X[:, self.var_idx]
        self.wnorm2 = np.einsum("ij,ij->j", self.W, self.W)
        self.QtW = np.empty((capacity, len(var_idx)))
        self.m = 0

    def extend(self, Qnew: np.ndarray) -> None:
        j = Qnew.shape[1]
        self.QtW[self.m:self.m + j] = Qnew.T @ self.W
        self.m += j

    def gains(self, r: np.ndarray) -> np.ndarray:
        qtw = self.QtW[:self.m]
        nw = self.wnorm2 - np.einsum("ij,ij->j", qtw, qtw)
        rw = r @ self.W
        ok = (nw > _FAST_RTOL * self.wnorm2) & (self.wnorm2 > 0)
        g = np.zeros_like(nw)
        g[ok] = rw[ok] ** 2 / nw[ok]
        return g


@dataclass
class _Candidate:
    gain: float
    parent: int          # -1 for the intercept
    var: int
    knot: float | None   # None for indicators


@dataclass
class _Step:
    terms: list           # list[tuple[BasisFactor, ...]]
    rss: float


def _orthogonalize(Q: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, float]:
    c = c - Q @ (Q.T @ c)
    c = c - Q @ (Q.T @ c)
    return c, float(np.linalg.norm(c))


def _candidate_columns(cand: _Candidate, parent_col: np.ndarray, x: np.ndarray) -> list[np.ndarray]:
    if cand.knot is None:
        return [parent_col * x]
    return [parent_col * np.maximum(x - cand.knot, 0.0),
            parent_col * np.maximum(cand.knot - x, 0.0)]


def _exact_gain(Q: np.ndarray, r: np.ndarray, cols: list[np.ndarray]):
    """Exact RSS reduction of appending ``cols``; also returns the new unit vectors."""
    gain = 0.0
    added = []
    mask = []
    for c in cols:
        norm = float(np.linalg.norm(c))
        basis = np.column_stack([Q] + added) if added else Q
        resid, rnorm = _orthogonalize(basis, c)
        if norm == 0 or rnorm < _DEPENDENT_RTOL * norm:
            mask.append(False)
            continue
        q = resid / rnorm
        coef = float(r @ q)
        gain += coef**2
        r = r - coef * q
        added.append(q)
        mask.append(True)
    return gain, added, mask, r


def _forward_trace(X: np.ndarray, y: np.ndarray, names: Sequence[str],
                   config: MarsConfig) -> list[_Step]:
    """Run the forward pass to ``config.max_terms`` and record every step."""
    n, p = X.shape
    tss = float(np.sum((y - y.mean()) ** 2))
    steps: list[_Step] = []
    if tss <= 0 or config.max_terms < 2:
        return steps

    candidates_vars = [j for j in range(p) if names[j] != INTERCEPT]
    binary = {j: bool(np.all((X[:, j] == 0) | (X[:, j] == 1))) for j in candidates_vars}
    numeric_vars = [j for j in candidates_vars if not binary[j]]
    dummy_vars = [j for j in candidates_vars if binary[j]]

    capacity = config.max_terms + 1
    Q = np.empty((n, capacity))
    Q[:, 0] = 1.0 / math.sqrt(n)
    m = 1
    r = y - y.mean()

    # parent bookkeeping: column values, variable set, degree
    parents: list[tuple[np.ndarray, frozenset, int]] = [(np.ones(n), frozenset(), 0)]
    parent_factors: list[tuple[BasisFactor, ...]] = [()]
    hinge_cache: dict[tuple[int, int], _HingeCandidates] = {}
    dummy_cache: dict[int, _IndicatorCandidates] = {}

    def register_parent(k: int) -> None:
        col, used, degree = parents[k]
        if degree >= config.max_degree:
            return
        for j in numeric_vars:
            if j in used:
                continue
            hc = _HingeCandidates(col, X[:, j], capacity, config.max_knots)
            if not hc.empty:
                hc.extend(Q[:, :m])
                hinge_cache[(k, j)] = hc
        dvars = [j for j in dummy_vars if j not in used]
        if dvars:
            ic = _IndicatorCandidates(col, X, dvars, capacity)
            ic.extend(Q[:, :m])
            dummy_cache[k] = ic

    register_parent(0)
    n_terms = 0
    while n_terms + 1 < config.max_terms:
        pool: list[_Candidate] = []
        for (k, j), hc in hinge_cache.items():
            g = hc.gains(r)
            for i in np.flatnonzero(g > 0):
                pool.append(_Candidate(float(g[i]), k - 1, j, float(hc.knots[i])))
        for k, ic in dummy_cache.items():
            g = ic.gains(r)
            for i in np.flatnonzero(g > 0):
                pool.append(_Candidate(float(g[i]), k - 1, int(ic.var_idx[i]), None))
        if not pool:
            break
        pool.sort(key=lambda c: -c.gain)
        best = None
        best_key = None
        Qm = Q[:, :m]
        scored = []
        for cand in pool[:_TOP_EXACT]:
            cols = _candidate_columns(cand, parents[cand.parent + 1][0], X[:, cand.var])
            gain, _, _, _ = _exact_gain(Qm, r, cols)
            scored.append((gain, cand))
        top_gain = max(g for g, _ in scored)
        for gain, cand in scored:
            if gain < top_gain - 1e-12 * tss:
                continue
            key = (-math.inf if cand.knot is None else cand.knot, cand.var, cand.parent)
            if best_key is None or key < best_key:
                best, best_key = (gain, cand), key
        gain, cand = best
        if gain <= 0 or gain / tss < config.min_rsq_gain:
            break

        parent_col = parents[cand.parent + 1][0]
        x = X[:, cand.var]
        cols = _candidate_columns(cand, parent_col, x)
        gain, qs, mask, r_new = _exact_gain(Qm, r, cols)
        if not qs or n_terms + len(qs) + 1 > config.max_terms:
            break

        pf = parent_factors[cand.parent + 1]
        var = names[cand.var]
        if cand.knot is None:
            new_factors = [(BasisFactor(INDICATOR, var),)]
        else:
            new_factors = [(BasisFactor(HINGE_PLUS, var, cand.knot),),
                           (BasisFactor(HINGE_MINUS, var, cand.knot),)]
        added_terms = []
        for keep, f, col in zip(mask, new_factors, cols):
            if not keep:
                continue
            factors = pf + f
            added_terms.append(factors)
            parent_factors.append(factors)
            parents.append((col, parents[cand.parent + 1][1] | {cand.var}, len(factors)))
        Qnew = np.column_stack(qs)
        Q[:, m:m + len(qs)] = Qnew
        m += len(qs)
        r = r_new
        for hc in hinge_cache.values():
            hc.extend(Qnew)
        for ic in dummy_cache.values():
            ic.extend(Qnew)
        for k in range(len(parents) - len(added_terms), len(parents)):
            register_parent(k)
        n_terms += len(added_terms)
        steps.append(_Step(added_terms, float(r @ r)))
    return steps


def _lstsq(B: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    coef, _, _, _ = linalg.lstsq(B, y, lapack_driver="gelsy")
    resid = y - B @ coef
    return coef, float(resid @ resid)


def _assemble(factor_sets: Sequence[tuple[BasisFactor, ...]], X: np.ndarray, y: np.ndarray,
              names: Sequence[str], config: MarsConfig) -> MarsModel:
    terms = tuple(BasisTerm(f) for f in factor_sets)
    n = y.size
    B = np.column_stack([np.ones(n)] + [t.evaluate(X, names) for t in terms])
    coef, rss = _lstsq(B, y)
    terms = tuple(replace(t, coefficient=float(c)) for t, c in zip(terms, coef[1:]))
    tss = float(np.sum((y - y.mean()) ** 2))
    gcv = gcv_score(rss, n, len(terms) + 1, count_knots(terms), config.penalty)
    gcv0 = _gcv_null(y)
    rsq = 1.0 - rss / tss if tss > 0 else 0.0
    grsq = 1.0 - gcv / gcv0 if gcv0 > 0 else 0.0
    return MarsModel(float(coef[0]), terms, tuple(names), rsq, grsq, gcv, rss, n, config)


def _check_matrix(matrix: DesignMatrix) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    X = np.asarray(matrix.X, dtype=float)
    y = np.asarray(matrix.y, dtype=float)
    if X.shape[0] < 10:
        raise ValueError(f"MARS needs at least 10 rows, got {X.shape[0]}")
    return X, y, tuple(matrix.column_names)


def forward_pass(matrix: DesignMatrix, config: MarsConfig = MarsConfig()) -> MarsModel:
    """Greedy forward pass; returns the unpruned model.

    Stops when ``config.max_terms`` (intercept included) would be exceeded or
    when the best candidate raises R² by less than ``config.min_rsq_gain``.
    """
    X, y, names = _check_matrix(matrix)
    steps = _forward_trace(X, y, names, config)
    factor_sets = [f for s in steps for f in s.terms]
    return _assemble(factor_sets, X, y, names, config)


def _prune_path(B: np.ndarray, y: np.ndarray) -> list[tuple[tuple[int, ...], float]]:
    """Backward elimination path as (retained column indices, RSS) per size.

    Works on the triangular factor of ``[B | y]``: deleting a column and
    re-triangularizing the small factor yields the new RSS without touching
    the n rows again.  Column 0 (the intercept) is never removed.
    """
    n, k = B.shape
    R = linalg.qr(np.column_stack([B, y]), mode="r")[0]
    if R.shape[0] < k + 1:
        R = np.vstack([R, np.zeros((k + 1 - R.shape[0], k + 1))])
    R = R[:k + 1, :k + 1]
    active = list(range(k))
    path = [(tuple(active), float(R[k, k] ** 2))]
    while len(active) > 1:
        kk = len(active)
        Rx = R[:kk, :kk]
        diag = np.abs(np.diag(Rx))
        scale = diag.max()
        dependent = [j for j in range(1, kk) if diag[j] <= 1e-10 * scale]
        if dependent:
            drop = dependent[-1]
        else:
            z = R[:kk, kk]
            beta = linalg.solve_triangular(Rx, z)
            rinv = linalg.solve_triangular(Rx, np.eye(kk))
            delta = beta**2 / np.sum(rinv**2, axis=1)
            delta[0] = math.inf
            # ties go to the most recently added term
            drop = kk - 1 - int(np.argmin(delta[::-1]))
        R = linalg.qr(np.delete(R[:kk + 1, :kk + 1], drop, axis=1), mode="r")[0]
        R = R[:kk, :kk]
        del active[drop]
        path.append((tuple(active), float(R[kk - 1, kk - 1] ** 2)))
    return path


def backward_prune(model: MarsModel, matrix: DesignMatrix) -> MarsModel:
    """Backward elimination; keeps the visited subset with the lowest GCV.

    Among subsets whose GCV ties the minimum, the smallest one wins.
    """
    X, y, names = _check_matrix(matrix)
    idx = [names.index(v) for v in model.variables]
    X = X[:, idx]
    names = model.variables
    if not model.terms:
        return model
    B = model.basis(X)
    n = y.size
    penalty = model.config.penalty
    path = _prune_path(B, y)
    gcv0 = _gcv_null(y)
    scored = []
    for active, rss in path:
        terms = [model.terms[i - 1] for i in active if i > 0]
        scored.append((gcv_score(rss, n, len(active), count_knots(terms), penalty), len(active), active))
    best_gcv = min(s[0] for s in scored)
    tol = 1e-12 * gcv0 if math.isfinite(best_gcv) else 0.0
    ties = [s for s in scored if s[0] <= best_gcv + tol]
    _, _, active = min(ties, key=lambda s: s[1])
    factor_sets = [model.terms[i - 1].factors for i in active if i > 0]
    return _assemble(factor_sets, X, y, names, model.config)


def fit_mars(matrix: DesignMatrix, config: MarsConfig = MarsConfig()) -> MarsModel:
    """Forward pass followed by GCV backward pruning."""
    return backward_prune(forward_pass(matrix, config), matrix)


# ---------------------------------------------------------------------------
# cross-validation

def default_cv_grid(base: MarsConfig = MarsConfig()) -> list[MarsConfig]:
    """max_terms 2, 12, ..., 92 crossed with degree 1 and 2 (20 configs)."""
    return [replace(base, max_degree=d, max_terms=t)
            for d in (1, 2) for t in range(2, 101, 10)]


def fold_assignment(n: int, k: int, seed: int) -> np.ndarray:
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=int)
    folds[perm] = np.arange(n) % k
    return folds


def cross_validate(matrix: DesignMatrix, grid: Sequence[MarsConfig] | None = None
                   ) -> tuple[MarsConfig, dict[MarsConfig, float]]:
    """k-fold CV of every config; returns the best config and mean fold RMSEs.

    Folds come from ``grid[0].rng_seed`` and ``grid[0].cv_folds``.  Ties in
    mean RMSE go to fewer terms, then to lower degree.  Configs that differ
    only in ``max_terms`` share one forward pass per fold, since a shorter
    forward pass is a prefix of a longer one.
    """
    grid = list(grid) if grid is not None else default_cv_grid()
    if not grid:
        raise ValueError("empty grid")
    X, y, names = _check_matrix(matrix)
    k = grid[0].cv_folds
    n = y.size
    if k < 2 or n < k:
        raise ValueError(f"need 2 <= cv_folds <= n (cv_folds={k}, n={n})")
    folds = fold_assignment(n, k, grid[0].rng_seed)

    groups: dict[MarsConfig, list[MarsConfig]] = {}
    for cfg in grid:
        groups.setdefault(replace(cfg, max_terms=1), []).append(cfg)

    sq_err = {cfg: [] for cfg in grid}
    for f in range(k):
        test = folds == f
        train = ~test
        if not test.any() or not train.any():
            raise ValueError(f"fold {f} has no rows")
        Xtr, ytr, Xte, yte = X[train], y[train], X[test], y[test]
        if ytr.size < 10:
            raise ValueError("training fold smaller than 10 rows")
        dm_train = DesignMatrix(names, Xtr, ytr)
        for key, cfgs in groups.items():
            top = max(c.max_terms for c in cfgs)
            steps = _forward_trace(Xtr, ytr, names, replace(key, max_terms=top))
            for cfg in cfgs:
                factor_sets = []
                for s in steps:
                    if len(factor_sets) + len(s.terms) + 1 > cfg.max_terms:
                        break
                    factor_sets.extend(s.terms)
                unpruned = _assemble(factor_sets, Xtr, ytr, names, cfg)
                model = backward_prune(unpruned, dm_train)
                resid = yte - model.predict(Xte)
                sq_err[cfg].append(math.sqrt(float(np.mean(resid**2))))

    scores = {cfg: float(np.mean(v)) for cfg, v in sq_err.items()}
    best_score = min(scores.values())
    ties = [c for c in grid if scores[c] <= best_score * (1 + 1e-12)]
    best = min(ties, key=lambda c: (c.max_terms, c.max_degree))
    return best, scores
