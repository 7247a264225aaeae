import itertools
import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import planted
from conftest import design
from ssmeta.encoding import build_design_matrix
from ssmeta.mars import (HINGE_MINUS, HINGE_PLUS, INDICATOR, BasisFactor, BasisTerm,
                         MarsConfig, MarsModel, _gcv_null, backward_prune, count_knots,
                         cross_validate, default_cv_grid, eval_term, fit_mars, fold_assignment,
                         forward_pass, gcv_score, predict)

EXACT = MarsConfig(max_degree=2, max_terms=20, min_rsq_gain=1e-5)


# ---------------------------------------------------------------------------
# basis functions

def test_hinge_evaluation():
    plus = BasisFactor(HINGE_PLUS, "x", 2.0)
    minus = BasisFactor(HINGE_MINUS, "x", 2.0)
    x = np.array([0.0, 2.0, 5.0])
    np.testing.assert_array_equal(plus.evaluate(x), [0, 0, 3])
    np.testing.assert_array_equal(minus.evaluate(x), [2, 0, 0])
    assert plus.label() == "h(x-2)" and minus.label() == "h(2-x)"
    assert BasisFactor(HINGE_PLUS, "x", -4.5).label() == "h(x+4.5)"
    assert BasisFactor(HINGE_MINUS, "x", -4.5).label() == "h(-4.5-x)"


def test_term_product_and_eval_term():
    term = BasisTerm((BasisFactor(HINGE_PLUS, "Horizon", 345.0),
                      BasisFactor(INDICATOR, "InputNWP")), 1.0)
    assert term.label() == "h(Horizon-345)*InputNWP"
    assert eval_term(term, {"Horizon": 400.0, "InputNWP": 1}) == 55.0
    assert eval_term(term, [400.0, 0.0], ["Horizon", "InputNWP"]) == 0.0
    with pytest.raises(KeyError):
        eval_term(term, {"Horizon": 1.0})


def test_invalid_terms():
    with pytest.raises(ValueError):
        BasisFactor(HINGE_PLUS, "x")
    with pytest.raises(ValueError):
        BasisTerm((BasisFactor(HINGE_PLUS, "x", 1.0), BasisFactor(HINGE_MINUS, "x", 1.0)))
    with pytest.raises(ValueError):
        MarsConfig(max_degree=3)


def test_gcv_formula():
    assert gcv_score(10.0, 100, 3, 1, 2.0) == pytest.approx((10 / 100) / (1 - 5 / 100) ** 2)
    assert gcv_score(10.0, 10, 8, 1, 2.0) == math.inf
    terms = [BasisTerm((BasisFactor(HINGE_PLUS, "x", 1.0),)),
             BasisTerm((BasisFactor(HINGE_MINUS, "x", 1.0),)),
             BasisTerm((BasisFactor(HINGE_PLUS, "x", 1.0), BasisFactor(HINGE_MINUS, "z", 4.0)))]
    assert count_knots(terms) == 2
    assert MarsConfig(max_degree=1).penalty == 2.0
    assert MarsConfig(max_degree=2).penalty == 3.0


# ---------------------------------------------------------------------------
# forward pass against a brute-force greedy oracle

def _oracle_forward(X, y, names, max_degree, steps):
    """Greedy forward selection by exhaustive least squares over all candidates."""
    n = y.size
    tss = float(np.sum((y - y.mean()) ** 2))
    binary = [bool(np.all((X[:, j] == 0) | (X[:, j] == 1))) for j in range(X.shape[1])]
    parents = [(np.ones(n), frozenset())]
    B = np.ones((n, 1))
    chosen = []
    for _ in range(steps):
        best = None
        for pi, (pcol, used) in enumerate(parents):
            if len(used) >= max_degree:
                continue
            for j in range(1, X.shape[1]):
                if j in used:
                    continue
                x = X[:, j]
                if binary[j]:
                    options = [(None, [pcol * x])]
                else:
                    u = np.unique(x[pcol != 0])[1:-1]
                    options = [(t, [pcol * np.maximum(x - t, 0), pcol * np.maximum(t - x, 0)])
                               for t in u]
                for t, cols in options:
                    A = np.column_stack([B, *cols])
                    c, *_ = np.linalg.lstsq(A, y, rcond=None)
                    rss = float(np.sum((y - A @ c) ** 2))
                    key = (round(rss / tss, 10), -math.inf if t is None else t, j, pi)
                    if best is None or key < best[0]:
                        best = (key, pi, j, t, cols, rss)
        _, pi, j, t, cols, rss = best
        for c in cols:
            B = np.column_stack([B, c])
            parents.append((c, parents[pi][1] | {j}))
        chosen.append((names[j], t, rss))
    return chosen


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("degree", [1, 2])
def test_forward_pass_matches_brute_force(seed, degree):
    rng = np.random.default_rng(seed)
    n = 60
    x1 = rng.uniform(0, 10, n)
    x2 = rng.uniform(-5, 5, n)
    d = (rng.random(n) < 0.4).astype(float)
    y = (np.maximum(x1 - 4, 0) * (1 + (x2 > 0)) + 2 * d - 0.3 * x2
         + rng.normal(0, 0.5, n))
    dm = design({"x1": x1, "x2": x2, "d": d}, y)
    model = forward_pass(dm, MarsConfig(max_degree=degree, max_terms=9, min_rsq_gain=0))
    seen = []
    for t in model.terms:
        # both members of a reflected pair share the parent and the knot
        f = t.factors[-1]
        step = (t.factors[:-1], f.variable, f.knot)
        if not seen or seen[-1] != step:
            seen.append(step)
    oracle = _oracle_forward(dm.X, y, dm.column_names, degree, len(seen))
    assert [(v, t) for _, v, t in seen] == [(v, t) for v, t, _ in oracle]
    assert model.rss == pytest.approx(oracle[-1][2], rel=1e-9)


def test_shorter_pass_is_prefix(synthetic_db):
    dm = build_design_matrix(synthetic_db)
    long = forward_pass(dm, MarsConfig(max_terms=21))
    for k in (3, 9, 15):
        short = forward_pass(dm, MarsConfig(max_terms=k))
        assert len(short.terms) + 1 <= k
        labels = [t.label() for t in short.terms]
        assert labels == [t.label() for t in long.terms[:len(labels)]]


def test_respects_max_terms_and_degree(synthetic_db):
    dm = build_design_matrix(synthetic_db)
    for degree, k in ((1, 10), (2, 34)):
        model = forward_pass(dm, MarsConfig(max_degree=degree, max_terms=k))
        assert len(model.terms) + 1 <= k
        assert all(t.degree <= degree for t in model.terms)
        assert all(f.kind == INDICATOR for t in model.terms for f in t.factors
                   if dm.is_binary(f.variable))


def test_min_rsq_gain_stops_early():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 10, 200)
    y = np.maximum(x - 5, 0)
    model = forward_pass(design({"x": x}, y), MarsConfig(max_terms=30, min_rsq_gain=0.001))
    assert len(model.terms) <= 4
    assert model.rsq == pytest.approx(1.0)


def test_constant_response():
    model = fit_mars(design({"x": np.arange(20.0)}, np.full(20, 3.0)))
    assert model.terms == ()
    assert model.intercept == pytest.approx(3.0)


def test_too_few_rows():
    with pytest.raises(ValueError, match="at least 10"):
        fit_mars(design({"x": np.arange(5.0)}, np.arange(5.0)))


# ---------------------------------------------------------------------------
# planted structure

@pytest.mark.parametrize("seed", range(15))
def test_recovers_additive_knots(seed):
    dm, knots = planted.additive(seed)
    model = fit_mars(dm, replace(EXACT, max_degree=1))
    assert model.rsq >= 0.999
    errors = planted.knot_errors(model, knots)
    assert all(e <= planted.GRID_STEP for e in errors.values()), errors


@pytest.mark.parametrize("seed", range(15))
def test_recovers_interaction_knots(seed):
    dm, knots = planted.interaction(seed)
    model = fit_mars(dm, EXACT)
    assert model.rsq >= 0.999
    assert any(t.degree == 2 for t in model.terms)
    errors = planted.knot_errors(model, knots)
    assert all(e <= planted.GRID_STEP for e in errors.values()), errors


def _exhaustive_best(model, dm):
    """All subsets of the forward terms; smallest among the GCV minimizers."""
    B = model.basis(dm.X[:, [dm.index(v) for v in model.variables]])
    y = dm.y
    scored = []
    for r in range(len(model.terms) + 1):
        for S in itertools.combinations(range(len(model.terms)), r):
            cols = [0, *(i + 1 for i in S)]
            c, *_ = np.linalg.lstsq(B[:, cols], y, rcond=None)
            rss = float(np.sum((y - B[:, cols] @ c) ** 2))
            terms = [model.terms[i] for i in S]
            scored.append((gcv_score(rss, y.size, len(cols), count_knots(terms),
                                     model.config.penalty), S))
    gmin = min(g for g, _ in scored)
    near = [S for g, S in scored if g <= gmin + 1e-12 * _gcv_null(y)]
    size = min(len(S) for S in near)
    return [{model.terms[i].label() for i in S} for S in near if len(S) == size]


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("kind", ["additive", "interaction"])
def test_backward_prune_matches_exhaustive_subsets(seed, kind):
    dm, _ = getattr(planted, kind)(seed, n=200)
    unpruned = forward_pass(dm, MarsConfig(max_degree=2, max_terms=11, min_rsq_gain=0))
    assert len(unpruned.terms) <= 10
    pruned = backward_prune(unpruned, dm)
    assert {t.label() for t in pruned.terms} in _exhaustive_best(unpruned, dm)


def test_prune_drops_spurious_terms():
    rng = np.random.default_rng(11)
    n = 300
    X = rng.uniform(0, 10, size=(n, 4))
    y = (2 * np.maximum(X[:, 0] - 3, 0) - 1.5 * np.maximum(6 - X[:, 1], 0)
         + np.maximum(X[:, 2] - 5, 0) + rng.normal(0, 0.05, n))
    dm = design({f"x{i + 1}": X[:, i] for i in range(4)}, y)
    true = [((HINGE_PLUS, "x1", 3.0),), ((HINGE_MINUS, "x2", 6.0),), ((HINGE_PLUS, "x3", 5.0),)]
    spurious = [((HINGE_PLUS, "x4", 2.0),), ((HINGE_MINUS, "x4", 7.0),),
                ((HINGE_PLUS, "x1", 8.0),), ((HINGE_PLUS, "x2", 1.0),),
                ((HINGE_PLUS, "x3", 5.0), (HINGE_MINUS, "x4", 5.0))]
    terms = tuple(BasisTerm(tuple(BasisFactor(*f) for f in spec)) for spec in true + spurious)
    unpruned = MarsModel(0.0, terms, dm.column_names, 0, 0, 0, 0, n, MarsConfig(max_degree=2))
    pruned = backward_prune(unpruned, dm)
    assert {t.label() for t in pruned.terms} == {"h(x1-3)", "h(6-x2)", "h(x3-5)"}
    assert [{t.label() for t in pruned.terms}] == _exhaustive_best(unpruned, dm)


def test_pruned_gcv_not_worse(synthetic_db):
    dm = build_design_matrix(synthetic_db)
    unpruned = forward_pass(dm, MarsConfig(max_terms=34))
    pruned = backward_prune(unpruned, dm)
    assert pruned.gcv <= unpruned.gcv
    assert len(pruned.terms) <= len(unpruned.terms)
    assert pruned.grsq == pytest.approx(1 - pruned.gcv / _gcv_null(dm.y))


def test_pure_noise_has_low_grsq():
    rng = np.random.default_rng(5)
    n = 500
    cols = {f"x{i}": rng.uniform(0, 1, n) for i in range(5)}
    model = fit_mars(design(cols, rng.normal(size=n)), MarsConfig(max_terms=20))
    assert model.grsq <= 0.05


# ---------------------------------------------------------------------------
# model object

def test_predict_and_json_roundtrip(small_db):
    dm = build_design_matrix(small_db)
    model = fit_mars(dm, MarsConfig(max_terms=15))
    again = MarsModel.from_json(model.to_json())
    assert again == model
    np.testing.assert_allclose(predict(model, dm), model.predict(dm.X), rtol=0, atol=0)
    resid = dm.y - model.predict(dm.X)
    assert float(resid @ resid) == pytest.approx(model.rss, rel=1e-9)
    assert json.loads(model.to_json())["terms"][0]["label"] == model.terms[0].label()


def test_summary_lists_terms(small_db):
    model = fit_mars(build_design_matrix(small_db), MarsConfig(max_terms=9))
    lines = model.summary().splitlines()
    assert lines[0].startswith("Term") and lines[1].startswith("(Intercept)")
    assert len(lines) == len(model.terms) + 3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 15), st.sampled_from([1, 2]))
def test_fit_invariants(seed, max_terms, degree):
    rng = np.random.default_rng(seed)
    n = 80
    cols = {"a": rng.uniform(0, 5, n), "b": rng.integers(0, 4, n).astype(float),
            "d": (rng.random(n) < 0.5).astype(float)}
    y = np.sin(cols["a"]) + cols["b"] * cols["d"] + rng.normal(0, 0.2, n)
    dm = design(cols, y)
    cfg = MarsConfig(max_degree=degree, max_terms=max_terms)
    unpruned = forward_pass(dm, cfg)
    model = backward_prune(unpruned, dm)
    assert len(unpruned.terms) + 1 <= max_terms
    assert -1e-12 <= model.rsq <= 1.0 + 1e-12
    assert model.grsq <= model.rsq + 1e-12
    assert model.gcv <= unpruned.gcv * (1 + 1e-12)
    assert np.all(model.basis(dm.X) >= 0)
    for t in model.terms:
        for f in t.factors:
            if f.knot is not None:
                x = dm.column(f.variable)
                assert x.min() < f.knot < x.max()


# ---------------------------------------------------------------------------
# cross-validation

def test_default_grid():
    grid = default_cv_grid()
    assert len(grid) == 20
    assert sorted({g.max_terms for g in grid}) == list(range(2, 93, 10))
    assert {g.max_degree for g in grid} == {1, 2}


def test_fold_assignment_balanced_and_seeded():
    f = fold_assignment(103, 10, 7)
    counts = np.bincount(f)
    assert counts.max() - counts.min() <= 1
    np.testing.assert_array_equal(f, fold_assignment(103, 10, 7))
    assert not np.array_equal(f, fold_assignment(103, 10, 8))


def _cv_grid():
    return [MarsConfig(max_degree=d, max_terms=t, cv_folds=5, rng_seed=1)
            for d in (1, 2) for t in (2, 12, 22)]


def test_cv_selects_degree_one_for_additive():
    rng = np.random.default_rng(21)
    n = 400
    X = rng.uniform(0, 10, size=(n, 3))
    y = 2 * np.maximum(X[:, 0] - 4, 0) - np.maximum(6 - X[:, 1], 0) + rng.normal(0, 0.5, n)
    best, scores = cross_validate(design({"a": X[:, 0], "b": X[:, 1], "c": X[:, 2]}, y),
                                  _cv_grid())
    assert best.max_degree == 1
    assert len(scores) == 6


def test_cv_selects_degree_two_for_interaction():
    rng = np.random.default_rng(22)
    n = 400
    X = rng.uniform(0, 10, size=(n, 3))
    y = 0.5 * np.maximum(X[:, 0] - 4, 0) * np.maximum(6 - X[:, 1], 0) + rng.normal(0, 0.5, n)
    best, _ = cross_validate(design({"a": X[:, 0], "b": X[:, 1], "c": X[:, 2]}, y), _cv_grid())
    assert best.max_degree == 2


def test_cv_ties_prefer_fewer_terms_then_lower_degree():
    # a constant response makes every config equally good
    dm = design({"x": np.arange(40.0)}, np.full(40, 2.0))
    best, scores = cross_validate(dm, _cv_grid())
    assert len(set(scores.values())) == 1
    assert (best.max_terms, best.max_degree) == (2, 1)


def test_cv_matches_independent_refits():
    rng = np.random.default_rng(3)
    n = 120
    x = rng.uniform(0, 10, n)
    y = np.maximum(x - 5, 0) + rng.normal(0, 0.3, n)
    dm = design({"x": x, "z": rng.uniform(0, 1, n)}, y)
    grid = [MarsConfig(max_degree=2, max_terms=t, cv_folds=4, rng_seed=9) for t in (3, 7)]
    _, scores = cross_validate(dm, grid)
    folds = fold_assignment(n, 4, 9)
    for cfg in grid:
        errs = []
        for f in range(4):
            model = fit_mars(dm.take_rows(folds != f), cfg)
            r = dm.y[folds == f] - model.predict(dm.X[folds == f])
            errs.append(math.sqrt(np.mean(r**2)))
        assert scores[cfg] == pytest.approx(np.mean(errs), rel=1e-9)


def test_cv_errors():
    dm = design({"x": np.arange(20.0)}, np.arange(20.0))
    with pytest.raises(ValueError):
        cross_validate(dm, [])
    with pytest.raises(ValueError):
        cross_validate(dm, [MarsConfig(cv_folds=1)])
