import numpy as np
import pytest

from ssmeta.encoding import INTERCEPT, DesignMatrix
from ssmeta.meta_db import write_database
from ssmeta.synthetic import make_database


def design(columns: dict, y) -> DesignMatrix:
    """DesignMatrix with an intercept followed by the given named columns."""
    names = (INTERCEPT, *columns)
    y = np.asarray(y, dtype=float)
    X = np.column_stack([np.ones(y.size), *[np.asarray(c, float) for c in columns.values()]])
    return DesignMatrix(names, X, y)


@pytest.fixture(scope="session")
def synthetic_db():
    return make_database(n=4687, seed=0)


@pytest.fixture(scope="session")
def small_db():
    return make_database(n=600, seed=3)


@pytest.fixture(scope="session")
def small_db_csv(small_db, tmp_path_factory):
    path = tmp_path_factory.mktemp("db") / "small.csv"
    write_database(small_db, path)
    return path


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
