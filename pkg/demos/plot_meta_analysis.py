"""
Meta-Regression of Skill Scores
===============================

The full workflow on a synthetic database with the published schema:
load, describe, split by horizon, fit linear models and MARS, then read the
horizon effect off a partial dependence curve.  Point ``SSMETA_DATABASE``
at the real file to run the same steps on it.
"""
import os
import tempfile

from ssmeta import (MarsConfig, build_design_matrix, fit_mars, load_database,
                    partial_dependence, partition_by_horizon, run_horizon_regressions,
                    summarize, write_database)
from ssmeta.report import format_regression_table
from ssmeta.synthetic import make_database

###############################################################################
# Load the database
# -----------------

path = os.environ.get("SSMETA_DATABASE")
if path is None:
    path = os.path.join(tempfile.mkdtemp(), "synthetic.csv")
    write_database(make_database(), path)
ds = load_database(path)
print(f"{ds.row_count} rows, {len(ds.rejected)} rejected")

###############################################################################
# Describe and partition
# ----------------------

for var in ("SS", "Horizon", "Year"):
    s = summarize(ds, var)
    print(f"{var:<8} mean={s.mean:9.2f} sd={s.sd:9.2f} median={s.median:8.2f}")
print({k: len(v) for k, v in partition_by_horizon(ds).items()})

###############################################################################
# Linear model per horizon class
# ------------------------------
# Categorical factors enter as dummies against their baselines.

print(format_regression_table(run_horizon_regressions(ds)))

###############################################################################
# MARS on the whole database
# --------------------------

dm = build_design_matrix(ds)
model = fit_mars(dm, MarsConfig(max_degree=2, max_terms=34))
print(model.summary())

###############################################################################
# Horizon effect
# --------------
# The curve rises over short horizons and flattens or falls beyond a few
# hours.

grid = partial_dependence(model, dm, "Horizon", grid=[[1, 30, 60, 120, 360, 720, 1440, 2880]])
for h, pd in zip(grid.grid_values[:, 0], grid.averaged_predictions):
    print(f"Horizon {h:6.0f} min: {pd:6.2f}")
