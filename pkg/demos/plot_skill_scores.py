"""
Skill Scores Against Reference Forecasts
========================================

Score a forecast against persistence, smart persistence, climatology and
the convex combination of smart persistence with climatology.
"""
import numpy as np

from ssmeta import SolarSeries, optimize_alpha, score_forecast
from ssmeta.synthetic import make_series

###############################################################################
# A day of 5-minute irradiance
# ----------------------------
# The synthetic series is a clear-sky curve times an AR(1) clearness index.
# One day trains the mixing weight, the next is scored.

train_x, train_ics = make_series(n=144, seed=1)
test_x, test_ics = make_series(n=144, seed=2)
train = SolarSeries(train_x, 5.0, train_ics)
test = SolarSeries(test_x, 5.0, test_ics)

###############################################################################
# A forecast to evaluate
# ----------------------
# A noisy version of the truth stands in for a real model.

rng = np.random.default_rng(0)
forecast = test_x * rng.normal(1.0, 0.08, test_x.size)

###############################################################################
# One skill score per reference
# -----------------------------
# Positive values mean the forecast beats the reference.  The CP weight is
# fitted on the training day.

h = 3
print(f"alpha fitted on the training day: {optimize_alpha(train, h):.4f}")
for ref in ("persistence", "sp", "climatology", "cp"):
    res = score_forecast(test, forecast, ref, h=h, train=train)
    print(f"{res.reference_kind:<12} RMSE_ref={res.rmse_reference:8.2f}  "
          f"SS={res.ss_pct:6.2f}%  scored={res.n_scored}")
