"""Skill-score verification and meta-regression tools for solar forecasts."""

__version__ = "0.1.0"

from .encoding import DesignMatrix, build_design_matrix, drop_degenerate_columns
from .linreg import OlsFit, ols_fit, run_horizon_regressions
from .mars import (BasisFactor, BasisTerm, MarsConfig, MarsModel, backward_prune,
                   cross_validate, default_cv_grid, eval_term, fit_mars, forward_pass, predict)
from .meta_db import (Dataset, ObservationRecord, SummaryStats, load_database,
                      partition_by_horizon, summarize, write_database)
from .pdp import PdpGrid, partial_dependence
from .skill import (SkillScoreResult, SolarSeries, climatology_forecast, cp_forecast,
                    optimize_alpha, persistence_forecast, rmse, score_forecast, skill_score,
                    smart_persistence_forecast)
