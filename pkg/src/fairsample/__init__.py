"""Measurement toolkit for sample-size and underrepresentation bias in
fairness evaluation of trained models."""

__version__ = "0.1.0"

from .dataset import (Dataset, SamplingPlan, Schema, draw_sample,
                      holdout_split, load_csv, population_ratio)
from .learners import FittedModel, Learner, fit
from .group_metrics import GroupCostReport, disc_vector, group_cost
from .decomposition import (PredictionEnsemble, decompose_bias_gap,
                            decompose_cost, decompose_points,
                            main_prediction, sd_bounds)
from .bias_estimators import BiasEstimate, ssb, ssb_single, urb, urb_single
from .experiments import (SweepResult, SweepSpec, aggregate, run_collect_sim,
                          run_decomposition_sweep, run_ssb_sweep,
                          run_urb_sweep)
from .synth import SynthSpec, generate, oracle_decomposition, oracle_metrics
from .errors import ConfigError, DataError, FairsampleError
