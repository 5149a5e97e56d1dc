"""Person and vehicle trip prediction with a small from-scratch neural network."""
__version__ = "0.1.0"

from .data import (FEATURES, NHTS_SCHEMA, TARGETS, CleanReport, Dataset, FeatureSchema,
                   RawTable, ScalerParams, apply_scaler, assemble, clean, fit_scaler,
                   invert_scaler, parse_csv, split, synthesize, truth)
from .evaluation import EvalReport, ZeroPolicy, evaluate_model, export_pairs, mape
from .nn import Activation, DenseLayer, Network, init_network, paper_architecture, param_count
from .numerics import Rng
from .train import LossCurve, TrainConfig, TrainedModel, train
from .tune import GridSpec, TuneResult, grid_search, kfold_indices
