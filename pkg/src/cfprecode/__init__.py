"""Cell-free multi-user MIMO precoding laboratory.

A permutation-equivariant GNN precoder trained without labels against
WMMSE/MRT numerical baselines, plus executable checks of the symmetry
mathematics it is built on.
"""

from .aagnn import (ModelConfig, ModelParams, forward, init_params,
                    load_checkpoint, save_checkpoint)
from .baselines import WmmseOptions, WmmseTrace, mrt, normalized_sum_rate, wmmse
from .estimator import AagnnPrecoder
from .objective import per_ap_power, rate_report, sinr_direct, sinr_masked, sum_rate
from .scenario import Dataset, Scenario, generate_dataset, load_dataset, save_dataset
from .training import History, TrainConfig, TrainingDiverged, evaluate, train

__all__ = [
    "AagnnPrecoder", "Dataset", "History", "ModelConfig", "ModelParams",
    "Scenario", "TrainConfig", "TrainingDiverged", "WmmseOptions",
    "WmmseTrace", "evaluate", "forward", "generate_dataset", "init_params",
    "load_checkpoint", "load_dataset", "mrt", "normalized_sum_rate",
    "per_ap_power", "rate_report", "save_checkpoint", "save_dataset",
    "sinr_direct", "sinr_masked", "sum_rate", "train", "wmmse",
]

__version__ = "0.1.0"
