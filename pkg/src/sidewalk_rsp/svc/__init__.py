"""Support-vector-clustering uncertainty sets."""

from .grouping import Grouping, GroupingMethod, group_dimensions, stage_one, tsc_ds
from .kernel import WgikKernel, build_wgik, wgik
from .models import (DegenerateData, L1Set, MklModel, SvcModel, kernel_directions,
                     membership, train_mkl, train_svc)
from .qp import NoConvergence, solve_svc_dual
from .serialize import dumps_model, dumps_models, loads_model, loads_models

__all__ = [
    "DegenerateData", "Grouping", "GroupingMethod", "L1Set", "MklModel", "NoConvergence",
    "SvcModel", "WgikKernel", "build_wgik", "dumps_model", "dumps_models", "group_dimensions",
    "kernel_directions", "loads_model", "loads_models", "membership", "solve_svc_dual",
    "stage_one", "train_mkl", "train_svc", "tsc_ds", "wgik",
]
