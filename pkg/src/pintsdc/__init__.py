"""Spectral deferred corrections, multi-level SDC and PFASST in one block controller."""

from .config import Description, parse_config
from .controller import Controller, ControllerConfig, ExecMode, LevelSpec, Predictor
from .faults import FaultConfig
from .hierarchy import LevelParams
from .quadrature import NodeKind, QDeltaKind, collocation_rule
from .stats import AllenCahnHooks, DefaultHooks, Hooks, StatsStore
from .sweeper import SweeperConfig

__version__ = "0.1.0"

__all__ = [
    "AllenCahnHooks", "Controller", "ControllerConfig", "DefaultHooks", "Description", "ExecMode",
    "FaultConfig", "Hooks", "LevelParams", "LevelSpec", "NodeKind", "Predictor", "QDeltaKind",
    "StatsStore", "SweeperConfig", "collocation_rule", "parse_config",
]
