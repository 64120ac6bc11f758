"""Byzantine-robust federated learning simulator with spatial-temporal aggregation."""

from .aggregation import AggregationRule
from .attacks import AttackSpec
from .models import TrainConfig
from .simulation import ScenarioConfig, run_experiment
from .stpa import StpaConfig

__all__ = [
    "AggregationRule",
    "AttackSpec",
    "TrainConfig",
    "ScenarioConfig",
    "StpaConfig",
    "run_experiment",
]
