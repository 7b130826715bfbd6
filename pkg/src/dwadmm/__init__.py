"""Dynamically weighted ADMM for Byzantine-resilient decentralized consensus optimization."""

from .adversary import AttackSpec, corrupt
from .config import parse_scenario, scenario_to_config
from .engine import IterateState, RunRecord, Scenario, init, iterate, run, step
from .errors import DWADMMError, ScenarioError, SolverError
from .graph import WeightedGraph, build_laplacians, validate_assumptions
from .objective import LogisticObjective, ObjectiveSet, QuadraticObjective
from .trustweights import TrustState, WeightPolicy

__all__ = [
    "AttackSpec",
    "DWADMMError",
    "IterateState",
    "LogisticObjective",
    "ObjectiveSet",
    "QuadraticObjective",
    "RunRecord",
    "Scenario",
    "ScenarioError",
    "SolverError",
    "TrustState",
    "WeightPolicy",
    "WeightedGraph",
    "build_laplacians",
    "corrupt",
    "init",
    "iterate",
    "parse_scenario",
    "run",
    "scenario_to_config",
    "step",
    "validate_assumptions",
]

__version__ = "0.1.0"
