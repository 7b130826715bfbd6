from pathlib import Path

import numpy as np
import pytest

from dwadmm.engine import Scenario
from dwadmm.graph import WeightedGraph, erdos_renyi
from dwadmm.objective import ObjectiveSet, QuadraticObjective

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

# filled by test_acceptance, echoed once at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


def triangle(weight=1.0):
    return WeightedGraph.from_edges(3, [(0, 1, weight), (1, 2, weight), (0, 2, weight)])


def centered_objectives(centers):
    return ObjectiveSet(QuadraticObjective.centered(c) for c in centers)


def random_quadratic_scenario(seed, nodes=10, p=0.4, dim=1, **kwargs):
    """ER graph with ``f_i(x) = 1/2 ||x - c_i||^2``, centers uniform on [-1, 1]."""
    rng = np.random.default_rng(seed)
    g = erdos_renyi(nodes, p, rng)
    centers = rng.uniform(-1.0, 1.0, size=(nodes, dim))
    objs = ObjectiveSet(QuadraticObjective.centered(c) for c in centers)
    return Scenario(g, objs, seed=seed, **kwargs)


@pytest.fixture
def triangle_scenario():
    return Scenario(triangle(), centered_objectives([0.0, 0.0, 3.0]))
