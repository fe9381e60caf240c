"""Shared fixtures: the six-agent demo system used across the suite.

The demo plant drives two-state references through a scalar input; the
communication graph is a six-cycle with one chord, whose algebraic
connectivity is exactly 1. DEMO_Q is calibrated so the Riccati design
reproduces the published gain matrices of the original six-agent experiment
(with Q = I the same plant yields K = -(sqrt(2)-1) * [1, 1]).
"""

from pathlib import Path

import numpy as np
import pytest

from avgtrack.controllers import design_gains
from avgtrack.graph import Topology
from avgtrack.signals import InputFamily, Plant, SinusoidInput

REPO_ROOT = Path(__file__).resolve().parent.parent
DEMO_CONFIG = REPO_ROOT / "scenarios" / "six_agent_demo.json"
STATIC_CONFIG = REPO_ROOT / "scenarios" / "six_agent_static.json"

DEMO_A = np.array([[0.0, 1.0], [-1.0, -2.0]])
DEMO_B = np.array([[0.0], [1.0]])

# Q calibrated so the CARE solution has second row exactly (1.5728, 4.3293),
# i.e. K = [-1.5728, -4.3293] and Gamma = K^T K.
_KB1, _KB2 = 1.5728, 4.3293
DEMO_Q = np.diag([_KB1**2 + 2.0 * _KB1, _KB2**2 + 4.0 * _KB2 - 2.0 * _KB1])
DEMO_K = np.array([[-_KB1, -_KB2]])

DEMO_EDGES = ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3))


def demo_plant() -> Plant:
    return Plant(a=DEMO_A.copy(), b=DEMO_B.copy())


def demo_topology() -> Topology:
    return Topology(vertex_count=6, edges=DEMO_EDGES)


def ramped_sine_family(agent_count: int = 6) -> InputFamily:
    """f_i(t) = (i+2)/2 * sin(t) for zero-based agent index i."""
    specs = tuple(SinusoidInput(amplitude=((i + 2) / 2.0,)) for i in range(agent_count))
    return InputFamily(specs=specs, input_dim=1)


@pytest.fixture(scope="session")
def demo_gains():
    return design_gains(
        demo_plant(), demo_topology(), ramped_sine_family(), DEMO_Q, eps=5.0, phi=0.5
    )


@pytest.fixture(scope="session")
def demo_gains_phi0():
    return design_gains(
        demo_plant(), demo_topology(), ramped_sine_family(), DEMO_Q, eps=5.0, phi=0.0
    )
