import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from polyplan import BasisSpec, PendulumSystem


UNIT_SQUARE_A = np.vstack([np.eye(2), -np.eye(2)])
UNIT_SQUARE_B = np.array([1.0, 1.0, 0.0, 0.0])


@pytest.fixture
def square():
    return UNIT_SQUARE_A.copy(), UNIT_SQUARE_B.copy()


@pytest.fixture
def pendulum_w1():
    """Torque-starved short-horizon pendulum (n=5, T=0.5, u_max=0.5)."""
    return PendulumSystem(m=0.1, l=1.0, g=9.81, u_max=0.5,
                          spec=BasisSpec(n=5, T=0.5))


@pytest.fixture
def pendulum_small():
    """Small fast system for decomposition-level tests."""
    return PendulumSystem(m=0.1, l=1.0, g=9.81, u_max=2.0,
                          spec=BasisSpec(n=3, T=0.4))
