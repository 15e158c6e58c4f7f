import numpy as np
import pytest

from sleap.config import SolverConfig
from sleap.model import SystemState, load_builtin, parse_network
from sleap.sampling import RngStream


@pytest.fixture
def dimer():
    return load_builtin("dimer_nonstiff")


@pytest.fixture
def stiff_dimer():
    return load_builtin("dimer_stiff")


@pytest.fixture
def bsubtilis():
    return load_builtin("bsubtilis")


@pytest.fixture
def isomerization():
    return load_builtin("isomerization")


@pytest.fixture
def decay():
    """Single first-order decay S1 -> 0 with c=1 and x1=100."""
    return parse_network("species S1\ninit 100\nreaction R1 : S1 -> 0 ; rate 1.0\n", "decay")


@pytest.fixture
def config():
    return SolverConfig()


@pytest.fixture
def rng():
    return RngStream(seed=12345, stream_id=0)


@pytest.fixture
def stiff_equilibrium_state():
    # R2/R3 of the stiff dimerization within delta of each other
    return SystemState(np.array([1989, 39565, 3445], dtype=np.int64), 0.0)
