import numpy as np
import pytest

from scattering import EnsembleParams


@pytest.fixture
def rng():
    return np.random.default_rng(20250117)


@pytest.fixture
def weak():
    """beta = 5%, two atoms, OD = 0.4, drive 0.02 Gamma_tot."""
    return EnsembleParams(beta=0.05, num_atoms=2, drive_power=0.02)


@pytest.fixture
def single():
    return EnsembleParams(beta=0.05, num_atoms=1, drive_power=0.02)


@pytest.fixture
def empty():
    return EnsembleParams(beta=0.05, num_atoms=0, drive_power=0.02)
