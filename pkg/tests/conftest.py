import numpy as np
import pytest

from stashuttle import PhysicalParams

TWO_PI_MHZ = 2 * np.pi * 1e6


@pytest.fixture
def params():
    """Sr-88 reference point used throughout: 4 MHz trap, 50 um in 2 us."""
    return PhysicalParams(mass=1.455e-25, omega0=4 * TWO_PI_MHZ,
                          distance=50e-6, duration=2e-6)
