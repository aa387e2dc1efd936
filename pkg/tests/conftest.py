import math

import pytest

from cyclesense import Grid, ProbeSpec, make_gaussian

LAB_WAVELENGTH = 780e-9
LAB_WAVE_NUMBER = 2.0 * math.pi / LAB_WAVELENGTH


@pytest.fixture(scope="session")
def unit_grid():
    """Dimensionless grid: k = 1 scale problems, w0 of order one."""
    return Grid(1 << 13, 24.0)


@pytest.fixture(scope="session")
def unit_probe(unit_grid):
    """Centered Gaussian with w0 = 2 (DeltaX = 1, DeltaP = 1/2) at k = 1."""
    return make_gaussian(ProbeSpec(2.0, 1.0), unit_grid)


@pytest.fixture(scope="session")
def lab_spec():
    """The tabletop probe: 2 mm waist radius at 780 nm."""
    return ProbeSpec(2e-3, LAB_WAVE_NUMBER)
