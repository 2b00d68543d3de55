import numpy as np
import pytest

import taperod


@pytest.fixture(scope="session")
def ref_spec():
    return taperod.reference_spec()


@pytest.fixture(scope="session")
def cylinder_spec():
    # same material and length, no taper: closed-form oracles apply
    return taperod.RobotSpec(length=0.345, base_radius=0.0111,
                             tip_radius=0.0111, youngs_modulus=67e6,
                             poisson_ratio=0.39)


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels(ref_spec):
    """First call of each jitted kernel compiles it; do that before any
    timed assertion runs."""
    taperod.shoot(ref_spec, [1.0, 0.0, 0.0])
    state = taperod.RodState.straight()
    taperod.rhs_actuated(ref_spec, state, 0.1, [1.0, 0.0, 0.0])
