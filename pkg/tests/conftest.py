import numpy as np
import pytest

from orthocal.kinematics import Geometry, JointOffsets, in_working_mode

L = 310.0


@pytest.fixture
def geom():
    return Geometry(L, 0.5, -0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(20070101)


def random_offsets(rng, scale, L=L):
    """Offsets drawn uniformly from the ball of radius ``scale * L``."""
    u = rng.normal(size=3)
    u /= np.linalg.norm(u)
    r = scale * L * rng.uniform() ** (1 / 3)
    return JointOffsets.from_array(u * r)


def random_workspace_point(rng, g, off, half_width=0.4):
    """TCP point in the cube |p_i| <= half_width * L, on the working-mode branch."""
    while True:
        p = rng.uniform(-half_width, half_width, 3) * g.L
        if in_working_mode(p, off, g):
            return p


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
