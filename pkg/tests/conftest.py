import numpy as np
import pytest

from robovdi.camera import CameraModel
from robovdi.raster import warmup
from robovdi.sim.scenarios import default_camera, load_arm6

ACCEPTANCE_LINES: list[str] = []


def pytest_sessionstart(session):
    warmup()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def arm6():
    return load_arm6()


@pytest.fixture
def cam640():
    """Centered 640x480 camera at the origin looking down +Z."""
    return CameraModel(640, 480, 600.0, 600.0, 320.0, 240.0, 0.5, 3.0)


@pytest.fixture
def cam160():
    return default_camera(160, 120)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
