import numpy as np
import pytest

from sarlift import (
    CircularArcTrajectory,
    ImagingGeometry,
    SamplingGrid,
    TransmitterModel,
    build_scene_grid,
    default_phantom,
)


@pytest.fixture(scope="session")
def paper_grid():
    return build_scene_grid(11, 10.0)


@pytest.fixture(scope="session")
def paper_geometry():
    rx1 = CircularArcTrajectory(7000.0, 5000.0, (0.0, np.pi / 2), offset=0.0)
    rx2 = CircularArcTrajectory(7000.0, 5000.0, (0.0, np.pi / 2),
                                offset=np.pi / 4)
    tx = TransmitterModel([12000.0, 12000.0, 5000.0])
    return ImagingGeometry(rx1, rx2, tx)


@pytest.fixture(scope="session")
def paper_phantom(paper_grid):
    return default_phantom(paper_grid)


@pytest.fixture(scope="session")
def collocated_geometry(paper_geometry):
    rx1 = paper_geometry.receiver1
    return ImagingGeometry(rx1, rx1, paper_geometry.transmitter)


@pytest.fixture
def small_grid():
    return build_scene_grid(3, 10.0)


def make_sampling(fc_hz=2e9, bw_hz=8e6, m=4, p=16, interval=(0.0, np.pi / 2)):
    return SamplingGrid(2 * np.pi * fc_hz, 2 * np.pi * bw_hz, m, interval, p)


@pytest.fixture
def small_sampling():
    return make_sampling(m=3, p=8)
