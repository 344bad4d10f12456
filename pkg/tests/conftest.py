import numpy as np
import pytest

from hasimoto.geometry import ConstK, Grassmann, Sphere2

BACKENDS = {
    "S2": Sphere2(1.0),
    "S2k": Sphere2(2.5),
    "G21": Grassmann(2, 1),
    "G31": Grassmann(3, 1),
    "G42": Grassmann(4, 2),
    "CK3": ConstK(3, 4.0),
    "CK2": ConstK(2, 2.5),
}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return BACKENDS[request.param]


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    lines = [test_acceptance.SUMMARY[k] for k in sorted(test_acceptance.SUMMARY)]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
