import numpy as np
import pytest
from hypothesis import settings

from edgecache.caching import from_requests

# first calls pay numba compilation, so per-example deadlines are meaningless
settings.register_profile("edgecache", deadline=None)
settings.load_profile("edgecache")

# Three WCSs and three files b1, b2, b3 (ids 0, 1, 2).
# WCS 0 wants b1 and holds b2; WCS 1 wants b1, b2 and holds b3; WCS 2 wants b3 and holds b1.
THREE_WCS_REQUESTS = [{0}, {0, 1}, {2}]
THREE_WCS_SIDE = [{1}, {2}, {0}]
# vertices in sorted order: v1=(0,0), v2=(1,0), v3=(1,1), v4=(2,2)
THREE_WCS_ORDER = [1, 2, 3, 0]  # v2, v3, v4, v1


@pytest.fixture
def three_wcs():
    return from_requests(THREE_WCS_REQUESTS, THREE_WCS_SIDE)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
