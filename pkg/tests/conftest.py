import numpy as np
import pytest

from sidewalk_rsp.network import Network, OdPair, Segment


def make_net(edges, lengths=None):
    lengths = lengths or [1.0] * len(edges)
    return Network([Segment(i, a, b, float(l)) for i, ((a, b), l) in enumerate(zip(edges, lengths))])


@pytest.fixture
def diamond():
    # 0 -> 1 -> 3 and 0 -> 2 -> 3
    return make_net([(0, 1), (0, 2), (1, 3), (2, 3)]), OdPair(0, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
