import numpy as np
import pytest

from gridscan.block import block_geometry


@pytest.fixture(scope="session")
def g22():
    return block_geometry(2, 2)


@pytest.fixture(scope="session")
def g23():
    return block_geometry(2, 3)


@pytest.fixture(scope="session")
def g33():
    return block_geometry(3, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_pair(rng, g, q, slot=None):
    """Fully coloured boundaries differing exactly at ``slot``."""
    slot = g.slots[0] if slot is None else slot
    Z = [int(c) for c in rng.integers(1, q + 1, g.n_boundary)]
    Z2 = list(Z)
    Z2[slot] = int(rng.choice([c for c in range(1, q + 1) if c != Z[slot]]))
    return tuple(Z), tuple(Z2)


# one line per acceptance criterion, printed at the end of the run
CRITERIA: dict[int, str] = {}


def record(number: int, passed: bool, detail: str) -> None:
    CRITERIA[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}"
    print(CRITERIA[number])


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
