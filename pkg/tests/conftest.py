import numpy as np
import pytest

from chromofluid.forms import Grid
from chromofluid.lie import make_algebra


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid32():
    return Grid((32, 32))


@pytest.fixture(scope="session")
def grid3d():
    return Grid((16, 16, 16))


@pytest.fixture(scope="session")
def u1():
    return make_algebra("u1")


@pytest.fixture(scope="session")
def su2():
    return make_algebra("su2")


@pytest.fixture(scope="session")
def su3():
    return make_algebra("su3")


def pytest_terminal_summary(terminalreporter):
    from collections import OrderedDict

    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    by_crit = OrderedDict()
    for crit, part, ok, detail in sorted(RESULTS, key=lambda r: r[0]):
        by_crit.setdefault(crit, []).append((part, ok, detail))
    terminalreporter.section("acceptance criteria")
    for crit, parts in by_crit.items():
        ok = all(p[1] for p in parts)
        body = "; ".join(f"{p[0]}: {p[2]}{'' if p[1] else ' (FAIL)'}" for p in parts)
        terminalreporter.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}  {body}")
