import math
import sys
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fraclos import domain_boundary_polyline, make_domain  # noqa: E402
from oracles import PolylineOracle  # noqa: E402

REFERENCE = [(2, 0.4), (2, 0.7), (3, 0.3), (3, 0.5)]
ORACLE_LEVEL = 12


@lru_cache(maxsize=None)
def reference_domain(family, theta):
    return make_domain(family, theta)


@lru_cache(maxsize=None)
def polyline_oracle(family, theta, level=ORACLE_LEVEL):
    d = reference_domain(family, theta)
    verts = domain_boundary_polyline(d, level)
    # finer buckets for the long F3 polylines
    return PolylineOracle(verts, cell=0.02 if len(verts) > 100_000 else 0.05)


@pytest.fixture(params=REFERENCE, ids=lambda p: f"F{p[0]}({p[1]})")
def ref(request):
    return reference_domain(*request.param)


@pytest.fixture
def koch():
    return make_domain(2, math.pi / 6)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(name, passed, detail):
        _ACCEPTANCE.append((name, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
