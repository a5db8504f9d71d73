import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trseig.sparse import BOperator, SparseSymMatrix, TrsProblem

settings.register_profile(
    "suite", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")

ACCEPTANCE_LINES = []


def problem(a, g, delta, b=None):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0]
    return TrsProblem(SparseSymMatrix.from_dense(a), b or BOperator.identity(n), np.asarray(g, dtype=float), delta)


@pytest.fixture
def scalar_boundary():
    # A = [-1], B = [1], g = (1), delta = 1: lambda = 2, s = -1
    return problem([[-1.0]], [1.0], 1.0)


@pytest.fixture
def acceptance_line():
    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
