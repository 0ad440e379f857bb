import math

import pytest

from pdsim.models import RegimeParams

# mu(1)=0.7, lambda(1)=0.3, Q=[[0.9,0.1],[0.2,0.8]], pi=(2/3,1/3)
DERIVED_TRIPLE = dict(mu1=0.7, lambda1=0.3, Q=((0.9, 0.1), (0.2, 0.8)))


@pytest.fixture
def regime_params():
    return RegimeParams(**DERIVED_TRIPLE)


def within_sigma(count, total, p, k=3.0):
    """Binomial k-sigma agreement of count/total with p."""
    sigma = math.sqrt(p * (1.0 - p) / total)
    return abs(count / total - p) <= k * sigma + 1e-15


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, passed: bool, detail: str) -> bool:
    line = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
