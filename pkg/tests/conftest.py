import math
import random
from fractions import Fraction

import pytest

from obstacle_bbm.blocks import landscape_from_widths, random_widths
from obstacle_bbm.landscape import validate_landscape
from obstacle_bbm.plan import feasibility

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def feasible_fuzz_landscapes(count: int, seed: int, ells=(1, 2, 3)):
    """Fuzzed landscapes kept only when crossable, cycling through ``ells``.

    Cheap necessary condition first: every branching stretch takes longer
    than ``a / sqrt 2``, so ``sum a > sqrt 2`` can never be crossed in time 1.
    """
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        ell = ells[len(out) % len(ells)]
        raw = random_widths(rng, ell)
        if sum(p / q for p, q in raw[:ell]) > math.sqrt(2.0):
            continue
        L = landscape_from_widths(raw)
        if feasibility(L)[1]:
            out.append(L)
    return out


@pytest.fixture(scope="session")
def feasible_pool():
    return feasible_fuzz_landscapes(100, seed=20240501)


@pytest.fixture
def single():
    return validate_landscape([(Fraction(3, 10), Fraction(1, 5))])


@pytest.fixture
def equal3():
    return validate_landscape([(1, 1), (1, 1), (1, 1)])


@pytest.fixture
def late_cheap_pair():
    return validate_landscape([(1, Fraction(1, 10)), (1, Fraction(3, 10))])
