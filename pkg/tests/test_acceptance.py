"""All acceptance criteria at their stated tolerances, one pass/fail line each.

Monte Carlo criteria are marked slow; deselect them with ``-m "not slow"``.
Run with ``-s`` to see the lines as they are produced.
"""
import os

import pytest

from sphcrit.acceptance import CRITERIA, MONTE_CARLO
from sphcrit.experiments import DEFAULT_SEED

SEED = int(os.environ.get("HCL_SEED", DEFAULT_SEED))


def _param(n):
    marks = [pytest.mark.slow] if n in MONTE_CARLO else []
    return pytest.param(n, id=f"{n:02d}_{CRITERIA[n].label.replace(' ', '_')}", marks=marks)


@pytest.mark.parametrize("number", [_param(n) for n in sorted(CRITERIA)])
def test_criterion(number):
    result = CRITERIA[number](SEED)
    print(result.line())
    assert result.passed, f"{result.line()}\n{result.details}"
