"""The ten acceptance criteria at full budgets and their stated tolerances.

Each test prints its criterion line; ``conftest.py`` repeats all of them in
the terminal summary so a ``pytest -v`` log carries one line per criterion.
"""

from __future__ import annotations

import pytest

from mongelab.acceptance import LIMITS, TITLES, run_criterion

RESULTS: dict = {}


@pytest.mark.parametrize("number", range(1, 11), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number, tmp_path):
    res = run_criterion(number, tier="full", seed=0, out=tmp_path)
    line = res.line
    if LIMITS[number] is not None and res.runtime >= LIMITS[number]:
        line += " over time limit"
    RESULTS[number] = line
    print(line)
    assert res.title == TITLES[number]
    assert res.passed, res.details
    if LIMITS[number] is not None:
        assert res.runtime < LIMITS[number]
