"""Acceptance gate: every regression criterion at its stated tolerance.

Each criterion prints one PASS/FAIL line; the lines are also gathered into
the terminal summary so they show up even when output capture is on.
Run this file directly for the plain listing.
"""

import pytest

from mpnr_lab.verify import CRITERIA

RESULTS = {}


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion{n:02d}")
def test_criterion(number):
    result = CRITERIA[number]()
    RESULTS[number] = result.line()
    print(result.line())
    assert result.passed, result.line()


def test_all_criteria_present():
    assert sorted(CRITERIA) == list(range(1, 14))


if __name__ == "__main__":
    failed = 0
    for n in sorted(CRITERIA):
        res = CRITERIA[n]()
        failed += not res.passed
        print(res.line(), flush=True)
    raise SystemExit(1 if failed else 0)
