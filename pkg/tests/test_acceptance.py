"""The sixteen acceptance criteria at their stated tolerances, one PASS/FAIL line each."""

import pytest

from ahlab.acceptance import CRITERIA


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{k + 1:02d}" for k in range(len(CRITERIA))])
def test_criterion(criterion, capsys):
    result = criterion()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.details
