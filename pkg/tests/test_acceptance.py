"""One test per acceptance criterion; each prints its PASS/FAIL line.

Run directly (python tests/test_acceptance.py) for the plain report.
"""
import re
import sys

import pytest

from csk import acceptance


@pytest.mark.parametrize("number", [n for n, _, _ in acceptance.CRITERIA],
                         ids=[f"c{n:02d}_" + re.sub(r"\W+", "_", name.lower()).strip("_")
                              for n, name, _ in acceptance.CRITERIA])
def test_criterion(number, capsys):
    result = acceptance.run_criterion(number)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail


if __name__ == "__main__":
    results = acceptance.run_suite()
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)
