"""Acceptance criteria, one test each.

Every test prints its one-line verdict straight to the terminal (also under
``pytest -v``).  Run ``python3 tests/test_acceptance.py`` for the lines alone.
"""

import time

import pytest

from subtree_census import acceptance
from subtree_census.cli import main as cli_main


def _run(fn, capsys):
    t0 = time.perf_counter()
    r = fn(cli_main) if fn is acceptance.check_counterexample else fn()
    r.elapsed = time.perf_counter() - t0
    with capsys.disabled():
        print("\n" + acceptance.format_result(r))
    return r


@pytest.mark.parametrize("fn", acceptance.CHECKS, ids=lambda f: f.__name__.removeprefix("check_"))
def test_criterion(fn, capsys):
    r = _run(fn, capsys)
    failed = [p for p in r.parts if ":FAIL" in p]
    assert r.passed, f"criterion {r.number}: " + "; ".join(failed)


if __name__ == "__main__":
    results = acceptance.run_all(cli_main=cli_main)
    raise SystemExit(0 if all(r.passed for r in results) else 1)
