import pytest

from kfwer import ConfigurationError
from kfwer.verify import SUITE_NAMES, SUITES, CheckResult, run_suite


def test_suite_registry():
    assert set(SUITES) == {
        "table1", "table2", "lemma21", "exactness", "dominance", "monotonicity",
    }
    assert SUITE_NAMES[-1] == "all"


def test_unknown_suite_raises():
    with pytest.raises(ConfigurationError):
        run_suite("no_such_suite")


def test_fast_suites_pass():
    for name in ("dominance", "monotonicity"):
        results = run_suite(name)
        assert results
        assert all(isinstance(r, CheckResult) for r in results)
        assert all(r.passed for r in results), name
        # deterministic set-inclusion checks carry a zero tolerance
        assert all(r.tolerance >= 0 for r in results)


def test_table1_suite_shape_and_passes():
    results = run_suite("table1")
    # one aggregated check per (rho block, table column)
    assert len(results) == 40
    assert all(r.passed for r in results)
