"""Acceptance criteria 1-14; each test prints one PASS/FAIL line.

Tolerances live in supercrit.verification and are the pinned values.  The
numeric suite runs once per session; criterion 14 reruns it with 8 workers
and compares the artifact bytes.
"""
import pytest

from supercrit.verification import CRITERIA, criterion_14, run_suite


@pytest.fixture(scope="module")
def suite():
    return {r.cid: r for r in run_suite(jobs=1)}


def _report(capsys, res):
    with capsys.disabled():
        print("\n" + res.line())
    return res


@pytest.mark.parametrize("cid", sorted(CRITERIA))
def test_criterion(suite, capsys, cid):
    res = _report(capsys, suite[cid])
    assert res.passed, res.details


def test_criterion_14_determinism(suite, capsys):
    res = _report(capsys, criterion_14([suite[i] for i in sorted(suite)], jobs_pair=(1, 8)))
    assert res.passed, res.details
