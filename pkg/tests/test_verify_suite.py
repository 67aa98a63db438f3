import io
from fractions import Fraction

import pytest

from app import run
from components import verify_suite
from components.verify_suite import run_suite
from utils import exact
from utils.config import RunConfig
from utils.qforms import QuadForm


@pytest.fixture
def wrong_bernoulli(monkeypatch):
    exact.bernoulli(40)
    monkeypatch.setitem(exact._BERNOULLI_MEMO, 4, Fraction(1, 7))


def test_fault_in_bernoulli_numbers_is_caught(wrong_bernoulli):
    rows = run_suite("fast", RunConfig(c_max=2000))
    failed = {row["criterion"] for row in rows if not row["passed"]}
    assert {1, 2} <= failed
    assert 3 not in failed


def test_verify_exit_code_under_fault(wrong_bernoulli):
    out, err = io.StringIO(), io.StringIO()
    assert run(["verify", "--cmax", "2000"], stdout=out, stderr=err) == 3
    assert "FAIL" in out.getvalue()


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("medium", RunConfig())


def test_invariant_suite_passes():
    assert verify_suite._invariant_failures(192) == []


def test_random_matrices_catch_an_action_broken_on_large_entries(monkeypatch):
    real_act = verify_suite.act

    def act(Q, M):
        moved = real_act(Q, M)
        if max(abs(v) for v in M.as_tuple()) > 20:
            return QuadForm(moved.A, moved.B + 1, moved.C)
        return moved

    monkeypatch.setattr(verify_suite, "act", act)
    failures = verify_suite._invariant_failures(192)
    assert failures
    assert all(f.startswith("discriminant of") for f in failures)


@pytest.mark.slow
def test_full_suite_passes():
    rows = run_suite("full", RunConfig())
    assert [row["criterion"] for row in rows] == list(range(1, 10))
    assert all(row["passed"] for row in rows), rows
