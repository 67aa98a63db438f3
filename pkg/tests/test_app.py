import io
import json

from app import run


def _run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_dedekind_json():
    code, out, _ = _run("dedekind", "--k", "2", "--N", "2", "--D", "17", "--json")
    assert code == 0
    record = json.loads(out)
    assert record["exact"]["symbolic"] == "4*pi^4/(51*sqrt(17))"
    assert record["exact"]["q"] == "4/51"
    assert record["inner_sums"] == {"1": 4, "2": 20}
    assert float(record["abs_gap"]) < 1e-10
    assert record["precision_bits"] == 192
    assert isinstance(record["numeric"], str)


def test_dedekind_text():
    code, out, _ = _run("dedekind", "--k", "2", "--N", "3", "--D", "145")
    assert code == 0
    assert "128*pi^4/(435*sqrt(145))" in out
    assert "d=1: 64, d=3: 640" in out


def test_domain_errors_exit_one():
    code, _, err = _run("dedekind", "--k", "3", "--N", "2", "--D", "17")
    assert code == 1
    assert err.startswith("error: BadWeight:")

    code, _, err = _run("zeta", "--k", "2", "--N", "2", "--D", "17", "--rho", "2")
    assert code == 1
    assert "error: CongruenceViolation:" in err


def test_usage_errors_exit_two():
    assert _run("dedekind", "--k", "2", "--N", "2")[0] == 2
    assert _run("dedekind", "--k", "2", "--N", "2", "--D", "17", "--prec", "32")[0] == 2
    assert _run("no-such-command")[0] == 2


def test_forms_json():
    code, out, _ = _run("forms", "--N", "2", "--D", "17", "--rho", "1", "--json")
    assert code == 0
    record = json.loads(out)
    assert record["count"] == 6
    assert record["count_by_side"] == {"a<0<c": 3, "a>0>c": 3}
    assert record["algebraic_part"] == {"X^0": "-8", "X^1": "0", "X^2": "16"}
    assert record["c_power_sum"] == -8


def test_forms_text():
    code, out, _ = _run("forms", "--N", "2", "--D", "17", "--rho", "1")
    assert code == 0
    assert "16" in out


def test_zeta_and_zeta_diff():
    code, out, _ = _run("zeta", "--k", "2", "--N", "1", "--D", "5", "--rho", "1", "--cmax", "2000", "--json")
    assert code == 0
    record = json.loads(out)
    assert record["heuristic_tail"] is True
    assert float(record["abs_gap_to_euler"]) < 0.05

    code, out, _ = _run("zeta-diff", "--k", "3", "--N", "2", "--D", "17", "--rho", "1", "--cmax", "2000", "--json")
    assert code == 0
    record = json.loads(out)
    assert record["exact"]["symbolic"] == "0"
    assert record["within_tail"] is True

    code, _, err = _run("zeta-diff", "--k", "2", "--N", "2", "--D", "17", "--rho", "1")
    assert code == 1
    assert "EvenWeight" in err


def test_cache_reuses_records(tmp_path):
    cache = tmp_path / "cache.jsonl"
    argv = ("dedekind", "--k", "2", "--N", "2", "--D", "17", "--json", "--cache", str(cache))
    first = _run(*argv)
    second = _run(*argv)
    assert first[0] == second[0] == 0
    assert first[1] == second[1]
    assert len(cache.read_text().splitlines()) == 1


def test_precision_from_environment_and_flag(monkeypatch):
    monkeypatch.setenv("QPZ_PRECISION_BITS", "128")
    _, out, _ = _run("dedekind", "--k", "2", "--N", "1", "--D", "5", "--json")
    assert json.loads(out)["precision_bits"] == 128
    _, out, _ = _run("dedekind", "--k", "2", "--N", "1", "--D", "5", "--json", "--prec", "256")
    assert json.loads(out)["precision_bits"] == 256


def test_verify_fast_suite():
    code, out, _ = _run("verify", "--json", "--cmax", "20000")
    record = json.loads(out)
    assert code == 0
    assert record["passed"] is True
    assert [row["criterion"] for row in record["rows"]] == [1, 2, 3, 4, 5, 9]
