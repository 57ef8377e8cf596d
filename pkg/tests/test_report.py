import math

import pytest

from crcartan.core.config import TOLERANCES, Settings
from crcartan.core.errors import CheckFailure, DomainError, OrderExhaustedError, ParseError
from crcartan.services.report import COLUMNS, CheckResult, ResidualLedger, render_table


def test_settings_tolerances():
    settings = Settings()
    assert settings.tolerance("structure") == TOLERANCES["structure"]
    assert settings.tolerance("sphericity") == settings.SPHERICITY_TOL


def test_global_tolerance_override():
    settings = Settings(CRCARTAN_TOL=1e-3)
    assert settings.tolerance("structure") == 1e-3
    assert settings.tolerance("sphericity") == 1e-3


def test_tolerance_read_from_environment(monkeypatch):
    monkeypatch.setenv("CRCARTAN_TOL", "0.5")
    assert Settings().tolerance("fefferman") == 0.5


def test_exit_codes():
    assert ParseError("bad", 1, 1).exit_code == 1
    assert DomainError("bad").exit_code == 2
    assert OrderExhaustedError("bad").exit_code == 2
    assert CheckFailure(["a/b"]).exit_code == 3


def test_parse_error_position_in_message():
    error = ParseError("expected '='", 3, 7)
    assert str(error) == "3:7: expected '='"


def test_domain_error_names_subexpression():
    error = DomainError("log undefined", "log(x)")
    assert "log(x)" in str(error)
    assert error.subexpression == "log(x)"


def test_check_result_pass_rules():
    assert CheckResult("s", "c", "", "", 1e-10, 1e-9).passed
    assert not CheckResult("s", "c", "", "", 1e-8, 1e-9).passed
    assert not CheckResult("s", "c", "", "", math.nan, 1e-9).passed
    assert CheckResult("s", "c", "", "", 0.5, 1e-3, at_least=True).passed
    assert not CheckResult("s", "c", "", "", 1e-6, 1e-3, at_least=True).passed


def test_ledger_collects_failures():
    ledger = ResidualLedger("demo")
    ledger.add("good", 1e-12, "structure", spec="heisenberg", point=[0.0, 0.0, 0.0])
    ledger.add("bad", 1.0, 1e-6, spec="sphere3", point=[1.0, 0.4, 0.3])
    ledger.add_many("group", {"x": 0.0, "y": 0.0}, "symmetry")
    assert not ledger.all_passed
    assert ledger.failed() == ["demo/bad[sphere3@1,0.4,0.3]"]
    frame = ledger.frame()
    assert list(frame.columns) == COLUMNS
    assert list(frame["check"]) == ["good", "bad", "group.x", "group.y"]


def test_ledger_extend_and_render():
    first = ResidualLedger("a")
    first.add("one", 0.0, 1e-9)
    second = ResidualLedger("b")
    second.add("two", 2.0, 1e-9)
    first.extend(second)
    table = render_table(first.frame())
    assert "FAIL" in table and "ok" in table
    assert render_table(ResidualLedger("empty").frame()) == "(no checks)"


def test_records_are_plain_python():
    ledger = ResidualLedger("demo")
    record = ledger.add("x", 1e-12, "structure").to_dict()
    assert record == {
        "suite": "demo",
        "check": "x",
        "spec": "",
        "point": "",
        "residual": pytest.approx(1e-12),
        "tolerance": 1e-9,
        "passed": True,
    }
