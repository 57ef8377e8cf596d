import json

import pytest

from crcartan.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_analyze_heisenberg_json(capsys):
    code, out, _ = run(capsys, "analyze", "heisenberg", "--point", "0,0,0", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["spec"] == "heisenberg"
    assert payload["order"] == 6
    assert payload["sphericity"]["verdict"] == "spherical-at-point"
    assert payload["sphericity"]["deciding_tensor"] == "Q"
    assert payload["scalars"]["R"] == pytest.approx(0.0, abs=1e-9)


def test_analyze_is_deterministic(capsys):
    _, first, _ = run(capsys, "analyze", "sphere3", "--point", "1.0,0.4,0.3", "--format", "json")
    _, second, _ = run(capsys, "analyze", "sphere3", "--point", "1.0,0.4,0.3", "--format", "json")
    assert first == second


def test_analyze_table_output(capsys):
    code, out, _ = run(capsys, "analyze", "sphere3", "--point", "1.0,0.4,0.3")
    assert code == 0
    assert "sphericity" in out
    assert "spherical-at-point" in out


def test_fefferman_sphere(capsys):
    code, out, _ = run(capsys, "fefferman", "sphere3", "--point", "1.0,0.4,0.3", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["metric"]["signature"] == [3, 1]
    assert payload["expected_scalar"] == pytest.approx(12.0, abs=1e-7)
    assert payload["ricci_direct"]["scalar"] == pytest.approx(12.0, abs=1e-7)


def test_parse_error_exit_code(capsys):
    code, _, err = run(capsys, "analyze", 'manifold "m" { n = 1 coords = [a, b] }', "--point", "0,0")
    assert code == 1
    assert err.startswith("error: 1:")
    assert "arity mismatch" in err


def test_wrong_point_arity_exit_code(capsys):
    code, _, err = run(capsys, "analyze", "heisenberg", "--point", "0,0")
    assert code == 2
    assert "needs 3 coordinates" in err


def test_unreadable_point_exit_code(capsys):
    code, _, _ = run(capsys, "analyze", "heisenberg", "--point", "a,b,c")
    assert code == 2


def test_negative_levi_form_exit_code(capsys, heisenberg_listing):
    code, _, err = run(capsys, "analyze", heisenberg_listing, "--point", "0,0,0")
    assert code == 2
    assert "not strictly pseudoconvex" in err


def test_unknown_spec_name(capsys):
    code, _, err = run(capsys, "analyze", "no_such_manifold", "--point", "0,0,0")
    assert code == 2
    assert "unknown spec" in err


def test_check_jets_passes(capsys):
    code, out, _ = run(capsys, "check", "jets", "--points", "1", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["suite"] == "jets"
    assert payload["passed"] is True


def test_unknown_suite_is_rejected_by_parser():
    with pytest.raises(SystemExit):
        main(["check", "nope"])


def test_specs_lists_shipped_examples(capsys):
    code, out, _ = run(capsys, "specs")
    assert code == 0
    names = {line.split("\t")[0] for line in out.splitlines()}
    assert names == {"heisenberg", "sphere3", "heis_pert", "heis_holo", "heis2", "heis2_pert"}


def test_check_with_no_points_exit_code(capsys):
    code, out, err = run(capsys, "check", "jets", "--points", "0")
    assert code == 2
    assert out == ""
    assert "points must be at least 1" in err


@pytest.mark.slow
def test_analyze_two_dimensional_model_lets_W_decide(capsys):
    code, out, _ = run(capsys, "analyze", "heis2_pert", "--point", "0.2,0.1,-0.1,0.1,0.2", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["sphericity"]["deciding_tensor"] == "W"
    assert payload["sphericity"]["verdict"] == "non-spherical-at-point"
