import json

import pytest

from obstacle_bbm.cli import EXIT_INPUT, EXIT_OK, EXIT_VERIFY, InputError, RunManifest, main, oracle_report, parse_levels
from obstacle_bbm.landscape import validate_landscape


def _landscape(tmp_path, obstacles, name="l.json"):
    p = tmp_path / name
    p.write_text(json.dumps({"obstacles": [{"a": a, "b": b} for a, b in obstacles]}))
    return str(p)


def _run(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def test_analyze_single(tmp_path, capsys):
    code, out = _run(["analyze", "--landscape", _landscape(tmp_path, [("3/10", "1/5")])], capsys)
    assert code == EXIT_OK
    doc = json.loads(out.out)
    assert doc["feasible"] is True
    assert doc["h_star"] == pytest.approx(0.804442968119681, abs=1e-12)
    assert doc["blocks"] == [0, 1]
    assert {"s_indices", "per_block", "x_star", "y_star", "c_star", "total_time", "limit_over_t"} <= set(doc)


def test_analyze_equal_landscape_blocks(tmp_path, capsys):
    path = _landscape(tmp_path, [(1, 1)] * 3)
    code, out = _run(["analyze", "--landscape", path], capsys)
    assert json.loads(out.out)["blocks"] == [0, 1, 2, 3]


def test_analyze_infeasible_reports_partial(tmp_path, capsys):
    code, out = _run(["analyze", "--landscape", _landscape(tmp_path, [(1, 1)])], capsys)
    doc = json.loads(out.out)
    assert code == EXIT_OK and doc["feasible"] is False
    assert doc["partial"]["ell_hat_star"] == 0
    assert doc["partial"]["b_star"] == pytest.approx(0.2802621056717, abs=1e-10)


def test_analyze_writes_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, _ = _run(["analyze", "--landscape", _landscape(tmp_path, [(1, 2)]), "--out", str(out)], capsys)
    assert code == EXIT_OK and json.loads(out.read_text())["blocks"] == [0, 1]


def test_bad_width_is_an_input_error(tmp_path, capsys):
    code, out = _run(["analyze", "--landscape", _landscape(tmp_path, [(1, 1), (0, 1)])], capsys)
    assert code == EXIT_INPUT
    assert "obstacle 2" in out.err


def test_missing_landscape_file(tmp_path, capsys):
    code, out = _run(["analyze", "--landscape", str(tmp_path / "nope.json")], capsys)
    assert code == EXIT_INPUT


def test_oracle_single(tmp_path, capsys):
    code, out = _run(["oracle", "--landscape", _landscape(tmp_path, [("3/10", "1/5")]), "--resolution", "0.01"], capsys)
    doc = json.loads(out.out)
    assert code == EXIT_OK
    assert doc["abs_gap"] <= 0.1
    assert set(doc) == {"feasible", "resolution", "plan_value", "oracle_value", "abs_gap", "argmax", "note"}


def test_oracle_infeasible_is_consistent(tmp_path, capsys):
    code, out = _run(["oracle", "--landscape", _landscape(tmp_path, [(1, 1)])], capsys)
    doc = json.loads(out.out)
    assert code == EXIT_OK and doc["feasible"] is False and doc["oracle_value"] is None


def test_oracle_refuses_four_obstacles(tmp_path, capsys):
    code, out = _run(["oracle", "--landscape", _landscape(tmp_path, [("1/10", "1/10")] * 4)], capsys)
    assert code == EXIT_INPUT
    assert "at most 3" in out.err


def test_oracle_verification_failure_exit_code(monkeypatch):
    import obstacle_bbm.cli as cli

    real = cli.brute_force_max_D

    def off_by_half(L, resolution):
        res = real(L, resolution)
        return type(res)(res.best, res.value + 0.5, res.grid, res.evaluations, res.lattice_value)

    monkeypatch.setattr(cli, "brute_force_max_D", off_by_half)
    doc, code = oracle_report(validate_landscape([("3/10", "1/5")]), 0.01)
    assert code == EXIT_VERIFY and doc["abs_gap"] > 0.1


def test_simulate_outputs(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    args = ["simulate", "--landscape", _landscape(tmp_path, [("3/10", "1/5")]), "--t", "2", "--dt", "0.01",
            "--replicas", "3", "--seed", "4", "--out", str(out), "--levels", "1:0.5"]
    code, _ = _run(args, capsys)
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "replica,time,running_max,population"
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["predicted_limit_over_t"] == pytest.approx(1.304442968119681)
    assert summary["levels"][0]["target_exponent"] == 0.875
    assert "homogeneous_two_term_over_t" in summary


def test_simulate_missing_directory(tmp_path, capsys):
    out = tmp_path / "missing" / "sim.csv"
    code, res = _run(["simulate", "--landscape", _landscape(tmp_path, []), "--t", "1", "--dt", "0.01",
                      "--replicas", "2", "--out", str(out)], capsys)
    assert code == EXIT_INPUT
    assert "missing" in res.err


def test_simulate_reruns_are_byte_identical(tmp_path, capsys):
    path = _landscape(tmp_path, [])
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        code, _ = _run(["simulate", "--landscape", path, "--t", "3", "--dt", "0.01", "--replicas", "4",
                        "--seed", "11", "--out", str(out)], capsys)
        assert code == EXIT_OK
        outs.append((out.read_bytes(), out.with_suffix(".json").read_bytes()))
    assert outs[0] == outs[1]


def test_manifest_rejects_unknown_keys():
    with pytest.raises(InputError):
        RunManifest.from_dict({"command": "analyze", "landscape_path": "x", "colour": 1})
    with pytest.raises(InputError):
        RunManifest.from_dict({"command": "analyze", "landscape_path": "x", "options": {"speed": 1}})
    with pytest.raises(InputError):
        RunManifest.from_dict({"command": "plot", "landscape_path": "x"})


def test_manifest_fills_defaults():
    m = RunManifest.from_dict({"command": "simulate", "landscape_path": "x", "options": {"t": 4}})
    assert m.options["t"] == 4 and m.options["dt"] == 1e-3 and m.options["replicas"] == 32


def test_run_manifest(tmp_path, capsys):
    out = tmp_path / "a.json"
    man = tmp_path / "m.json"
    man.write_text(json.dumps({"command": "analyze", "landscape_path": _landscape(tmp_path, [(1, 1)]), "output_path": str(out)}))
    code, _ = _run(["run", str(man)], capsys)
    assert code == EXIT_OK and json.loads(out.read_text())["feasible"] is False


def test_run_bad_manifest(tmp_path, capsys):
    man = tmp_path / "m.json"
    man.write_text("[1, 2]")
    assert _run(["run", str(man)], capsys)[0] == EXIT_INPUT


def test_parse_levels():
    assert parse_levels("1:0.5,0.5:0.25") == ((1.0, 0.5), (0.5, 0.25))
    assert parse_levels("") == ()
    with pytest.raises(InputError):
        parse_levels("1-0.5")
