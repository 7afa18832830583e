import json
import os

import pytest

from cohcert import cli


def run(tmp_path, *args, name="out.json"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report, out


def test_measure_maximally_coherent(tmp_path):
    code, rep, _ = run(tmp_path, "measure", "--maxcoh", "4")
    assert code == 0
    res = rep["body"]["result"]["report"]
    for key in ("c_max", "c_min", "c_r"):
        assert res[key] == pytest.approx(2.0, abs=1e-7)
    assert set(rep) == {"header", "body"}
    assert "timestamp" in rep["header"] and "runtimes" in rep["header"]


def test_measure_with_smoothing_and_witness(tmp_path):
    code, rep, _ = run(tmp_path, "measure", "--pure", "1,1j,0.5", "--eps", "0.05,0.1", "--witness")
    assert code == 0
    res = rep["body"]["result"]
    assert [s["epsilon"] for s in res["smooth"]] == [0.05, 0.1]
    assert "tau_witness" in res["report"]


def test_malformed_state_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"re": [[1, 0], [0')
    code, rep, _ = run(tmp_path, "measure", "--state", str(bad))
    assert code == 2
    assert rep["body"]["status"] == "input_error"
    assert "cannot read state file" in capsys.readouterr().err


def test_state_file_forms(tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"state": {"dim": 2, "re": [[0.5, 0.5], [0.5, 0.5]], "im": [[0, 0], [0, 0]]}}))
    code, rep, _ = run(tmp_path, "measure", "--state", str(f))
    assert code == 0 and rep["body"]["result"]["report"]["c_max"] == pytest.approx(1.0, abs=1e-7)
    f.write_text(json.dumps({"pure": {"re": [0.6, 0.8]}}))
    code, rep, _ = run(tmp_path, "measure", "--state", str(f))
    assert code == 0 and rep["body"]["result"]["report"]["pure_state_closed_form_used"]
    f.write_text(json.dumps({"re": [[1, 0], [0, 1]]}))
    assert run(tmp_path, "measure", "--state", str(f))[0] == 2


@pytest.mark.parametrize("args", [
    ["measure"],
    ["measure", "--random", "2,2"],
    ["measure", "--random", "2,3,0"],
    ["measure", "--maxcoh", "2", "--pure", "1,0"],
    ["measure", "--pure", "0,0"],
    ["measure", "--maxcoh", "2", "--eps", "-0.1"],
    ["measure", "--maxcoh", "2", "--tol", "-1"],
    ["oneshot", "--maxcoh", "2", "--eps", "1.5"],
    ["certify", "--dim", "100"],
    ["nosuchcommand"],
])
def test_input_errors_exit_2(tmp_path, args):
    assert cli.main(args + ["--out", str(tmp_path / "x.json")]) == 2


def test_channel_and_game(tmp_path):
    code, rep, _ = run(tmp_path, "channel", "--random", "3,2,5", "--witness")
    assert code == 0 and rep["body"]["result"]["pass"]
    assert rep["body"]["result"]["d_fidelity_sq"] == pytest.approx(rep["body"]["result"]["two_pow_c_max"], abs=1e-6)
    code, rep, _ = run(tmp_path, "channel", "--dim", "3", "--class", "SIO")
    assert code == 0 and rep["body"]["result"]["class"]["is_sio"]["ok"]
    code, rep, _ = run(tmp_path, "game", "--random", "2,2,1", "--trials", "20000", "--seed", "3")
    sim = rep["body"]["result"]["simulation"]
    assert code == 0 and sim["within_5_sigma"] and sim["trials"] == 20000
    code, rep, _ = run(tmp_path, "game", "--maxcoh", "3", "--instrument", "phase", "--trials", "1000")
    assert code == 0 and rep["body"]["result"]["result"]["ratio"] == pytest.approx(3.0, abs=1e-6)


def test_oneshot_sweep_demo(tmp_path):
    code, rep, _ = run(tmp_path, "oneshot", "--maxcoh", "2", "--eps", "0.04", "--m-max", "3")
    assert code == 0 and rep["body"]["result"]["pass"]
    csv_path = tmp_path / "sweep.csv"
    code, rep, _ = run(tmp_path, "sweep", "--random", "2,2,4", "--n-max", "2", "--csv", str(csv_path))
    assert code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0].startswith("n,") and len(lines) == 3
    code, rep, _ = run(tmp_path, "demo")
    assert code == 0
    v = rep["body"]["result"]["io_violation"]
    assert v["average_c_min_after"] > v["c_min_before"] + 1e-3


def test_trace_csv(tmp_path):
    trace = tmp_path / "trace.csv"
    code, _, _ = run(tmp_path, "measure", "--random", "3,2,1", "--eps", "0.1", "--trace-csv", str(trace))
    assert code == 0
    assert trace.read_text().startswith("solver,iter")


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("COHCERT_OUT", str(tmp_path / "reports"))
    assert cli.main(["measure", "--maxcoh", "2"]) == 0
    assert (tmp_path / "reports" / "measure.json").exists()


def test_stdout_when_no_out(capsys, monkeypatch):
    monkeypatch.delenv("COHCERT_OUT", raising=False)
    assert cli.main(["measure", "--maxcoh", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["body"]["exit_code"] == 0


def test_certify_exit_codes(tmp_path, monkeypatch):
    code, rep, _ = run(tmp_path, "certify", "--dim", "2", "--count", "1", "--seed", "2")
    assert code == 0 and rep["body"]["result"]["aggregate_pass"]
    assert rep["header"]["runtimes"]
    code, rep, _ = run(tmp_path, "certify", "--dim", "2", "--count", "1", "--tol", "0")
    assert code == 1 and rep["body"]["status"] == "certification_failure"


def test_solver_error_exit_3(tmp_path, monkeypatch):
    from cohcert import measures
    from cohcert.sdp import SolverError

    def boom(*a, **k):
        raise SolverError("forced")

    monkeypatch.setattr(measures, "smooth_c_max", boom)
    code, rep, _ = run(tmp_path, "measure", "--maxcoh", "2", "--eps", "0.1")
    assert code == 3 and rep["body"]["status"] == "solver_error"


def test_report_body_is_byte_identical(tmp_path):
    bodies = []
    for i in range(2):
        _, rep, _ = run(tmp_path, "certify", "--dim", "2", "--count", "2", "--seed", "5", name=f"r{i}.json")
        bodies.append(json.dumps(rep["body"], sort_keys=True))
    assert bodies[0] == bodies[1]
