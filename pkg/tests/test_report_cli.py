import json
import math
from pathlib import Path

import pytest

from gremlab import cli
from gremlab.model import spec_to_dict
from gremlab.report import CRITERIA, TOLERANCES, VerifyReport, dumps, emit, mc_csv, run_verify

MODELS = Path(__file__).resolve().parents[1] / "notebooks" / "models"
LOG2 = math.log(2)


@pytest.fixture
def rem_file(tmp_path, rem):
    path = tmp_path / "rem.json"
    path.write_text(json.dumps(spec_to_dict(rem)))
    return path


def test_zero_field_report(zero_model):
    rep = run_verify(zero_model(2))
    assert rep.identity_residual <= 1e-9
    assert rep.parisi["value"] == pytest.approx(LOG2, abs=1e-9)
    assert rep.gibbs["value"] == 0
    assert rep.passed and rep.exit_code == 0
    assert not rep.criteria["montecarlo"]["enabled"]


def test_rem_report(rem):
    rep = run_verify(rem, Ns=[8, 12])
    g = math.log((1 + math.e) / 2)
    assert rep.gibbs["value"] == pytest.approx(g, abs=1e-9)
    assert rep.parisi["value"] == pytest.approx(LOG2 + g, abs=1e-9)
    assert rep.identity_residual <= 1e-9
    assert [r["N"] for r in rep.montecarlo] == [8, 12]
    assert rep.passed


def test_failing_criterion_sets_exit_code(rem):
    rep = run_verify(rem, Ns=[8], tolerances={"mc_gap": 1e-12})
    assert not rep.criteria["montecarlo"]["passed"]
    assert rep.exit_code == 1
    rep = run_verify(rem, Ns=[8], tolerances={"mc_gap": 1e-12}, enabled={"montecarlo": False})
    assert rep.exit_code == 0


def test_errors_give_partial_report(rem):
    rep = run_verify(rem, Ns=[0])
    assert rep.exit_code == 2
    assert rep.errors and rep.errors[0].startswith("montecarlo")
    assert rep.identity_residual is not None


def test_json_round_trip(rem):
    rep = run_verify(rem, Ns=[8])
    text = emit(rep, "json")
    back = VerifyReport.from_dict(json.loads(text))
    assert back.as_dict() == rep.as_dict()
    assert emit(back, "json") == text


def test_identical_bytes(rem, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    emit(run_verify(rem, Ns=[8]), "json", a)
    emit(run_verify(rem, Ns=[8]), "json", b)
    assert a.read_bytes() == b.read_bytes()


def test_csv_header_only_without_sweep(zero_model):
    assert emit(run_verify(zero_model(1)), "csv") == "N,F_N,target,gap\n"
    assert mc_csv([]) == "N,F_N,target,gap\n"


def test_float_format():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps({"x": [1, 2.5]}) == '{\n  "x": [1, 2.5]\n}'
    assert json.loads(dumps({"a": [0.1, None, True]})) == {"a": [0.1, None, True]}


def test_tolerance_block():
    assert TOLERANCES["identity"] == 1e-4 and TOLERANCES["gradient"] == 1e-6
    assert TOLERANCES["entropy"] == 1e-10 and TOLERANCES["mc_gap"] == 0.05
    assert set(CRITERIA) == {"identity", "constraint_audit", "gradient", "montecarlo"}


# -- command line ---------------------------------------------------------------

def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    return code, capsys.readouterr().out


def test_chains_command(capsys):
    code, out = run(capsys, "chains", "--n", 2)
    assert code == 0
    assert out.splitlines() == ["1<2  T1={{1}} T2={{2},{12}}", "2<1  T1={{2}} T2={{1},{12}}"]


def test_phi_check(capsys):
    code, out = run(capsys, "phi", "check", "--model", MODELS / "pair.json")
    data = json.loads(out)
    assert code == 0 and data["entries"] == 8 and data["finite"]
    assert (data["min"], data["max"]) == (-1.5, 1.5)


def test_parisi_and_gibbs_agree(capsys, tmp_path):
    model = MODELS / "active.json"
    code, out = run(capsys, "parisi", "--model", model)
    p = json.loads(out)["value"]
    assert code == 0
    code, out = run(capsys, "gibbs", "--model", model)
    g = json.loads(out)
    assert code == 0 and set(g) == {"value", "nu_star", "active_set", "converged"}
    assert g["active_set"] == ["1", "12"]
    assert p == pytest.approx(g["value"] + LOG2, abs=1e-6)
    code, out = run(capsys, "parisi", "--model", model, "--chain", "2,1")
    assert code == 0 and json.loads(out)["chains"][0]["chain"] == [2, 1]


def test_gibbs_measure_command(capsys):
    code, out = run(capsys, "gibbs-measure", "--model", MODELS / "pair.json", "--chain", "2,1", "--m", "0.5,1")
    data = json.loads(out)
    assert code == 0
    assert data["m"] == [0.5, 1.0]
    assert sum(data["flattened"]) == pytest.approx(1)
    assert len(data["kernels"]) == 1 and len(data["kernels"][0]) == 2


def test_simulate_csv(capsys, rem_file, tmp_path):
    out_file = tmp_path / "series.csv"
    code, _ = run(capsys, "simulate", "--model", rem_file, "--sweep", "8,12", "--seed", 4,
                  "--format", "csv", "--out", out_file)
    lines = out_file.read_text().splitlines()
    assert code == 0 and lines[0] == "N,F_N,target,gap" and len(lines) == 3
    code, out = run(capsys, "simulate", "--model", rem_file, "--N", 8, "--chain", "1")
    assert json.loads(out)["results"][0]["chain"] == [1]


def test_count_command(capsys, rem_file):
    code, out = run(capsys, "count", "--model", rem_file, "--N", 12, "--radius", 2)
    assert code == 0 and json.loads(out)["count"] == 2**12


def test_verify_command(capsys, rem_file, tmp_path):
    code, out = run(capsys, "verify", "--model", rem_file, "--sweep", "8")
    assert code == 0 and json.loads(out)["passed"] is True
    code, out = run(capsys, "verify", "--model", rem_file, "--format", "csv")
    assert out == "N,F_N,target,gap\n"


def test_budget_error_exit_code(capsys, rem_file, monkeypatch):
    monkeypatch.setenv("GREMLAB_BUDGET", "100")
    code = cli.main(["simulate", "--model", str(rem_file), "--N", "12"])
    assert code == 2
    assert "GREMLAB_BUDGET" in capsys.readouterr().err


def test_missing_model(capsys):
    assert cli.main(["gibbs"]) == 2
