import csv
import io
import json

import pytest

from twostage import cli
from twostage import io as tio

from conftest import RATS_STAGE1, RATS_STAGE2


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_estimate_json(capsys):
    code, out, _ = run(capsys, "estimate", RATS_STAGE1, RATS_STAGE2)
    assert code == 0
    report = json.loads(out)
    assert report["design"] == {"n1": 20, "n2": 10}
    assert report["selection"]["q"] == 1
    assert report["estimates"]["MLE"] == pytest.approx(95.13333333333334, abs=1e-12)
    assert set(report["estimates"]) == {"MLE", "UMVCUE", "PLUGIN_U1", "PLUGIN_U2"}


def test_estimate_csv_with_bayes(capsys):
    code, out, _ = run(capsys, "estimate", RATS_STAGE1, RATS_STAGE2, "--format", "csv", "--bayes-m", "2")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["field", "value"]
    fields = dict(rows[1:])
    assert "estimates.BAYES_M(2)" in fields
    assert fields["design.n1"] == "20"


def test_report_round_trip(capsys):
    _, out, _ = run(capsys, "estimate", RATS_STAGE1, RATS_STAGE2)
    report = tio.loads(out)
    s, cfg = tio.summary_from_report(report)
    rebuilt = tio.build_report(s, cfg, [tio.E.EstimatorId.parse(k) for k in report["estimates"]],
                               report["selection"]["xbar1"], report["selection"]["xbar2"])
    assert tio.dumps(rebuilt) + "\n" == out


def test_empty_stage_two_names_file(capsys, tmp_path):
    empty = tmp_path / "s2.csv"
    empty.write_text("value\n")
    code, _, err = run(capsys, "estimate", RATS_STAGE1, str(empty))
    assert code == 2
    assert str(empty) in err


def test_bad_arm_label_cites_row(capsys, tmp_path):
    bad = tmp_path / "s1.csv"
    bad.write_text("arm,value\n1,3.0\n3,4.0\n2,1.0\n")
    code, _, err = run(capsys, "estimate", str(bad), RATS_STAGE2)
    assert code == 2
    assert ":3:" in err and "3,4.0" in err


def test_unequal_arms(capsys, tmp_path):
    bad = tmp_path / "s1.csv"
    bad.write_text("arm,value\n1,3.0\n1,4.0\n2,1.0\n")
    code, _, err = run(capsys, "estimate", str(bad), RATS_STAGE2)
    assert code == 2


def test_bom_and_crlf_accepted(capsys, tmp_path):
    s1 = tmp_path / "s1.csv"
    s1.write_bytes("﻿arm,value\r\n1,1\r\n1,3\r\n\r\n2,0\r\n2,2\r\n".encode("utf-8"))
    s2 = tmp_path / "s2.csv"
    s2.write_text("value\n2\n4\n")
    code, out, _ = run(capsys, "estimate", str(s1), str(s2))
    assert code == 0
    assert json.loads(out)["selection"]["q"] == 1


def test_selection_mismatch_exit_code(capsys):
    code, _, err = run(capsys, "estimate", RATS_STAGE1, RATS_STAGE2, "--arm", "2")
    assert code == 3
    assert "error" in err


def test_simulate_is_reproducible(capsys):
    args = ("simulate", "--n1", "4", "--n2", "3", "--mu", "0.5", "--reps", "3000", "--seed", "7")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b
    report = json.loads(a)
    assert report["reps_used"] == 3000
    assert report["provenance"]["seed"] == 7


def test_simulate_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--n1", "4", "--n2", "3", "--reps", "500",
                       "--format", "csv", "--estimators", "BAYES_M(2),MLE")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == tio.SWEEP_HEADER
    assert [r[1] for r in rows[1:]] == ["MLE", "BAYES_M(2)"]


@pytest.mark.parametrize("argv", [
    ("simulate", "--n1", "2", "--n2", "2", "--reps", "0"),
    ("simulate", "--n1", "1", "--n2", "1"),
    ("simulate", "--n1", "2", "--n2", "2", "--mu", "-1"),
    ("simulate", "--n1", "2", "--n2", "2", "--estimators", "MEDIAN"),
])
def test_simulate_rejects_bad_input(capsys, argv):
    try:
        code = cli.main(list(argv))
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_sweep_single_point(capsys, tmp_path):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--mode", "mu", "--mu-grid", "0", "--reps", "500", "--out", str(out))
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 5
    assert {r[0] for r in rows[1:]} == {"0.0"}


def test_sweep_rejects_negative_mu(capsys):
    code, _, err = run(capsys, "sweep", "--mode", "mu", "--mu-grid", "0,-0.5", "--reps", "10")
    assert code == 2


def test_sweep_fraction(capsys):
    code, out, _ = run(capsys, "sweep", "--mode", "fraction", "--n-total", "6", "--reps", "300",
                       "--estimators", "MLE")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))[1:]
    assert len(rows) == 5
    assert [float(r[0]) for r in rows] == sorted(float(r[0]) for r in rows)


def test_sweep_fraction_needs_total(capsys):
    code, _, _ = run(capsys, "sweep", "--mode", "fraction", "--reps", "10")
    assert code == 2


def test_sweep_fraction_empty_grid(capsys):
    code, _, err = run(capsys, "sweep", "--mode", "fraction", "--n-total", "2", "--reps", "10")
    assert code == 2
    assert "admissible" in err


def test_validate_quick(capsys):
    code, out, _ = run(capsys, "validate")
    assert code == 0
    assert out.startswith("PASS")


def test_validate_forced_failure(capsys):
    code, out, _ = run(capsys, "validate", "--rel-tol", "1e-30", "--abs-tol", "0")
    assert code == 1
    assert out.startswith("FAIL")


@pytest.mark.slow
def test_validate_full(capsys):
    code, out, _ = run(capsys, "validate", "--level", "full", "--reps", "20000")
    assert code == 0, out
