import json

import pandas as pd
import pytest

from scripts.asvar_lab import main, parse_grid
from scripts.models.presets import CONFIG_DIR


def test_parse_grid():
    assert parse_grid("0.5:0.6:0.05") == [0.5, 0.55, 0.6]


@pytest.mark.parametrize("text", ["0.4:0.9:0.1", "0.5:1.0:0.25", "0.5:0.9", "0.9:0.5:0.1"])
def test_parse_grid_rejects(text):
    with pytest.raises(SystemExit):
        parse_grid(text)


def test_toy_writes_rows_and_report(tmp_path):
    out = tmp_path / "rows.csv"
    report = tmp_path / "report.json"
    code = main(["--quiet", "toy", "--case", "da-better", "--proposal", "rw",
                 "--a-grid", "0.5:0.7:0.1", "--out", str(out), "--gnuplot", "--report", str(report)])
    assert code == 0
    rows = pd.read_csv(out)
    assert len(rows) == 3
    assert rows["var_K_wf"].iloc[0] == pytest.approx(2.0)
    assert out.with_suffix(".dat").exists()
    assert json.loads(report.read_text())["sweeps"][0]["verdicts"]["bound_is_tight"]


def test_verify(tmp_path):
    out = tmp_path / "verify.json"
    assert main(["--quiet", "verify", "--instances", "3", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"]


def test_simulate_then_asvar(tmp_path):
    path_csv = tmp_path / "path.csv"
    estimate_json = tmp_path / "asvar.json"
    assert main(["--quiet", "simulate", "--algo", "isj-single", "--n", "2000", "--seed", "1", "--out", str(path_csv)]) == 0
    assert main(["--quiet", "asvar", str(path_csv), "--mode", "isj-single", "--replicates", "3", "--out", str(estimate_json)]) == 0
    document = json.loads(estimate_json.read_text())
    assert document["method"] == "plugin-isj-single"
    assert document["value"] >= 0


def test_asvar_on_pm_path(tmp_path):
    path_csv = tmp_path / "da.csv"
    estimate_json = tmp_path / "asvar.json"
    assert main(["--quiet", "simulate", "--algo", "da", "--n", "1000", "--out", str(path_csv)]) == 0
    assert main(["--quiet", "asvar", str(path_csv), "--out", str(estimate_json)]) == 0
    document = json.loads(estimate_json.read_text())
    assert set(document) == {"value", "se", "method", "components"}
    assert document["method"] == "batch-means"
    assert document["value"] == document["components"]["batch_means"]
    assert set(document["components"]) == {"batch_means", "initial_sequence"}


def test_asvar_initial_sequence_choice(tmp_path):
    path_csv = tmp_path / "pmp.csv"
    estimate_json = tmp_path / "asvar.json"
    assert main(["--quiet", "simulate", "--algo", "pm-parent", "--n", "1000", "--out", str(path_csv)]) == 0
    assert main(["--quiet", "asvar", str(path_csv), "--estimator", "initial-sequence", "--out", str(estimate_json)]) == 0
    document = json.loads(estimate_json.read_text())
    assert document["method"] == "initial-sequence"
    assert document["value"] == document["components"]["initial_sequence"]


def test_compare(tmp_path):
    out = tmp_path / "compare.json"
    main(["--quiet", "compare", "--algos", "da", "is0", "--n", "500", "--seeds", "2", "--out", str(out)])
    document = json.loads(out.read_text())
    assert [row["algorithm"] for row in document["algorithms"]] == ["da", "is0"]
    assert "is0_bounds" in document["verdicts"]


def test_validate_model_config(capsys):
    assert main(["validate", str(CONFIG_DIR / "two_coin.json")]) == 0
    assert "Validation passed" in capsys.readouterr().out


def test_validate_reports_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"theta": [0], "prior": [1.0]}))
    with pytest.raises(SystemExit, match="Validation failed"):
        main(["validate", str(bad)])


def test_unknown_preset():
    with pytest.raises(SystemExit):
        main(["simulate", "--config", "no-such-model", "--algo", "is0", "--n", "10"])
