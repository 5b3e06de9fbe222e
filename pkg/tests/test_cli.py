import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mscgarch.cli import main
from mscgarch.model import benchmark_dgp, simulate

SPEC = Path(__file__).resolve().parents[1] / "specs" / "dgp.json"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def price_csv(tmp_path_factory):
    y = simulate(benchmark_dgp(), 300, 12).y
    prices = 100 * np.exp(np.concatenate(([0.0], np.cumsum(y / 100))))
    p = tmp_path_factory.mktemp("data") / "prices.csv"
    with p.open("w") as fh:
        fh.write("Date,Close\n")
        for i, v in enumerate(prices):
            fh.write(f"2020-01-{i:04d},{float(v)!r}\n")
    return p


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_is_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        code, _, _ = run(["simulate", "--spec", str(SPEC), "--T", "50", "--seed", "4", "--out-dir", str(tmp_path / d)], capsys)
        assert code == 0
    a = (tmp_path / "a" / "simulated.csv").read_bytes()
    assert a == (tmp_path / "b" / "simulated.csv").read_bytes()
    rows = read_csv(tmp_path / "a" / "simulated.csv")
    assert len(rows) == 50 and list(rows[0]) == ["t", "y", "z", "H_1", "H_2"]
    stats = json.loads((tmp_path / "a" / "simulated_stats.json").read_text())
    assert set(stats) == {"mean", "std", "skewness", "kurtosis", "max", "min"}


def test_stability(tmp_path, capsys):
    code, out, _ = run(["stability", "--spec", str(SPEC), "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    doc = json.loads((tmp_path / "stability.json").read_text())
    assert doc == json.loads(out)
    assert doc["stable"] is True and 0 < doc["rho"] < 1 and doc["bound"] > 0
    assert len(doc["M"]) == 2


def test_forecast(tmp_path, capsys, price_csv):
    code, out, _ = run(["forecast", "--spec", str(SPEC), "--input", str(price_csv), "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    rows = read_csv(tmp_path / "forecasts.csv")
    assert len(rows) == 300
    assert list(rows[0]) == ["t", "label", "y", "y_squared", "var_forecast", "alpha_1", "alpha_2", "H_1", "H_2"]
    assert rows[0]["label"] == "2020-01-0001"
    assert math.isfinite(json.loads(out)["loglik"])


def test_fit(tmp_path, capsys, price_csv):
    argv = ["fit", "--input", str(price_csv), "--iters", "200", "--burnin", "40", "--seed", "1", "--out-dir", str(tmp_path)]
    code, _, _ = run(argv, capsys)
    assert code == 0
    rows = read_csv(tmp_path / "posterior.csv")
    assert len(rows) == 160
    assert len(rows[0]) == 2 + 16
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert len(summary["parameters"]) == 16
    assert summary["metadata"]["plug_in"] == "posterior mean"
    assert "rho" in summary["stability_at_posterior_mean"]
    assert (tmp_path / "fitted_spec.json").is_file()


def test_evaluate_with_given_specs(tmp_path, capsys, price_csv):
    g = tmp_path / "garch.json"
    doc = json.loads(SPEC.read_text())
    for r in doc["regimes"]:
        r["b0"], r["b1"], r["b2"] = r["a0"], r["a1"], r["a2"]
    g.write_text(json.dumps(doc))
    argv = ["evaluate", "--input", str(price_csv), "--cgarch-spec", str(SPEC), "--garch-spec", str(g), "--out-dir", str(tmp_path)]
    code, out, _ = run(argv, capsys)
    assert code == 0
    cmp = json.loads((tmp_path / "comparison.json").read_text())
    assert set(cmp["RMSE"]) == {"MS-CGARCH", "MS-GARCH"}
    assert cmp["evaluation"] == "in-sample"
    table = list(csv.reader((tmp_path / "comparison.csv").open()))
    assert table[0] == ["metric", "MS-GARCH", "MS-CGARCH"]
    assert (tmp_path / "forecasts_garch.csv").is_file()


def test_evaluate_needs_both_specs(tmp_path, capsys, price_csv):
    code, _, err = run(["evaluate", "--input", str(price_csv), "--cgarch-spec", str(SPEC), "--out-dir", str(tmp_path)], capsys)
    assert code != 0
    assert json.loads(err)["error"] == "data"


@pytest.mark.parametrize(
    "setup,category,code",
    [
        ("missing", "missing_file", 6),
        ("malformed", "malformed_json", 7),
        ("invalid", "invalid_spec", 2),
    ],
)
def test_error_reporting(tmp_path, capsys, setup, category, code):
    spec = tmp_path / "spec.json"
    if setup == "malformed":
        spec.write_text("{")
    elif setup == "invalid":
        doc = json.loads(SPEC.read_text())
        doc["regimes"][0]["gamma"] = -1
        spec.write_text(json.dumps(doc))
    rc, _, err = run(["stability", "--spec", str(spec), "--out-dir", str(tmp_path)], capsys)
    assert rc == code
    assert json.loads(err)["error"] == category


def test_bad_data(tmp_path, capsys):
    p = tmp_path / "x.csv"
    p.write_text("price\n1\n2\ninf\n")
    rc, _, err = run(["forecast", "--spec", str(SPEC), "--input", str(p), "--out-dir", str(tmp_path)], capsys)
    assert rc == 3 and json.loads(err)["error"] == "data"


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "mscgarch", "stability", "--out-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["stable"] is True
