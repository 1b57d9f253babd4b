import json

import numpy as np
import pytest

from credcorr.cli import emit_plot_data, main, price_curve
from credcorr.core import load_fixture, read_portfolio, write_portfolio
from credcorr.errors import ValidationError
from credcorr.ladder import build_ladder
from credcorr.pricing import TrancheSpec, price_tranche_exhaustive


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ladder_json(capsys):
    code, out, _ = _run(capsys, "ladder", "--portfolio", "example5", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    probs = [s["probability"] for s in doc["scenarios"]]
    assert probs == pytest.approx([0.006, 0.004, 0.0, 0.002, 0.028, 0.96], abs=1e-15)
    assert doc["meta"]["seed"] == 0 and "rng" in doc["meta"]


def test_price_and_arb(capsys):
    code, out, _ = _run(capsys, "price", "--portfolio", "example5", "--attachment", "0.5")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.0042, abs=1e-15)
    code, out, _ = _run(capsys, "arb", "--portfolio", "example5", "--attachment", "0.5",
                        "--market-price", "0.005")
    doc = json.loads(out)
    assert code == 0 and doc["certificate"] is True
    assert doc["initial_value"] == pytest.approx(-0.0008, abs=1e-12)


def test_imply_breakdown(capsys):
    code, out, _ = _run(capsys, "imply", "--portfolio", "example5", "--attachment", "0.5",
                        "--market-price", "0.005")
    doc = json.loads(out)
    assert code == 0 and doc["calibration"]["status"] == "breakdown"


def test_validate_matrix(capsys, tmp_path):
    m = np.eye(5)
    m[0, 4] = m[4, 0] = 0.9
    path = tmp_path / "m.csv"
    np.savetxt(path, m, delimiter=",")
    code, out, _ = _run(capsys, "validate", "--portfolio", "example5", "--matrix", str(path))
    doc = json.loads(out)
    assert code == 0
    assert doc["matrix"]["ok"] is False


@pytest.mark.parametrize("argv", [
    ["price", "--portfolio", "example5", "--attachment", "0.5", "--kind", "mezzanine"],
    ["price", "--portfolio", "example5"],
    ["ladder", "--portfolio", "no/such/file.csv"],
    ["simulate", "--portfolio", "example5", "--flat-rho", "0.3", "--draws", "0"],
    ["arb", "--portfolio", "example5", "--attachment", "2.0", "--market-price", "0.1"],
    ["plot-data", "--portfolio", "example5", "--what", "price-curve"],
])
def test_usage_errors_exit_one(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 1 and err


def test_portfolio_file_roundtrip(capsys, tmp_path):
    pf = load_fixture("example5")
    path = tmp_path / "pf.csv"
    write_portfolio(pf, path)
    assert read_portfolio(path) == pf
    code, out, _ = _run(capsys, "price", "--portfolio", str(path), "--attachment", "0.5")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.0042, abs=1e-15)


def test_simulate_thread_invariant(tmp_path):
    outs = []
    for threads in ("1", "3"):
        path = tmp_path / f"sim{threads}.csv"
        assert main(["simulate", "--portfolio", "example5", "--flat-rho", "0.4", "--draws", "200000",
                     "--seed", "5", "--threads", threads, "--output", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].startswith(b"# {")


def test_plot_data_rows(capsys):
    code, out, _ = _run(capsys, "plot-data", "--portfolio", "example5")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "loss,probability" and len(lines) == 1 + 5
    code, out, _ = _run(capsys, "plot-data", "--portfolio", "example5", "--what", "price-curve",
                        "--attachment", "0.5")
    lines = out.strip().splitlines()
    assert len(lines) == 1 + 11
    last = lines[-1].split(",")
    assert float(last[0]) == 1.0 and float(last[1]) == pytest.approx(0.0042, abs=1e-15)


def test_price_curve_monotone(example5):
    curve = price_curve(example5, TrancheSpec(0.3), 6)
    vals = [v for _, v in curve]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] == price_tranche_exhaustive(example5, TrancheSpec(0.3), build_ladder(example5)).value


def test_emit_plot_data_empty():
    with pytest.raises(ValidationError):
        emit_plot_data([])
