import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from elapsed_neurons import cli
from elapsed_neurons.solver import NumericalBlowup

LINEAR = """\
# linear relaxation
threshold.kind = constant
threshold.sigma = 0.5
ds = 0.002
tmax = 12
snapshots = 0, 12
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_parse_reports_line_and_column(tmp_path):
    with pytest.raises(cli.ConfigParseError) as err:
        cli.parse_config_text("threshold.kind = paper\n  threshold.alpha = abc\n", "x.cfg")
    assert (err.value.line, err.value.column) == (2, 21)
    assert str(err.value).startswith("x.cfg:2:21:")
    with pytest.raises(cli.ConfigParseError) as err:
        cli.parse_config_text("J = 1\nbogus = 2\n")
    assert (err.value.line, err.value.column) == (2, 1)
    with pytest.raises(cli.ConfigParseError):
        cli.parse_config_text("J 1\n")
    with pytest.raises(cli.ConfigParseError):
        cli.parse_config_text("J = 1\nJ = 2\n")
    with pytest.raises(cli.ConfigParseError):
        cli.parse_config_text("tmax = inf\n")


def test_config_defaults():
    run = cli.build_run(cli.parse_config_text("threshold.kind = paper\nthreshold.alpha = 3\n"))
    cfg = run.config
    assert (cfg.ds, cfg.J, cfg.delay, cfg.s_max) == (0.001, 1.0, 0.0, 26.0)
    assert run.snapshots == () and run.out == "run"


def test_config_threshold_keys_must_match_kind():
    with pytest.raises(cli.ConfigError):
        cli.build_run(cli.parse_config_text("threshold.kind = paper\nthreshold.sigma = 0.5\nthreshold.alpha = 1\n"))
    with pytest.raises(cli.ConfigError):
        cli.build_run(cli.parse_config_text("threshold.kind = affine\nthreshold.sigma0 = 0.5\n"))


def test_malformed_key_exits_2(tmp_path, capsys):
    path = write(tmp_path, "threshold.kind = paper\nalpha=abc\n")
    assert cli.main(["simulate", path]) == 2
    assert ":2:1:" in capsys.readouterr().err


def test_invariant_violation_exits_2(tmp_path):
    path = write(tmp_path, "threshold.kind = constant\nthreshold.sigma = 0.5\nsmax = 3\n")
    assert cli.main(["simulate", path]) == 2


def test_simulate_outputs(tmp_path, capsys):
    path = write(tmp_path, LINEAR)
    prefix = str(tmp_path / "lin")
    assert cli.main(["simulate", path, "--out", prefix]) == 0
    out = capsys.readouterr().out
    assert "classification=Converged" in out and "limit=0.666667" in out
    header, data = cli.read_csv(prefix + "_trace.csv")
    assert header == ["t", "N", "X", "mass"]
    assert len(data) == 6001 and np.all(np.diff(data[:, 0]) > 0)
    for ts in ("0", "12"):
        h, snap = cli.read_csv(f"{prefix}_snapshot_{ts}.csv")
        assert h == ["s", "n"] and len(snap) > 1000
    assert (tmp_path / "lin_report.txt").read_text().startswith("steps=6000")
    raw = (tmp_path / "lin_trace.csv").read_bytes()
    assert b"\r" not in raw


def test_outputs_create_directories(tmp_path):
    out = tmp_path / "nested" / "dir" / "one"
    assert cli.main(["analytic", "one", "--alpha", "0.5", "--samples", "100", "--out", str(out)]) == 0
    assert (tmp_path / "nested" / "dir" / "one.csv").exists()
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["analytic", "one", "--alpha", "0.5", "--out", str(blocker / "one")]) == 2


def test_simulate_is_byte_identical(tmp_path):
    path = write(tmp_path, LINEAR)
    for name in ("a", "b"):
        assert cli.main(["simulate", path, "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a_trace.csv").read_bytes() == (tmp_path / "b_trace.csv").read_bytes()


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    cols = [np.sort(rng.random(50)), rng.random(50) * 1e-7, rng.random(50) * 1e5]
    path = tmp_path / "x.csv"
    cli.write_csv(path, ("a", "b", "c"), cols)
    header, data = cli.read_csv(str(path))
    for j, col in enumerate(cols):
        assert np.allclose(data[:, j], col, rtol=1e-12, atol=0)


def test_numerical_failure_exits_3(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericalBlowup("non-finite activity")

    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["simulate", write(tmp_path, LINEAR)]) == 3


def test_analytic_one(tmp_path, capsys):
    out = str(tmp_path / "one")
    assert cli.main(["analytic", "one", "--alpha", "0.693147", "--out", out]) == 0
    text = capsys.readouterr().out
    _, data = cli.read_csv(out + ".csv")
    assert len(data) == 10_000
    assert data[:, 1].min() == pytest.approx(1 / 3, abs=1e-3)
    assert data[:, 1].max() == pytest.approx(2 / 3, abs=1e-6)
    assert "mass_residual=" in text and "boundary_residual=" in text


def test_analytic_flat_report(tmp_path, capsys):
    assert cli.main(["analytic", "flat", "--alpha", "3", "--p", "1", "--out", str(tmp_path / "f")]) == 0
    text = capsys.readouterr().out
    assert "jumps=2" in text and "period=6 " in text
    assert "crosscheck.f_at_root=" in text and "crosscheck.f_at_2alpha=" in text


def test_analytic_errors(tmp_path, capsys):
    assert cli.main(["analytic", "two", "--alpha", "1", "--p", "1.5"]) == 2
    assert cli.main(["analytic", "flat", "--alpha", "1"]) == 2
    assert cli.main(["analytic", "two", "--alpha", "1", "--p", "0.25", "--out", str(tmp_path / "t")]) == 4
    assert "gamma" in capsys.readouterr().err


def test_verify_exit_codes(capsys):
    assert cli.main(["verify", "one", "--alpha", "0.5", "--samples", "50"]) == 0
    assert cli.main(["verify", "one", "--alpha", "0.693147", "--samples", "50", "--tol", "1e-8"]) == 0
    assert cli.main(["verify", "one", "--alpha", "0.5", "--samples", "50", "--corrupt", "1.01"]) == 1
    assert "status=FAILED" in capsys.readouterr().out


def test_scan_single_row(tmp_path, capsys):
    path = write(tmp_path, "threshold.kind = affine\nthreshold.sigma0 = 0.5\nthreshold.slope = 0.1\n"
                           "threshold.floor = 0.4\nds = 0.01\ntmax = 30\n")
    table = tmp_path / "scan.csv"
    assert cli.main(["scan", path, "--from", "1", "--to", "2", "--steps", "1", "--window", "5",
                     "--out", str(table)]) == 0
    lines = table.read_text().splitlines()
    assert lines[0] == "J,classification,period,min,max"
    assert len(lines) == 2 and lines[1].startswith("1,Converged")
    assert "J*=none" in capsys.readouterr().out


def test_scan_lambda_values(tmp_path, capsys):
    path = write(tmp_path, "threshold.kind = affine\nthreshold.sigma0 = 0.5\nthreshold.slope = 0.1\n"
                           "threshold.floor = 0.4\nds = 0.01\ntmax = 30\n")
    assert cli.main(["scan", path, "--param", "lambda", "--values", "0.5,1", "--window", "5"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("lambda,classification") and out.count("Converged") == 2


def test_scan_needs_range(tmp_path):
    path = write(tmp_path, LINEAR)
    assert cli.main(["scan", path]) == 2


def _polylines(svg_path):
    root = ET.parse(svg_path).getroot()
    ns = "{http://www.w3.org/2000/svg}"
    return root, root.findall(f".//{ns}polyline")


def test_plot(tmp_path):
    path = write(tmp_path, LINEAR)
    prefix = str(tmp_path / "p")
    assert cli.main(["simulate", path, "--out", prefix]) == 0
    svg = tmp_path / "trace.svg"
    assert cli.main(["plot", prefix + "_trace.csv", str(svg), "--columns", "N"]) == 0
    root, lines = _polylines(svg)
    assert len(lines) == 1 and root.find(".//{http://www.w3.org/2000/svg}g[@class='axes']") is not None
    assert cli.main(["plot", prefix + "_trace.csv", str(svg), "--columns", "N,X"]) == 0
    root, lines = _polylines(svg)
    assert len(lines) == 2
    assert root.find(".//{http://www.w3.org/2000/svg}g[@class='legend']") is not None
    assert cli.main(["plot", prefix + "_snapshot_12.csv", str(tmp_path / "snap.svg")]) == 0
    _, lines = _polylines(tmp_path / "snap.svg")
    assert lines[0].get("data-name") == "n"
    assert cli.main(["plot", prefix + "_trace.csv", str(svg), "--columns", "Q"]) == 2


def test_usage_error_exit_code():
    assert cli.main(["nonsense"]) == 2
    assert cli.main([]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "elapsed_neurons", "verify", "one", "--alpha", "0.5",
                           "--samples", "20"], capture_output=True, text=True)
    assert proc.returncode == 0 and "status=ok" in proc.stdout
