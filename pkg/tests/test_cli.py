import json
import subprocess
import sys

import jsonschema
import pytest

from gmla import cli
from gmla.report import ReportEnvelope

from test_report import schema


def run(capsys, *args):
    code = cli.run(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_wf_planewave(capsys):
    code, out, _ = run(capsys, "wf", "--signal", "planewave(5)")
    assert code == 0
    rec = json.loads(out)
    jsonschema.validate(rec, schema("envelope"))
    jsonschema.validate(rec["results"]["estimate"], schema("wavefront"))
    assert 0.0 in rec["results"]["summary"]["gabor_in_deg"]


def test_parse_error_exit_2(capsys):
    code, out, err = run(capsys, "wf", "--signal", "planewave(")
    assert code == 2 and out == ""
    assert "offset 10" in err and "grammar" in err


@pytest.mark.parametrize("args", [["wf"], ["wf", "--signal", "delta", "--N", "100"], ["wf", "--bogus"],
                                  ["check", "nothing"], ["filter-demo", "--cone1", "0,10", "--cone2", "100,200"],
                                  ["wf", "--signal", "delta", "--annulus", "5,1"],
                                  ["wf", "--signal", "delta", "--path", "closed-form", "--window", "hermite(40)"]])
def test_usage_errors_exit_2(capsys, args):
    code, _, _ = run(capsys, *args)
    assert code == 2


def test_numeric_failure_recorded(capsys):
    code, out, _ = run(capsys, "wf", "--signal", "deltaApprox(0.3)", "--path", "grid")
    assert code == 1
    assert "empty fit window" in json.loads(out)["results"]["error"]["message"]


def test_parametrix_on_characteristic_cone_fails(capsys):
    code, out, _ = run(capsys, "parametrix", "--symbol", "x", "--chi", "coneCutoff(1,2,2,0.2,1)")
    assert code == 1 and "error" in json.loads(out)["results"]


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# demo\nN = 128\nD = 90\nhalf-width = 2\nsignal = delta\n")
    code, out, _ = run(capsys, "wf", "--config", str(cfg), "--D", "72")
    rec = json.loads(out)
    assert code == 0
    assert rec["config"]["N"] == 128 and rec["config"]["D"] == 72 and rec["config"]["half_width"] == 2
    assert len(rec["results"]["estimate"]["directions"]) == 72


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run(capsys, "wf", "--signal", "delta", "--config", str(cfg))[0] == 2


def test_warnings_surface_in_envelope(capsys):
    code, out, _ = run(capsys, "stft", "--signal", "gauss(15,0)")
    assert code == 0
    assert any("BoundaryDecayWarning" in w for w in json.loads(out)["warnings"])


def test_out_and_plot_files(tmp_path, capsys):
    out, plot = tmp_path / "r.json", tmp_path / "p.csv"
    code, stdout, _ = run(capsys, "wf", "--signal", "delta", "--out", str(out), "--plot", str(plot))
    assert code == 0 and stdout == ""
    env = ReportEnvelope.loads(out.read_text())
    assert env.command == "wf" and "out" not in env.config
    assert plot.read_text().startswith("# theta_deg,s_star,gamma_g,flag")


def test_plot_kind_mismatch_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "stft", "--signal", "gauss(0,0)", "--plot", str(tmp_path / "p.csv"),
                       "--plot-kind", "polar")
    assert code == 2 and "needs a wave front estimate" in err


def test_sobolev_mode_membership(capsys):
    code, out, _ = run(capsys, "wf", "--signal", "delta", "--mode", "sobolev", "--s=-1,0")
    res = json.loads(out)["results"]["membership"]
    assert code == 0 and res["-1"]["in_deg"] == [] and 90.0 in res["0"]["in_deg"]


@pytest.mark.parametrize("args", [
    ["check", "moyal", "--signal", "hermite(3)"],
    ["check", "weylwick", "--symbol", "bracket(2)"],
    ["check", "union-equality", "--signal", "chirp(2)"],
    ["check", "fourier-rotation", "--signal", "delta"],
    ["check", "window-invariance", "--signal", "planewave(5)"],
    ["check", "microlocal", "--signal", "delta", "--symbol", "bracket(2)"],
    ["check", "microelliptic", "--signal", "delta", "--symbol", "x^2", "--m-prime", "2"],
    ["symcheck", "--symbol", "x^2+xi^2"],
    ["qnorm", "--signal", "hermite(2)", "--s", "0,1", "--method", "weyl-elliptic"],
    ["op", "--signal", "hermite(1)", "--symbol", "x^2+xi^2", "--quantization", "antiwick", "--N", "64", "--L", "8"],
])
def test_commands_succeed(capsys, args):
    code, out, _ = run(capsys, *args)
    assert code == 0, out[-2000:]
    rec = json.loads(out)
    if "passed" in rec["results"]:
        assert rec["results"]["passed"] is True


def test_determinism(capsys):
    args = ["wf", "--signal", "chirp(2)", "--mode", "sobolev", "--s", "0"]
    a = ReportEnvelope.loads(run(capsys, *args)[1]).payload()
    b = ReportEnvelope.loads(run(capsys, *args)[1]).payload()
    assert a == b


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gmla", "check", "moyal", "--signal", "gauss(0,0)"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["passed"] is True
