import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmla import report as R
from gmla import wavefront as W
from gmla.grid import make_grid
from gmla.parser import parse_signal
from gmla.signals import sample_signal
from gmla.stft import make_window, stft

SCHEMAS = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


@given(st.floats(allow_nan=False))
def test_float_round_trip(v):
    assert float(R.loads(R.dumps(v))) == v


def test_format_float_special_values():
    assert R.format_float(1.0) == "1.0"
    assert R.format_float(0.1) == "0.10000000000000001"
    assert R.format_float(math.inf) == "Infinity" and R.format_float(-math.inf) == "-Infinity"
    assert R.format_float(math.nan) == "NaN"


def test_dumps_handles_numpy_and_complex():
    rec = R.loads(R.dumps({"a": np.arange(3), "b": np.float32(0.5), "c": 1 + 2j, "d": np.bool_(True)}))
    assert rec == {"a": [0, 1, 2], "b": 0.5, "c": [1.0, 2.0], "d": True}
    with pytest.raises(TypeError):
        R.dumps({"x": object()})


def test_envelope_round_trip_and_schema(tmp_path):
    env = R.ReportEnvelope("wf", {"L": 16.0, "N": 256, "oversample": 1, "window": "gaussian", "D": 360,
                                  "half_width": 3}, {"value": 0.1}, {"seconds": 1.0}, ["w"])
    p = tmp_path / "out" / "env.json"
    env.write(p)
    back = R.ReportEnvelope.loads(p.read_text())
    assert back == env
    jsonschema.validate(json.loads(p.read_text()), schema("envelope"))
    assert "timing" not in R.loads(env.payload())


def test_atomic_write_leaves_no_temp_files(tmp_path):
    p = tmp_path / "f.txt"
    R.atomic_write(p, "one")
    R.atomic_write(p, "two")
    assert p.read_text() == "two"
    assert [q.name for q in tmp_path.iterdir()] == ["f.txt"]


def test_wavefront_record_matches_schema():
    rec = json.loads(R.dumps(W.wavefront_closed_form(parse_signal("delta"))))
    jsonschema.validate(rec, schema("wavefront"))


def test_symbol_records_match_schemas():
    from gmla.parser import parse_symbol
    from gmla.symbols import estimate_char_set, seminorm_screen

    a = parse_symbol("x^2+xi^2")
    rec = json.loads(R.dumps(seminorm_screen(a, 2)))
    jsonschema.validate(rec, schema("seminorm"))
    rec = json.loads(R.dumps(estimate_char_set(a, 2, D=36)))
    jsonschema.validate(rec, schema("charset"))


def test_qnorm_record_matches_schema(small_grid):
    from gmla.operators import q_norm

    rec = json.loads(R.dumps(q_norm(sample_signal(parse_signal("hermite(1)"), small_grid), 1.0)))
    jsonschema.validate(rec, schema("qnorm"))


def test_heatmap_peak_at_origin(tmp_path, grid):
    F = stft(sample_signal(parse_signal("gauss(0,0)"), grid), make_window("gaussian", grid))
    p = tmp_path / "h.csv"
    R.emit_plot_data(F, "heatmap", p)
    rows = [r.split(",") for r in p.read_text().splitlines()[1:] if r]
    best = max(rows, key=lambda r: float(r[2]))
    assert float(best[0]) == 0.0 and float(best[1]) == 0.0


def test_plot_kind_mismatch(tmp_path, small_grid):
    F = stft(sample_signal(parse_signal("gauss(0,0)"), small_grid), make_window("gaussian", small_grid))
    with pytest.raises(TypeError):
        R.emit_plot_data(F, "polar", tmp_path / "p.csv")
    with pytest.raises(TypeError):
        R.emit_plot_data(W.wavefront_closed_form(parse_signal("delta"), D=36), "heatmap", tmp_path / "p.csv")
    with pytest.raises(ValueError):
        R.emit_plot_data(F, "bars", tmp_path / "p.csv")
