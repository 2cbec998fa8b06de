"""Report envelopes, lossless JSON serialization and atomic file output."""

import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = "1.0.0"


def format_float(v):
    """17 significant digits, with ".0" for integral values; Infinity/NaN as JSON5-style tokens."""
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    s = format(v, ".17g")
    if all(c not in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1)) if indent else ""
    end = " " * (indent * level) if indent else ""
    nl = "\n" if indent else ""
    sep = ": " if indent else ":"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode([float(obj.real), float(obj.imag)], indent, level)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}{sep}{_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{" + nl + ("," + nl).join(items) + nl + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[" + nl + ("," + nl).join(items) + nl + end + "]"
    if hasattr(obj, "to_record"):
        return _encode(obj.to_record(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    return _encode(obj, indent, 0) + "\n"


def loads(text):
    return json.loads(text)


def atomic_write(path, text):
    """Write text to path via a temporary file in the same directory and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class ReportEnvelope:
    command: str
    config: dict
    results: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION

    def to_record(self):
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "timing": self.timing,
            "warnings": self.warnings,
        }

    def payload(self):
        """Serialized envelope without timing, which is the deterministic part."""
        rec = self.to_record()
        rec.pop("timing")
        return dumps(rec)

    def dumps(self):
        return dumps(self.to_record())

    def write(self, path):
        atomic_write(path, self.dumps())

    @classmethod
    def from_record(cls, rec):
        return cls(rec["command"], rec["config"], rec["results"], rec.get("timing", {}),
                   rec.get("warnings", []), rec["schema_version"])

    @classmethod
    def loads(cls, text):
        return cls.from_record(loads(text))


def heatmap_csv(F):
    """Rows x, xi, |V| for gnuplot's splot (blank line between x blocks)."""
    lines = ["# x,xi,absV"]
    X, XI = F.mesh()
    A = np.abs(F.values)
    for i in range(X.shape[0]):
        for j in range(X.shape[1]):
            lines.append(f"{format_float(X[i, j])},{format_float(XI[i, j])},{format_float(A[i, j])}")
        lines.append("")
    return "\n".join(lines) + "\n"


def polar_csv(est):
    """Rows theta_deg, s_star, gamma_g, flag."""
    lines = ["# theta_deg,s_star,gamma_g,flag"]
    for t, s, g, v in zip(est.thetas, est.s_star, est.gamma_g, est.gabor):
        lines.append(f"{format_float(np.degrees(t))},{format_float(s)},{format_float(g)},{v}")
    return "\n".join(lines) + "\n"


def emit_plot_data(result, kind, path):
    """Write heatmap (PhaseField) or polar (WavefrontEstimate) CSV data."""
    from gmla.grid import PhaseField
    from gmla.wavefront import WavefrontEstimate

    if kind == "heatmap":
        if not isinstance(result, PhaseField):
            raise TypeError("heatmap data needs a phase field")
        atomic_write(path, heatmap_csv(result))
    elif kind == "polar":
        if not isinstance(result, WavefrontEstimate):
            raise TypeError("polar data needs a wave front estimate")
        atomic_write(path, polar_csv(result))
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
