"""Deterministic CSV/JSON artifacts, decay-rate targets and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

FLOAT_FORMAT = "%.17g"


def target_exponent(fld: str, p: float, k: int = 0, poisson: bool = True) -> float:
    """Sharp algebraic decay exponent of ``||d^k field||_{L^p}`` for the linear flow.

    Density decays like the heat kernel, ``-(3/2)(1 - 1/p) - k/2``.  With the
    Poisson coupling the momentum and electric field lose half a power.
    """
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    base = -1.5 * (1.0 - inv_p) - 0.5 * k
    if fld in ("m", "E") and poisson:
        base += 0.5
    return base


def target_tolerance(p: float) -> float:
    if p == 2:
        return 0.05
    return 0.1 if math.isinf(p) else 0.08


def config_hash(config: dict) -> str:
    """Short hash of the canonical JSON form (stable under key reordering)."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_plain)
    return hashlib.sha256(blob.encode()).hexdigest()[:10]


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "as_dict"):
        return _plain(obj.as_dict())
    return obj


def atomic_write(path, data: bytes) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r} in CSV data")
        return FLOAT_FORMAT % v
    return str(v)


def csv_text(rows, columns=None) -> str:
    rows = list(rows)
    if columns is None:
        if not rows:
            raise ValueError("columns are required for an empty table")
        columns = list(rows[0].keys())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def series_table(series: dict):
    """Rows and columns for a dict of norm series sharing one time grid."""
    items = list(series.values())
    columns = ["t"]
    data = {}
    t = items[0].t if items else np.empty(0)
    for s in items:
        if s.t.shape != t.shape or np.any(s.t != t):
            raise ValueError("series must share a time grid")
        p = "linf" if math.isinf(s.p) else f"l{s.p:g}"
        name = f"norm_{s.field.lower()}_{p}" + (f"_k{s.k}" if s.k else "")
        columns.append(name)
        data[name] = s.values
        if s.block_samples is not None:
            columns.append(name + "_avg")
            data[name + "_avg"] = s.averaged()
    rows = [{"t": float(ti), **{c: float(data[c][i]) for c in columns[1:]}}
            for i, ti in enumerate(t)]
    return rows, columns


def emit_csv(data, path, columns=None) -> Path:
    """RFC-4180 CSV with a header row, LF endings and 17 significant digits.

    ``data`` is a list of row dicts or a dict of norm series.
    """
    if isinstance(data, dict):
        data, columns = series_table(data)
    return atomic_write(path, csv_text(data, columns).encode())


def report_json(report: dict) -> bytes:
    return (json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n").encode()


def emit_report(report: dict, path) -> Path:
    """JSON with sorted keys; non-finite floats become null or "inf"."""
    return atomic_write(path, report_json(report))


def annotate_fits(fits, poisson: bool = True, sharp: bool = True) -> list:
    """Fit dicts with the expected exponent and a pass flag.

    With ``sharp`` the exponent must match the target within tolerance;
    otherwise it only has to decay at least as fast.
    """
    out = []
    for f in fits:
        d = f.as_dict()
        target = target_exponent(f.field, f.p, f.k, poisson)
        tol = target_tolerance(f.p)
        d["target"] = target
        d["tolerance"] = tol
        d["passed"] = bool(abs(f.exponent - target) <= tol if sharp else f.exponent <= target + tol)
        out.append(d)
    return out


@dataclass
class RunManifest:
    run_id: str
    kind: str
    config: dict
    artifacts: list = field(default_factory=list)
    tool_version: str = __version__
    started: float = field(default_factory=time.time)
    duration_s: float = 0.0
    status: str = "running"
    failure: str | None = None
    checks: dict = field(default_factory=dict)

    @classmethod
    def start(cls, kind: str, config: dict) -> "RunManifest":
        stamp = time.strftime("%Y%m%dT%H%M%SZ", time.gmtime())
        return cls(f"{stamp}-{config_hash(config)}", kind, config)

    def finish(self, status: str, failure: str | None = None):
        self.status = status
        self.failure = failure
        self.duration_s = time.time() - self.started

    def as_dict(self) -> dict:
        return {
            "run_id": self.run_id, "kind": self.kind, "config": self.config,
            "artifacts": [str(a) for a in self.artifacts], "tool_version": self.tool_version,
            "duration_s": self.duration_s, "status": self.status, "failure": self.failure,
            "checks": self.checks,
        }

    def write(self, directory) -> Path:
        return emit_report(self.as_dict(), Path(directory) / "manifest.json")
