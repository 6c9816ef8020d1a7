"""Fixed-rate run logs: columnar store, CSV persistence, plot-data export.

A trace is a dense (rows x columns) float table sampled every ``dt``.
CSV files carry one header row naming every column; a JSON sidecar holds
the schema version, config hash, seed, code version, and a digest of the
CSV payload so tampering and truncation are detectable on read. Floats
are written with ``repr`` (shortest round-trip form): reading a file
back yields bit-identical data.
"""

from __future__ import annotations

import hashlib
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA_VERSION = 1


class TraceError(RuntimeError):
    """Unreadable, truncated, or schema-incompatible trace file."""


@dataclass
class SimTrace:
    columns: list[str]
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != len(self.columns):
            raise ValueError("trace data shape does not match the column list")
        self._index = {name: i for i, name in enumerate(self.columns)}

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self._index[name]]

    def has_column(self, name: str) -> bool:
        return name in self._index

    def arm_prefixes(self) -> list[str]:
        seen = []
        for c in self.columns:
            if c.endswith("margin0") and c[:-7] not in seen:
                seen.append(c[:-7])
        return seen

    def validate(self, dt: float | None = None) -> None:
        if len(self) == 0:
            raise TraceError("empty trace")
        if not np.all(np.isfinite(self.data)):
            raise TraceError("trace contains non-finite values")
        t = self.column("t")
        steps = np.diff(t)
        if np.any(steps <= 0):
            raise TraceError("time column is not strictly increasing")
        if dt is not None and not np.allclose(steps, dt, rtol=1e-9, atol=1e-12):
            raise TraceError("time column spacing does not match dt")


class TraceRecorder:
    """Preallocated row-at-a-time builder used by the simulation loops."""

    def __init__(self, columns: list[str], n_rows: int, meta: dict | None = None):
        self.columns = list(columns)
        self.data = np.empty((n_rows, len(columns)))
        self._row = 0
        self.meta = dict(meta or {})

    def add_row(self, values: np.ndarray) -> None:
        self.data[self._row, :] = values
        self._row += 1

    def finish(self) -> SimTrace:
        return SimTrace(self.columns, self.data[: self._row].copy(), self.meta)


def _csv_bytes(trace: SimTrace) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(trace.columns))
    buf.write("\n")
    for row in trace.data:
        buf.write(",".join(repr(float(v)) for v in row))
        buf.write("\n")
    return buf.getvalue().encode()


def write_trace(trace: SimTrace, path: str | Path) -> Path:
    """Write CSV plus ``<path>.meta.json`` sidecar; returns the CSV path."""
    path = Path(path)
    payload = _csv_bytes(trace)
    path.write_bytes(payload)
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "n_rows": len(trace),
        "n_cols": len(trace.columns),
        "data_sha256": hashlib.sha256(payload).hexdigest(),
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    for key in ("config_hash", "seed", "scenario"):
        if key in trace.meta:
            sidecar[key] = trace.meta[key]
    Path(str(path) + ".meta.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def read_trace(path: str | Path, expected_config_hash: str | None = None,
               warn=None) -> SimTrace:
    """Exact inverse of write_trace.

    Raises TraceError on truncation or schema mismatch; integrity and
    config-hash mismatches are reported through ``warn`` (defaults to a
    stderr print) without rejecting the data.
    """
    import sys

    warn = warn or (lambda msg: print(f"warning: {msg}", file=sys.stderr))
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as exc:
        raise TraceError(f"cannot read trace: {exc}") from exc
    text = payload.decode()
    if not text.endswith("\n"):
        raise TraceError("trace file is truncated (missing final newline)")
    lines = text.splitlines()
    if len(lines) < 2:
        raise TraceError("trace file has no data rows")
    columns = lines[0].split(",")
    try:
        data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    except ValueError as exc:
        raise TraceError(f"malformed trace row: {exc}") from exc
    if data.shape[1] != len(columns):
        raise TraceError("row width does not match the header")

    meta: dict = {}
    sidecar_path = Path(str(path) + ".meta.json")
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text())
        if sidecar.get("schema_version") != SCHEMA_VERSION:
            raise TraceError(
                f"unsupported trace schema version {sidecar.get('schema_version')}")
        if sidecar.get("n_rows") != data.shape[0]:
            raise TraceError("row count does not match the sidecar (truncated?)")
        digest = hashlib.sha256(payload).hexdigest()
        if sidecar.get("data_sha256") not in (None, digest):
            warn(f"{path}: data digest mismatch (file edited after writing?)")
        if (expected_config_hash is not None
                and sidecar.get("config_hash") not in (None, expected_config_hash)):
            warn(f"{path}: config hash mismatch")
        meta = {k: sidecar[k] for k in ("config_hash", "seed", "scenario")
                if k in sidecar}
    trace = SimTrace(columns, data, meta)
    trace.validate()
    return trace


PLOT_KINDS = ("force-profile", "path3d", "error-profile")


def export_plotdata(trace: SimTrace, kind: str, path: str | Path) -> Path:
    """Emit the column subsets needed to redraw the standard figures."""
    if len(trace) == 0:
        raise TraceError("cannot export an empty trace")
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    path = Path(path)
    prefixes = trace.arm_prefixes() or [""]
    cols = ["t"]
    if kind == "force-profile":
        for pre in prefixes:
            cols += [f"{pre}fcontact", f"{pre}px", f"{pre}py", f"{pre}xd_px", f"{pre}xd_py"]
    elif kind == "path3d":
        for pre in prefixes:
            cols += [f"{pre}px", f"{pre}py", f"{pre}pz"]
    else:
        for pre in prefixes:
            cols += [f"{pre}err{i}" for i in range(6)]
    missing = [c for c in cols if not trace.has_column(c)]
    if missing:
        raise TraceError(f"trace lacks columns needed for {kind}: {missing}")
    sub = SimTrace(cols, np.column_stack([trace.column(c) for c in cols]), trace.meta)
    payload = _csv_bytes(sub)
    path.write_bytes(payload)
    return path
