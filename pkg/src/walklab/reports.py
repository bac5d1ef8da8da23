"""Reproducible artifacts: canonical config digests, field CSV round-trip,
and JSON experiment reports.

Every artifact embeds the digest of the configuration that produced it and
the tool version, so a reported constant can be traced back to its exact
setup. CSV values are rendered with 17 significant digits and round-trip
exactly through float64.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

TOOL_VERSION = "0.1.0"


def canonical_digest(obj) -> str:
    """SHA-256 of the canonical JSON rendering (sorted keys, no whitespace)."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_field_csv(fld, path, meta: dict | None = None) -> None:
    """Write a field as ``x1,...,xd,value`` rows in lexicographic point order,
    preceded by ``# key=value`` comment lines for the metadata."""
    from .solver import Field  # local to avoid an import cycle

    assert isinstance(fld, Field)
    path = Path(path)
    d = fld.points.shape[1]
    lines = []
    for key, val in (meta or {}).items():
        lines.append(f"# {key}={val}")
    lines.append(",".join([f"x{k + 1}" for k in range(d)] + ["value"]))
    for p, v in zip(fld.points, fld.values):
        coords = ",".join(str(int(c)) for c in p)
        lines.append(f"{coords},{v:.17g}")
    path.write_text("\n".join(lines) + "\n")


def read_field_csv(path):
    """Inverse of write_field_csv; comments and the header line are skipped."""
    from .solver import Field

    pts = []
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("x1"):
                continue
            parts = line.split(",")
            pts.append([int(c) for c in parts[:-1]])
            vals.append(float(parts[-1]))
    return Field(np.asarray(pts, dtype=np.int64), np.asarray(vals))


def write_json_report(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


@dataclass
class LabReport:
    """One measured experiment: the constants, the scale grid they were
    measured on, the witnesses that attained them, and everything needed to
    reproduce the run bit-for-bit."""

    experiment: str
    config_digest: str
    grid: dict
    constants: list
    witnesses: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    tool_version: str = TOOL_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, path) -> None:
        write_json_report(path, self.to_dict())
