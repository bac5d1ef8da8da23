"""Experiment configuration: strict JSON parsing (unknown fields are errors,
never ignored) plus the kernel and domain builders the CLI uses.

Rationals may be written as strings ("3/10") anywhere a weight or slope is
expected; they stay exact all the way into the kernel tables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .geometry import LipschitzDomain, LipschitzProfile
from .kernels import (
    TransitionKernel,
    cosine_kernel,
    homogeneous_kernel,
    lazy_srw_kernel,
    parity_kernel_2d,
    periodic_kernel,
    srw_kernel,
)
from .reports import canonical_digest

_TOP_KEYS = {
    "dimension", "kernel", "domain", "experiment", "seed", "tol",
    "radii", "grid", "anchor", "reference_offset", "inner_radius",
    "paths", "path_cap", "region", "data", "target", "data_variants",
    "window_factor", "start",
}
_KERNEL_KEYS = {
    "srw": {"kind"},
    "lazy": {"kind", "hold"},
    "homogeneous": {"kind", "steps", "weights"},
    "periodic": {"kind", "steps", "period", "weights"},
    "parity": {"kind"},
    "cosine": {"kind", "base", "amp", "freq"},
}
_PROFILE_KEYS = {
    "constant-zero": {"kind"},
    "piecewise-linear": {"kind", "slopes", "offsets", "lipschitz_constant"},
    "explicit-table": {"kind", "window_lo", "window_hi", "values"},
}


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown field {sorted(unknown)[0]!r} in {where}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed configuration plus the digest of its canonical JSON form."""

    raw: dict
    digest: str
    path: str | None = None

    @property
    def dimension(self) -> int:
        return int(self.raw["dimension"])

    def get(self, key, default=None):
        return self.raw.get(key, default)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"config {path} is not valid JSON: line {e.lineno}, column {e.colno}: {e.msg}"
        ) from e
    return parse_config(raw, path=str(path))


def parse_config(raw: dict, path: str | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")
    for req in ("dimension", "kernel", "domain"):
        if req not in raw:
            raise ConfigError(f"config is missing required field {req!r}")
    d = raw["dimension"]
    if not isinstance(d, int) or d < 1:
        raise ConfigError("dimension must be a positive integer")
    kspec = raw["kernel"]
    if not isinstance(kspec, dict) or "kind" not in kspec:
        raise ConfigError("kernel must be an object with a 'kind'")
    if kspec["kind"] not in _KERNEL_KEYS:
        raise ConfigError(f"unknown kernel kind {kspec['kind']!r}")
    _reject_unknown(kspec, _KERNEL_KEYS[kspec["kind"]], "kernel")
    dspec = raw["domain"]
    if not isinstance(dspec, dict) or set(dspec) != {"profile"}:
        raise ConfigError("domain must be an object with exactly a 'profile'")
    pspec = dspec["profile"]
    if not isinstance(pspec, dict) or "kind" not in pspec:
        raise ConfigError("domain profile must be an object with a 'kind'")
    if pspec["kind"] not in _PROFILE_KEYS:
        raise ConfigError(f"unknown profile kind {pspec['kind']!r}")
    _reject_unknown(pspec, _PROFILE_KEYS[pspec["kind"]], "domain profile")
    digest = canonical_digest(raw)
    return ExperimentConfig(raw=raw, digest=digest, path=path)


def build_kernel(cfg: ExperimentConfig) -> TransitionKernel:
    spec = cfg.raw["kernel"]
    kind = spec["kind"]
    d = cfg.dimension
    if kind == "srw":
        return srw_kernel(d)
    if kind == "lazy":
        return lazy_srw_kernel(d, Fraction(str(spec.get("hold", "1/2"))))
    if kind == "parity":
        if d != 2:
            raise ConfigError("parity kernel is two-dimensional")
        return parity_kernel_2d()
    if kind == "homogeneous":
        return homogeneous_kernel(spec["steps"], spec["weights"])
    if kind == "periodic":
        return periodic_kernel(spec["steps"], spec["period"], spec["weights"])
    if kind == "cosine":
        return cosine_kernel(d, spec["base"], spec["amp"], spec["freq"])
    raise ConfigError(f"unknown kernel kind {kind!r}")


def build_domain(cfg: ExperimentConfig) -> LipschitzDomain:
    pspec = cfg.raw["domain"]["profile"]
    kind = pspec["kind"]
    d = cfg.dimension
    if kind == "constant-zero":
        return LipschitzDomain(LipschitzProfile.constant_zero(d))
    if kind == "piecewise-linear":
        slopes = pspec["slopes"]
        offsets = pspec.get("offsets", [0] * len(slopes))
        if len(offsets) != len(slopes):
            raise ConfigError("offsets must match slopes one-to-one")
        pieces = []
        for a, b in zip(slopes, offsets):
            if not isinstance(a, list):
                a = [a]
            if len(a) != d - 1:
                raise ConfigError("each slope must have d-1 components")
            pieces.append(([Fraction(str(c)) for c in a], Fraction(str(b))))
        return LipschitzDomain(LipschitzProfile.piecewise_linear(d, pieces))
    if kind == "explicit-table":
        lo = tuple(int(c) for c in pspec["window_lo"])
        hi = tuple(int(c) for c in pspec["window_hi"])
        values = np.asarray(pspec["values"], dtype=object)
        table = {}
        it = np.ndindex(*[h - l + 1 for l, h in zip(lo, hi)])
        flat = values.reshape(-1)
        for i, off in enumerate(it):
            key = tuple(l + o for l, o in zip(lo, off))
            table[key] = Fraction(str(flat[i]))
        return LipschitzDomain(LipschitzProfile.from_table(d, table, lo, hi))
    raise ConfigError(f"unknown profile kind {kind!r}")


def parse_point(text: str, dimension: int) -> tuple:
    """Point syntax for CLI flags: '0' is the origin, otherwise
    colon- or comma-separated integer coordinates ('3:0' or '3,0')."""
    text = text.strip()
    if text == "0":
        return (0,) * dimension
    sep = ":" if ":" in text else ","
    coords = tuple(int(c) for c in text.split(sep))
    if len(coords) != dimension:
        raise ConfigError(f"point {text!r} has {len(coords)} coordinates, need {dimension}")
    return coords


def parse_region(text: str, dimension: int):
    """Region syntax for CLI flags: 'ball:y=0,R=32', 'cube:y=0,R=16',
    'collar:y=0,K=8,r=4'."""
    from .geometry import ball, collar, cube, interior_slab

    if ":" not in text:
        raise ConfigError(f"region {text!r} must look like 'ball:y=0,R=32'")
    kind, rest = text.split(":", 1)
    params = {}
    for part in rest.split(","):
        if "=" not in part:
            raise ConfigError(f"malformed region parameter {part!r}")
        key, val = part.split("=", 1)
        params[key.strip()] = val.strip()
    y = parse_point(params.pop("y", "0"), dimension)
    try:
        if kind == "ball":
            reg = ball(y, Fraction(params.pop("R")))
        elif kind == "cube":
            reg = cube(y, Fraction(params.pop("R")))
        elif kind == "collar":
            K = Fraction(params.pop("K"))
            r = Fraction(params.pop("r"))
            reg = collar(y, K * r, r)
        elif kind == "slab":
            R = Fraction(params.pop("R"))
            r = Fraction(params.pop("r"))
            reg = interior_slab(y, R, r)
        else:
            raise ConfigError(f"unknown region kind {kind!r}")
    except KeyError as e:
        raise ConfigError(f"region {text!r} is missing parameter {e.args[0]!r}") from e
    if params:
        raise ConfigError(f"unknown region parameter {sorted(params)[0]!r}")
    return reg
