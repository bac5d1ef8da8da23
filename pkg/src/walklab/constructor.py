"""Construction of the positive harmonic profile of a domain by exhaustion,
Martin kernels on matched truncations, and cross-candidate uniqueness checks.

The exhaustion solves the killed-walk Dirichlet problem on growing ball
windows with data 0 on the domain-boundary part and prescribed data on the
sphere part, normalizing each solution at a fixed reference point. Candidates
built from different sphere data must stabilize toward the same profile; the
convergence log records how fast they do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    DegenerateCandidateError,
    InvalidRegionError,
    NonConvergenceError,
    UnreachableReferenceError,
)
from .geometry import (
    LipschitzDomain,
    PointIndex,
    Region,
    as_point,
    ball,
    enumerate_region,
)
from .kernels import TransitionKernel
from .solver import DEFAULT_TOL, Field, LatticeSystem

DEFAULT_REFERENCE_OFFSET = 8
# deviations below this floor are solver noise, not a stabilization signal
STALL_FLOOR_FACTOR = 100.0


@dataclass(frozen=True)
class ExhaustionSchedule:
    """Increasing window radii with the anchor (a domain boundary point, the
    origin by default) and the normalization reference x0 = anchor + R_ref*e1."""

    radii: tuple
    anchor: tuple = None
    reference: tuple = None

    def __post_init__(self):
        radii = tuple(int(R) for R in self.radii)
        if not radii or any(b <= a for a, b in zip(radii, radii[1:])):
            raise InvalidRegionError("schedule radii must be strictly increasing")
        object.__setattr__(self, "radii", radii)
        if self.anchor is None:
            raise InvalidRegionError("schedule anchor must be set (use make_schedule)")
        object.__setattr__(self, "anchor", as_point(self.anchor))
        object.__setattr__(self, "reference", as_point(self.reference))
        ref_dist = math.dist(self.anchor, self.reference)
        if any(R < ref_dist for R in radii):
            raise InvalidRegionError(
                "every window must contain the normalization reference")


def make_schedule(radii, dimension: int, anchor=None,
                  reference_offset: int = DEFAULT_REFERENCE_OFFSET) -> ExhaustionSchedule:
    if anchor is None:
        anchor = (0,) * dimension
    anchor = as_point(anchor)
    reference = (anchor[0] + int(reference_offset),) + anchor[1:]
    return ExhaustionSchedule(radii=tuple(radii), anchor=anchor, reference=reference)


# -- outer (sphere-part) boundary data variants ------------------------------

def _data_sphere_one(bpts, anchor, R):
    return np.ones(len(bpts))


def _data_sphere_upper_half(bpts, anchor, R):
    # indicator of the upper half of the sphere part, by height above the anchor
    h = bpts[:, 0] - anchor[0]
    return (2 * h >= R).astype(np.float64)


def _data_sphere_linear(bpts, anchor, R):
    h = (bpts[:, 0] - anchor[0]).astype(np.float64)
    return np.maximum(h, 0.0) / float(R)


DATA_VARIANTS = {
    "sphere-one": _data_sphere_one,
    "sphere-upper-half": _data_sphere_upper_half,
    "sphere-linear": _data_sphere_linear,
}


@dataclass
class HarmonicCandidate:
    """Normalized positive harmonic field on one exhaustion window.

    ``closure`` holds values on interior plus boundary (zero on the
    domain-boundary part); ``interior`` is its restriction to the window
    interior. The value at the reference point is exactly 1.
    """

    closure: Field
    interior: Field
    window_radius: int
    anchor: tuple
    reference: tuple
    data_label: str
    residual: float

    def value(self, point) -> float:
        return self.closure.at(point)


@dataclass
class ConvergenceLog:
    radii: list
    deviations: list  # max relative change on the first window, per step
    inner_radius: int

    @property
    def stabilizing(self) -> bool:
        if len(self.deviations) < 2:
            return True
        return self.deviations[-1] <= self.deviations[0]


def _solve_window(domain, kernel, anchor, R, data_label, tol, method):
    interior = enumerate_region(ball(anchor, R), domain, kernel.steps_array())
    if len(interior) == 0:
        raise InvalidRegionError(f"window of radius {R} contains no domain points")
    sys = LatticeSystem(interior, kernel)
    bpts = sys.boundary_points
    in_c = domain.contains_array(bpts)
    g = np.zeros(len(bpts))
    fn = DATA_VARIANTS[data_label]
    g[in_c] = fn(bpts[in_c], np.asarray(anchor, dtype=np.int64), R)
    u = sys.solve_boundary_data(g, method=method, tol=tol)
    res = float(np.abs(sys.A @ u - sys.B @ g).max())
    return sys, u, g, res


def construct_harmonic(schedule: ExhaustionSchedule, domain: LipschitzDomain,
                       kernel: TransitionKernel, tol: float = DEFAULT_TOL,
                       data: str = "sphere-one", method: str = "auto",
                       ) -> tuple[HarmonicCandidate, ConvergenceLog]:
    """Run the exhaustion over the schedule; return the candidate at the
    largest radius and the log of max relative deviations between consecutive
    candidates measured on the first (fixed) window.

    Raises NonConvergenceError when deviations stop decreasing while still
    above solver noise.
    """
    if data not in DATA_VARIANTS:
        raise ValueError(f"unknown data variant {data!r}; "
                         f"choose from {sorted(DATA_VARIANTS)}")
    anchor = schedule.anchor
    x0 = schedule.reference
    inner_pts = enumerate_region(ball(anchor, schedule.radii[0]), domain,
                                 kernel.steps_array())
    inner_index = PointIndex(inner_pts)

    prev_inner = None
    deviations = []
    last = None
    for R in schedule.radii:
        sys, u, g, res = _solve_window(domain, kernel, anchor, R, data, tol, method)
        i0 = sys.index.index_of(x0)
        if i0 < 0:
            raise InvalidRegionError(f"reference {x0} outside window of radius {R}")
        u0 = float(u[i0])
        if u0 <= 0.0:
            raise UnreachableReferenceError(
                f"solution vanishes at the reference {x0} on window R={R}")
        h = u / u0
        idx = sys.index.lookup(inner_pts)
        cur_inner = h[idx]
        if prev_inner is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                dev = float(np.abs(cur_inner / prev_inner - 1.0).max())
            deviations.append(dev)
        prev_inner = cur_inner
        last = (sys, h, g / u0, R, res / max(u0, 1.0))

    floor = max(STALL_FLOOR_FACTOR * tol, 1e-13)
    for i in range(2, len(deviations)):
        if (deviations[i - 2] <= deviations[i - 1] <= deviations[i]
                and deviations[i] > floor):
            raise NonConvergenceError(
                "exhaustion deviations stopped decreasing: "
                + ", ".join(f"{d:.3e}" for d in deviations),
                deviations=deviations)

    sys, h, gb, R, res = last
    interior_field = Field(sys.points, h)
    if interior_field.values.min() <= 0.0:
        raise DegenerateCandidateError(
            "exhaustion solution is not strictly positive on the window interior")
    pts = np.vstack([sys.points, sys.boundary_points])
    vals = np.concatenate([h, gb])
    order = np.lexsort(pts.T[::-1])
    candidate = HarmonicCandidate(
        closure=Field(pts[order], vals[order]),
        interior=interior_field,
        window_radius=int(schedule.radii[-1]),
        anchor=anchor,
        reference=x0,
        data_label=data,
        residual=res,
    )
    log = ConvergenceLog(radii=list(schedule.radii), deviations=deviations,
                         inner_radius=int(schedule.radii[0]))
    return candidate, log


# ---------------------------------------------------------------------------
# Martin kernels
# ---------------------------------------------------------------------------


def martin_window_radius(y, anchor, factor: int = 4) -> int:
    """Truncation radius tied to the escape point: factor * |y - anchor|."""
    return int(math.ceil(factor * math.dist(as_point(y), as_point(anchor))))


def martin_profile(y, window: Region, domain: LipschitzDomain,
                   kernel: TransitionKernel, x0, tol: float = DEFAULT_TOL,
                   method: str = "auto") -> Field:
    """Martin kernel started at ``y``, as a field over the window interior:
    Green(y, x) / Green(y, x0), computed from one transpose solve on the
    stated truncation."""
    interior = enumerate_region(window, domain, kernel.steps_array())
    sys = LatticeSystem(interior, kernel)
    iy = sys.index.index_of(as_point(y))
    if iy < 0:
        raise InvalidRegionError(f"escape point {as_point(y)} outside the window")
    rhs = np.zeros(sys.n)
    rhs[iy] = 1.0
    grow = sys.solve_rhs(rhs, method=method, tol=tol, trans="T")
    i0 = sys.index.index_of(as_point(x0))
    if i0 < 0:
        raise InvalidRegionError(f"reference {as_point(x0)} outside the window")
    g0 = float(grow[i0])
    if g0 <= 0.0:
        raise UnreachableReferenceError(
            f"Green value at the reference {as_point(x0)} vanishes")
    return Field(sys.points, grow / g0)


def martin_kernel(y, x, window: Region, domain: LipschitzDomain,
                  kernel: TransitionKernel, x0, tol: float = DEFAULT_TOL,
                  method: str = "auto") -> float:
    """Single Martin-kernel value Green(y, x) / Green(y, x0) on the window."""
    prof = martin_profile(y, window, domain, kernel, x0, tol=tol, method=method)
    return prof.at(as_point(x))


# ---------------------------------------------------------------------------
# Uniqueness comparison
# ---------------------------------------------------------------------------


@dataclass
class UniquenessReport:
    pairs: list  # (label_a, label_b, max_relative_deviation, witness point)
    inner_radius: int

    @property
    def max_deviation(self) -> float:
        return max((p[2] for p in self.pairs), default=0.0)


def uniqueness_check(candidates, inner_radius: int,
                     domain: LipschitzDomain | None = None) -> UniquenessReport:
    """Pairwise max of |h_a / h_b - 1| over the inner window, after
    renormalizing every candidate at its reference point. All candidates must
    share anchor and reference."""
    cands = list(candidates)
    if len(cands) < 2:
        raise ValueError("need at least two candidates to compare")
    anchor = cands[0].anchor
    x0 = cands[0].reference
    for c in cands[1:]:
        if c.anchor != anchor or c.reference != x0:
            raise ValueError("candidates must share anchor and reference")
    base = cands[0]
    inner_pts = base.interior.points
    sel = _ball_mask(inner_pts, anchor, inner_radius)
    inner_pts = inner_pts[sel]
    vals = []
    for c in cands:
        raw = c.interior.lookup(inner_pts)
        ref = c.interior.at(x0)
        if ref <= 0.0 or raw.min() <= 0.0:
            raise DegenerateCandidateError(
                f"candidate {c.data_label!r} is not positive on the inner window")
        vals.append(raw / ref)
    pairs = []
    for a in range(len(cands)):
        for b in range(a + 1, len(cands)):
            dev = np.abs(vals[a] / vals[b] - 1.0)
            w = int(dev.argmax())
            pairs.append((cands[a].data_label, cands[b].data_label,
                          float(dev.max()), tuple(int(q) for q in inner_pts[w])))
    return UniquenessReport(pairs=pairs, inner_radius=int(inner_radius))


def _ball_mask(pts: np.ndarray, center, R) -> np.ndarray:
    c = np.asarray(as_point(center), dtype=np.int64)
    diff = pts - c
    Rf = Fraction(R)
    return (diff * diff).sum(axis=1) * Rf.denominator**2 <= Rf.numerator**2
