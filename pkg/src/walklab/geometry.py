"""Lattice geometry: integer points, Lipschitz graph domains, step-dependent
boundaries, and the ball/cube/collar regions the experiments run on.

All membership tests are exact: lattice coordinates are integers, radii and
profile slopes are rationals, and comparisons reduce to integer arithmetic.
Floating point only appears in reported distances (square roots of exact
integer squared distances).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InvalidProfileError,
    InvalidRegionError,
    InvalidStepSetError,
    OutsideDomainError,
)

Point = tuple[int, ...]

# Coordinates are kept well inside int64 so squared distances and slope
# products cannot overflow.
_COORD_LIMIT = 2**40


def as_point(p) -> Point:
    return tuple(int(c) for c in p)


def as_point_array(points) -> np.ndarray:
    """Normalize a point / iterable of points / (n, d) array to int64 (n, d)."""
    arr = np.asarray(points, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"expected points of shape (n, d), got {arr.shape}")
    return arr


def lex_sort(pts: np.ndarray) -> np.ndarray:
    """Sort rows lexicographically (first coordinate is the primary key)."""
    if len(pts) == 0:
        return pts
    order = np.lexsort(pts.T[::-1])
    return pts[order]


def unique_points(pts: np.ndarray) -> np.ndarray:
    """Deduplicate rows; result is lexicographically sorted."""
    if len(pts) == 0:
        return pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 0)
    return np.unique(pts, axis=0)


class PointIndex:
    """Row lookup for a fixed set of lattice points.

    Points are keyed by their offset inside the set's bounding box, so a
    lookup is one searchsorted over int64 keys. Query points outside the
    bounding box simply miss.
    """

    def __init__(self, pts: np.ndarray):
        pts = as_point_array(pts)
        self.points = pts
        self.n, self.d = pts.shape
        if self.n == 0:
            self._keys = np.empty(0, dtype=np.int64)
            self._order = np.empty(0, dtype=np.int64)
            self._lo = np.zeros(self.d, dtype=np.int64)
            self._span = np.ones(self.d, dtype=np.int64)
            self._strides = np.ones(self.d, dtype=np.int64)
            return
        self._lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        self._span = hi - self._lo + 1
        if np.prod(self._span.astype(np.float64)) >= 2**62:
            raise ValueError("point set bounding box too large to index")
        strides = np.ones(self.d, dtype=np.int64)
        for k in range(self.d - 2, -1, -1):
            strides[k] = strides[k + 1] * self._span[k + 1]
        self._strides = strides
        keys = (pts - self._lo) @ strides
        self._order = np.argsort(keys, kind="stable")
        self._keys = keys[self._order]

    def lookup(self, qpts: np.ndarray) -> np.ndarray:
        """Row indices of query points, or -1 where absent."""
        qpts = as_point_array(qpts)
        if self.n == 0:
            return np.full(len(qpts), -1, dtype=np.int64)
        off = qpts - self._lo
        inbox = np.all((off >= 0) & (off < self._span), axis=1)
        keys = off @ self._strides
        pos = np.searchsorted(self._keys, keys)
        pos = np.clip(pos, 0, self.n - 1)
        hit = inbox & (self._keys[pos] == keys)
        out = np.where(hit, self._order[pos], -1)
        return out

    def index_of(self, point) -> int:
        idx = int(self.lookup(as_point_array([as_point(point)]))[0])
        return idx

    def __contains__(self, point) -> bool:
        return self.index_of(point) >= 0


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, float):
        return Fraction(x)  # exact binary expansion
    raise TypeError(f"cannot interpret {x!r} as a rational number")


# ---------------------------------------------------------------------------
# Lipschitz profiles and graph domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LipschitzProfile:
    """Boundary profile x1 = phi(x') with phi(0) = 0.

    Three exactly-representable families:

    * ``constant-zero``      phi == 0 (half-space / half-line)
    * ``piecewise-linear``   phi(x') = max_j (a_j . x' + b_j) with rational
                             a_j, b_j (convex piecewise-linear graphs)
    * ``explicit-table``     rational values on a bounded window of Z^(d-1),
                             extended by clamping coordinates to the window
    """

    kind: str
    dimension: int
    pieces: tuple = ()
    table: Mapping[Point, Fraction] | None = None
    window_lo: Point | None = None
    window_hi: Point | None = None

    def __post_init__(self):
        d = self.dimension
        if d < 1:
            raise InvalidProfileError("dimension must be >= 1")
        if self.kind == "constant-zero":
            return
        if self.kind == "piecewise-linear":
            if d < 2:
                raise InvalidProfileError("piecewise-linear profile needs d >= 2")
            if not self.pieces:
                raise InvalidProfileError("piecewise-linear profile needs >= 1 piece")
            for a, b in self.pieces:
                if len(a) != d - 1:
                    raise InvalidProfileError("slope vector length must be d-1")
            if max(b for _, b in self.pieces) != 0:
                raise InvalidProfileError("profile must satisfy phi(0) = 0")
            return
        if self.kind == "explicit-table":
            if self.table is None or self.window_lo is None or self.window_hi is None:
                raise InvalidProfileError("explicit-table profile needs table and window")
            zero = (0,) * (d - 1)
            if self.table.get(zero) != Fraction(0):
                raise InvalidProfileError("profile must satisfy phi(0) = 0")
            return
        raise InvalidProfileError(f"unknown profile kind {self.kind!r}")

    # -- construction -----------------------------------------------------

    @staticmethod
    def constant_zero(dimension: int) -> "LipschitzProfile":
        return LipschitzProfile(kind="constant-zero", dimension=dimension)

    @staticmethod
    def piecewise_linear(dimension: int, pieces: Iterable) -> "LipschitzProfile":
        """pieces: iterable of (slope vector, offset); entries rational."""
        norm = tuple(
            (tuple(_as_fraction(c) for c in a), _as_fraction(b)) for a, b in pieces
        )
        return LipschitzProfile(kind="piecewise-linear", dimension=dimension, pieces=norm)

    @staticmethod
    def from_table(dimension: int, table: Mapping, window_lo, window_hi) -> "LipschitzProfile":
        tbl = {as_point(k): _as_fraction(v) for k, v in table.items()}
        lo = as_point(window_lo)
        hi = as_point(window_hi)
        want = 1
        for a, b in zip(lo, hi):
            want *= b - a + 1
        if len(tbl) != want:
            raise InvalidProfileError("table must cover its window exactly")
        return LipschitzProfile(
            kind="explicit-table", dimension=dimension, table=tbl,
            window_lo=lo, window_hi=hi,
        )

    # -- evaluation --------------------------------------------------------

    def value(self, xprime: Sequence[int]) -> Fraction:
        xp = tuple(int(c) for c in xprime)
        if len(xp) != self.dimension - 1:
            raise ValueError("wrong x' length")
        if self.kind == "constant-zero":
            return Fraction(0)
        if self.kind == "piecewise-linear":
            return max(
                sum((c * v for c, v in zip(a, xp)), start=Fraction(0)) + b
                for a, b in self.pieces
            )
        clamped = tuple(
            min(max(c, lo), hi) for c, lo, hi in zip(xp, self.window_lo, self.window_hi)
        )
        return self.table[clamped]

    @property
    def lipschitz_sq(self) -> Fraction:
        """Exact square of the Lipschitz constant of the represented phi."""
        if self.kind == "constant-zero":
            return Fraction(0)
        if self.kind == "piecewise-linear":
            return max(sum(c * c for c in a) for a, _ in self.pieces)
        best = Fraction(0)
        keys = list(self.table.keys())
        for i in range(len(keys)):
            for j in range(i + 1, len(keys)):
                dx = sum((a - b) ** 2 for a, b in zip(keys[i], keys[j]))
                dv = (self.table[keys[i]] - self.table[keys[j]]) ** 2
                if dv * best.denominator > best.numerator * dx:
                    best = Fraction(dv, dx)
        return best

    @property
    def lipschitz_constant(self) -> float:
        return math.sqrt(float(self.lipschitz_sq))


@dataclass(frozen=True)
class LipschitzDomain:
    """Graph domain C = {x in Z^d : x1 > phi(x')}."""

    profile: LipschitzProfile

    @property
    def dimension(self) -> int:
        return self.profile.dimension

    def contains(self, point) -> bool:
        p = as_point(point)
        if len(p) != self.dimension:
            raise ValueError("point dimension mismatch")
        return Fraction(p[0]) > self.profile.value(p[1:])

    def contains_array(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized membership for an (n, d) int64 array."""
        pts = as_point_array(pts)
        prof = self.profile
        if prof.kind == "constant-zero":
            return pts[:, 0] > 0
        if prof.kind == "piecewise-linear":
            if np.any(np.abs(pts) > _COORD_LIMIT):
                raise ValueError("coordinates too large for exact vectorized test")
            ok = np.ones(len(pts), dtype=bool)
            x1 = pts[:, 0]
            xp = pts[:, 1:]
            for a, b in prof.pieces:
                den = np.lcm.reduce(
                    [c.denominator for c in a] + [b.denominator]
                )
                coeffs = np.array([int(c * den) for c in a], dtype=np.int64)
                off = int(b * den)
                # x1 > a.x' + b  <=>  den*x1 > sum(coeffs*x') + off
                lhs = int(den) * x1
                rhs = xp @ coeffs + off
                ok &= lhs > rhs
            return ok
        # explicit table: group by x' (windows are small by construction)
        vals = np.empty(len(pts), dtype=bool)
        for i, p in enumerate(pts):
            vals[i] = self.contains(tuple(p))
        return vals


def half_space(dimension: int) -> LipschitzDomain:
    return LipschitzDomain(LipschitzProfile.constant_zero(dimension))


def cone_domain(dimension: int, slope=1) -> LipschitzDomain:
    """Domain above phi(x') = slope * max_k |x'_k| (Lipschitz graph cone).

    In d = 2 with slope 1 this is the standard profile phi(x') = |x'|.
    """
    s = _as_fraction(slope)
    dp = dimension - 1
    pieces = []
    for k in range(dp):
        for sign in (1, -1):
            a = [Fraction(0)] * dp
            a[k] = sign * s
            pieces.append((a, Fraction(0)))
    return LipschitzDomain(LipschitzProfile.piecewise_linear(dimension, pieces))


# ---------------------------------------------------------------------------
# Step sets (geometry-side view: just integer vectors)
# ---------------------------------------------------------------------------


def unit_steps(dimension: int) -> np.ndarray:
    """Symmetric unit steps +-e_k, the default boundary structure."""
    eye = np.eye(dimension, dtype=np.int64)
    return np.vstack([eye, -eye])


def _steps_array(steps, dimension: int | None = None) -> np.ndarray:
    if steps is None:
        if dimension is None:
            raise ValueError("steps or dimension required")
        return unit_steps(dimension)
    if hasattr(steps, "__len__") and len(steps) == 0:
        raise InvalidStepSetError("empty step set")
    arr = as_point_array(steps)
    if arr.size == 0:
        raise InvalidStepSetError("empty step set")
    return arr


def boundary(points, steps) -> np.ndarray:
    """Step-set boundary of a finite set: points outside it reachable in one
    step from inside. Result is lexicographically sorted and disjoint from
    the input set."""
    pts = as_point_array(points)
    steps = _steps_array(steps)
    if pts.shape[1] != steps.shape[1]:
        raise ValueError("dimension mismatch between points and steps")
    index = PointIndex(pts)
    out = []
    for e in steps:
        nbr = pts + e
        miss = index.lookup(nbr) < 0
        if miss.any():
            out.append(nbr[miss])
    if not out:
        return np.empty((0, pts.shape[1]), dtype=np.int64)
    return unique_points(np.vstack(out))


def is_domain_boundary_point(point, domain: LipschitzDomain, steps=None) -> bool:
    """Whether a point lies on the step-set boundary of the domain."""
    p = as_point(point)
    if domain.contains(p):
        return False
    steps = _steps_array(steps, domain.dimension)
    back = np.asarray(p, dtype=np.int64) - steps
    return bool(domain.contains_array(back).any())


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """Ball, cube, collar, or interior slab around a center point.

    Radii are rationals; ball membership compares integer squared distance
    against the exact squared radius.
    """

    kind: str
    center: Point
    radius: Fraction
    inner: Fraction | None = None

    def __post_init__(self):
        if self.kind not in ("ball", "cube", "collar", "slab"):
            raise InvalidRegionError(f"unknown region kind {self.kind!r}")
        if self.radius < 1:
            raise InvalidRegionError("region radius must be >= 1")
        if self.kind in ("collar", "slab"):
            if self.inner is None:
                raise InvalidRegionError(f"{self.kind} region needs an inner radius")
            if self.inner < 0:
                raise InvalidRegionError("inner radius must be >= 0")
            if self.radius < self.inner:
                raise InvalidRegionError("outer radius must be >= inner radius")


def ball(center, R) -> Region:
    return Region("ball", as_point(center), _as_fraction(R))


def cube(center, R) -> Region:
    return Region("cube", as_point(center), _as_fraction(R))


def collar(center, R, r) -> Region:
    return Region("collar", as_point(center), _as_fraction(R), _as_fraction(r))


def interior_slab(center, R, r) -> Region:
    return Region("slab", as_point(center), _as_fraction(R), _as_fraction(r))


def _box_points(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """All lattice points of the box [lo, hi], lexicographic order."""
    axes = [np.arange(a, b + 1, dtype=np.int64) for a, b in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _shifted(mask: np.ndarray, big_lo: np.ndarray, out_lo: np.ndarray,
             out_shape: tuple, offset: np.ndarray) -> np.ndarray:
    """out[x] = mask[x + offset] for x in the output box; the mask box must
    contain the shifted output box."""
    start = out_lo + offset - big_lo
    slices = tuple(slice(int(s), int(s + n)) for s, n in zip(start, out_shape))
    return mask[slices]


def _sphere_offsets(r: Fraction, dim: int) -> np.ndarray:
    """All integer offsets o with |o|^2 <= r^2 (exact comparison)."""
    m = math.floor(r)
    lo = np.full(dim, -m, dtype=np.int64)
    hi = np.full(dim, m, dtype=np.int64)
    pts = _box_points(lo, hi)
    d2 = (pts * pts).sum(axis=1)
    keep = d2 * r.denominator**2 <= r.numerator**2
    return pts[keep]


def _domain_mask(lo: np.ndarray, hi: np.ndarray, domain: LipschitzDomain) -> np.ndarray:
    pts = _box_points(lo, hi)
    shape = tuple((hi - lo + 1).tolist())
    return domain.contains_array(pts).reshape(shape)


def _boundary_mask(lo: np.ndarray, hi: np.ndarray, domain: LipschitzDomain,
                   steps: np.ndarray) -> np.ndarray:
    """Mask over [lo, hi] of domain-boundary points (z not in C, z - e in C
    for some step e)."""
    maxstep = int(np.abs(steps).max()) if len(steps) else 0
    blo = lo - maxstep
    bhi = hi + maxstep
    inc = _domain_mask(blo, bhi, domain)
    shape = tuple((hi - lo + 1).tolist())
    here = _shifted(inc, blo, lo, shape, np.zeros(len(lo), dtype=np.int64))
    reach = np.zeros(shape, dtype=bool)
    for e in steps:
        reach |= _shifted(inc, blo, lo, shape, -np.asarray(e, dtype=np.int64))
    return reach & ~here


def enumerate_region(region: Region, domain: LipschitzDomain | None = None,
                     steps=None) -> np.ndarray:
    """Exact lattice points of the region (intersected with the domain when
    one is given), in lexicographic order.

    Collars and slabs require a domain; their distance split uses the
    step-set boundary (symmetric unit steps when none are passed).
    """
    c = np.asarray(region.center, dtype=np.int64)
    dim = len(c)
    R = region.radius
    m = math.floor(R)
    lo = c - m
    hi = c + m

    if region.kind == "cube":
        pts = _box_points(lo, hi)
        if domain is not None:
            pts = pts[domain.contains_array(pts)]
        return pts

    pts = _box_points(lo, hi)
    diff = pts - c
    d2 = (diff * diff).sum(axis=1)
    in_ball = d2 * R.denominator**2 <= R.numerator**2

    if region.kind == "ball":
        pts = pts[in_ball]
        if domain is not None:
            pts = pts[domain.contains_array(pts)]
        return pts

    if domain is None:
        raise InvalidRegionError(f"{region.kind} region requires a domain")
    steps = _steps_array(steps, dim)
    r = region.inner
    in_c = domain.contains_array(pts)
    near = _near_boundary_mask(lo, hi, domain, steps, r).ravel()
    base = in_ball & in_c
    if region.kind == "slab":
        return pts[base & ~near]
    return pts[base & near]


def _near_boundary_mask(lo, hi, domain, steps, r: Fraction) -> np.ndarray:
    """Mask over [lo, hi]: distance to the domain boundary <= r (exact)."""
    margin = math.floor(r)
    blo = lo - margin
    bhi = hi + margin
    bmask = _boundary_mask(blo, bhi, domain, steps)
    shape = tuple((hi - lo + 1).tolist())
    near = np.zeros(shape, dtype=bool)
    for o in _sphere_offsets(r, len(lo)):
        near |= _shifted(bmask, blo, lo, shape, o)
    return near


# ---------------------------------------------------------------------------
# Distance to the domain boundary
# ---------------------------------------------------------------------------


def distance_sq_to_boundary(point, domain: LipschitzDomain, steps=None) -> int:
    """Exact squared Euclidean distance from an interior point to the
    step-set boundary of the domain, by expanding-shell exhaustive scan."""
    p = as_point(point)
    if not domain.contains(p):
        raise OutsideDomainError(f"{p} is not in the domain")
    steps = _steps_array(steps, domain.dimension)
    parr = np.asarray(p, dtype=np.int64)
    col_depth = int(Fraction(p[0]) - domain.profile.value(p[1:])) + 1
    maxstep = int(np.abs(steps).max())
    cap = 4 * (col_depth + (2 + math.ceil(domain.profile.lipschitz_constant)) * maxstep) + 64
    best = None
    w = 1
    while w <= cap:
        shell = _cheb_shell(parr, w)
        cand = shell[~domain.contains_array(shell)]
        if len(cand):
            back = cand[:, None, :] - steps[None, :, :]
            flat = back.reshape(-1, len(p))
            reach = domain.contains_array(flat).reshape(len(cand), len(steps)).any(axis=1)
            cand = cand[reach]
            if len(cand):
                diff = cand - parr
                d2 = int((diff * diff).sum(axis=1).min())
                best = d2 if best is None else min(best, d2)
        if best is not None and best <= w * w:
            return best
        w += 1
    raise RuntimeError(f"no boundary point found within shell radius {cap} of {p}")


def distance_to_boundary(point, domain: LipschitzDomain, steps=None) -> float:
    """Euclidean distance from an interior point to the domain boundary."""
    return math.sqrt(distance_sq_to_boundary(point, domain, steps))


def _cheb_shell(center: np.ndarray, w: int) -> np.ndarray:
    """Points at Chebyshev distance exactly w from the center."""
    d = len(center)
    lo = center - w
    hi = center + w
    pts = _box_points(lo, hi)
    cheb = np.abs(pts - center).max(axis=1)
    return pts[cheb == w]


def boundary_distances_sq(pts, domain: LipschitzDomain, steps=None) -> np.ndarray:
    """Exact squared boundary distances for a batch of interior points.

    Materializes the domain boundary on a window guaranteed to contain every
    nearest boundary point, then answers nearest-neighbor queries with a
    KD-tree; the winning squared distance is recomputed in integers. Agrees
    with distance_sq_to_boundary (tested) but runs vectorized.
    """
    from scipy.spatial import cKDTree

    pts = as_point_array(pts)
    if not len(pts):
        return np.empty(0, dtype=np.int64)
    inside = domain.contains_array(pts)
    if not inside.all():
        bad = pts[~inside][0]
        raise OutsideDomainError(f"{tuple(bad)} is not in the domain")
    steps = _steps_array(steps, domain.dimension)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    # initial margin: deepest column depth is an upper bound on any distance
    depth = 8
    for p in pts[np.argsort(-pts[:, 0])[: min(4, len(pts))]]:
        depth = max(depth, int(Fraction(int(p[0])) - domain.profile.value(tuple(p[1:]))) + 1)
    margin = depth + int(np.abs(steps).max())
    while True:
        bpts = _boundary_points_in_box(lo - margin, hi + margin, domain, steps)
        if len(bpts):
            tree = cKDTree(bpts.astype(np.float64))
            dist, idx = tree.query(pts.astype(np.float64), k=1)
            if np.all(dist <= margin):
                diff = bpts[idx] - pts
                return (diff * diff).sum(axis=1)
        margin *= 2
        if margin > 2**24:
            raise RuntimeError("boundary search window exploded; check the domain")


def _boundary_points_in_box(lo, hi, domain, steps) -> np.ndarray:
    mask = _boundary_mask(np.asarray(lo), np.asarray(hi), domain, steps)
    pts = _box_points(np.asarray(lo), np.asarray(hi))
    return pts[mask.ravel()]


# ---------------------------------------------------------------------------
# Exterior volume fraction at a boundary point
# ---------------------------------------------------------------------------


def exterior_cone_fraction(y, R, domain: LipschitzDomain, steps=None) -> float:
    """Fraction of the closed cube around a boundary point that lies outside
    the domain. Positive uniformly in R for Lipschitz graphs; the measured
    value feeds the uniformity checks."""
    yp = as_point(y)
    steps = _steps_array(steps, domain.dimension)
    if not is_domain_boundary_point(yp, domain, steps):
        raise OutsideDomainError(f"{yp} is not a boundary point of the domain")
    reg = cube(yp, R)
    c = np.asarray(yp, dtype=np.int64)
    m = math.floor(reg.radius)
    lo, hi = c - m, c + m
    maxstep = int(np.abs(steps).max())
    out_lo, out_hi = lo - maxstep, hi + maxstep
    big_lo, big_hi = lo - 2 * maxstep, hi + 2 * maxstep
    big_shape = tuple((big_hi - big_lo + 1).tolist())
    qmask = np.zeros(big_shape, dtype=bool)
    inner = tuple(
        slice(2 * maxstep, 2 * maxstep + int(n)) for n in (hi - lo + 1)
    )
    qmask[inner] = True
    out_shape = tuple((out_hi - out_lo + 1).tolist())
    closure = _shifted(qmask, big_lo, out_lo, out_shape, np.zeros(len(c), dtype=np.int64))
    closure = closure.copy()
    for e in steps:
        closure |= _shifted(qmask, big_lo, out_lo, out_shape, -np.asarray(e, dtype=np.int64))
    pts = _box_points(out_lo, out_hi)
    pts = pts[closure.ravel()]
    outside = ~domain.contains_array(pts)
    return float(outside.sum()) / float(len(pts))
