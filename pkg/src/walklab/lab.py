"""Measured comparison constants for positive harmonic functions of the
killed walk: interior and boundary Harnack ratios, the vanishing-portion
growth bound, dyadic contraction, collar exit-ratio onsets, and boundary
decay exponents.

Every extremal constant is computed over the harmonic-measure basis columns
of the relevant window (indicator data at each admissible boundary point).
These columns are the extreme rays of the positive harmonic cone on the
window, and each measured functional is a max of ratios of nonnegative
linear functionals, so the basis maximum is the exact window constant; a
random positive combination can never exceed it (property-tested).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    DegenerateGeometryError,
    InsufficientDataError,
    InvalidAnchorError,
    OnsetNotFoundError,
)
from .geometry import (
    LipschitzDomain,
    PointIndex,
    as_point,
    boundary,
    boundary_distances_sq,
    _box_points,
)
from .kernels import TransitionKernel
from .solver import DEFAULT_TOL, LatticeSystem, exit_split

_CHUNK = 96


def _ball_points_sq(center, radius_sq, domain: LipschitzDomain | None = None) -> np.ndarray:
    """Lattice points with |x - center|^2 <= radius_sq (exact), optionally
    intersected with the domain; lexicographic order."""
    c = np.asarray(as_point(center), dtype=np.int64)
    s = Fraction(radius_sq)
    m = math.isqrt(s.numerator // s.denominator)
    while (m + 1) ** 2 * s.denominator <= s.numerator:
        m += 1
    pts = _box_points(c - m, c + m)
    diff = pts - c
    keep = (diff * diff).sum(axis=1) * s.denominator <= s.numerator
    pts = pts[keep]
    if domain is not None:
        pts = pts[domain.contains_array(pts)]
    return pts


@dataclass
class BasisColumns:
    """Harmonic-measure basis of a window: values on interior plus boundary
    rows for each admissible boundary point's indicator data."""

    points: np.ndarray      # stacked interior + boundary points (unsorted mix)
    values: np.ndarray      # (len(points), n_basis)
    index: PointIndex
    basis_points: np.ndarray
    interior_rows: np.ndarray
    in_domain: np.ndarray | None = None


def _basis_columns(sys: LatticeSystem, admissible: np.ndarray,
                   tol: float = DEFAULT_TOL, method: str = "auto") -> BasisColumns:
    adm = np.flatnonzero(admissible)
    if len(adm) == 0:
        raise DegenerateGeometryError("no admissible boundary points for the basis")
    nb = len(sys.boundary_points)
    cols = []
    for s in range(0, len(adm), _CHUNK):
        ch = adm[s:s + _CHUNK]
        G = np.zeros((nb, len(ch)))
        G[ch, np.arange(len(ch))] = 1.0
        cols.append(sys.solve_boundary_data(G, method=method, tol=tol))
    U_int = np.hstack(cols) if len(cols) > 1 else cols[0]
    U_bnd = np.zeros((nb, len(adm)))
    U_bnd[adm, np.arange(len(adm))] = 1.0
    pts = np.vstack([sys.points, sys.boundary_points])
    U = np.vstack([U_int, U_bnd])
    interior_rows = np.zeros(len(pts), dtype=bool)
    interior_rows[: sys.n] = True
    return BasisColumns(points=pts, values=U, index=PointIndex(pts),
                        basis_points=sys.boundary_points[adm],
                        interior_rows=interior_rows)


def _rows_of(basis: BasisColumns, pts: np.ndarray) -> np.ndarray:
    idx = basis.index.lookup(pts)
    if np.any(idx < 0):
        missing = pts[idx < 0][0]
        raise DegenerateGeometryError(
            f"point {tuple(missing)} missing from the window closure")
    return idx


# ---------------------------------------------------------------------------
# Interior Harnack
# ---------------------------------------------------------------------------


@dataclass
class HarnackResult:
    R: int
    constant: float
    witness_data_point: tuple
    argmax_point: tuple
    argmin_point: tuple
    n_basis: int


def harnack_constant(y, R: int, kernel: TransitionKernel,
                     tol: float = DEFAULT_TOL, method: str = "auto") -> HarnackResult:
    """Exact best constant in max <= C * min over the R-ball, for nonnegative
    harmonic functions on the 2R-ball window around y."""
    yp = as_point(y)
    window = _ball_points_sq(yp, 4 * R * R)
    sys = LatticeSystem(window, kernel)
    basis = _basis_columns(sys, np.ones(len(sys.boundary_points), dtype=bool),
                           tol=tol, method=method)
    inner = _ball_points_sq(yp, R * R)
    rows = _rows_of(basis, inner)
    V = basis.values[rows]
    vmin = V.min(axis=0)
    vmax = V.max(axis=0)
    if vmin.min() <= 0.0:
        raise DegenerateGeometryError("a basis column vanishes on the inner ball")
    ratios = vmax / vmin
    z = int(ratios.argmax())
    return HarnackResult(
        R=int(R), constant=float(ratios[z]),
        witness_data_point=tuple(int(c) for c in basis.basis_points[z]),
        argmax_point=tuple(int(c) for c in inner[int(V[:, z].argmax())]),
        argmin_point=tuple(int(c) for c in inner[int(V[:, z].argmin())]),
        n_basis=V.shape[1],
    )


@dataclass
class LocalHarnackResult:
    max_ratio: float
    bound: float  # 1 / alpha, the one-step ellipticity bound
    witness_pair: tuple
    n_pairs: int


def local_harnack_constant(y, R: int, kernel: TransitionKernel,
                           tol: float = DEFAULT_TOL,
                           method: str = "auto") -> LocalHarnackResult:
    """Largest one-step ratio u(x + e) / u(x) over the basis of the 2R-ball
    window, x interior. Bounded by 1/alpha since u(x) >= pi(x, e) u(x + e)."""
    yp = as_point(y)
    window = _ball_points_sq(yp, 4 * R * R)
    sys = LatticeSystem(window, kernel)
    basis = _basis_columns(sys, np.ones(len(sys.boundary_points), dtype=bool),
                           tol=tol, method=method)
    steps = kernel.steps_array()
    U = basis.values
    best = 0.0
    witness = None
    n_pairs = 0
    int_rows = np.arange(sys.n)
    for e in steps:
        nbr_idx = basis.index.lookup(sys.points + e)
        ok = nbr_idx >= 0
        n_pairs += int(ok.sum())
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = U[nbr_idx[ok]] / U[int_rows[ok]]
        m = float(np.nanmax(ratio)) if ratio.size else 0.0
        if m > best:
            best = m
            i, z = np.unravel_index(int(np.nanargmax(ratio)), ratio.shape)
            src = sys.points[int_rows[ok][i]]
            witness = (tuple(int(c) for c in src),
                       tuple(int(c) for c in src + e))
    return LocalHarnackResult(max_ratio=best, bound=1.0 / kernel.alpha,
                              witness_pair=witness, n_pairs=n_pairs)


# ---------------------------------------------------------------------------
# Vanishing-portion estimates (growth bound, contraction, boundary Harnack)
# ---------------------------------------------------------------------------


def _vanishing_window_basis(y, domain, kernel, window_sq, vanish_sq,
                            tol=DEFAULT_TOL, method="auto"):
    """Basis of the window C intersect ball(y, sqrt(window_sq)) restricted to
    data vanishing on the domain-boundary part within sqrt(vanish_sq)."""
    yp = as_point(y)
    interior = _ball_points_sq(yp, window_sq, domain)
    if len(interior) == 0:
        raise DegenerateGeometryError("empty window")
    sys = LatticeSystem(interior, kernel)
    bpts = sys.boundary_points
    in_c = domain.contains_array(bpts)
    diff = bpts - np.asarray(yp, dtype=np.int64)
    d2 = (diff * diff).sum(axis=1)
    vs = Fraction(vanish_sq)
    forced_zero = (~in_c) & (d2 * vs.denominator <= vs.numerator)
    admissible = ~forced_zero
    basis = _basis_columns(sys, admissible, tol=tol, method=method)
    basis.in_domain = np.concatenate([
        np.ones(sys.n, dtype=bool), in_c,
    ])
    return sys, basis


def _anchor_row(basis: BasisColumns, sys: LatticeSystem, y, R,
                domain: LipschitzDomain) -> int:
    a = (as_point(y)[0] + int(R),) + as_point(y)[1:]
    if not domain.contains(a):
        raise InvalidAnchorError(f"anchor {a} is outside the domain")
    i = sys.index.index_of(a)
    if i < 0:
        raise InvalidAnchorError(f"anchor {a} is outside the window interior")
    return i


@dataclass
class CarlesonResult:
    R: int
    constant: float
    anchor: tuple
    witness_data_point: tuple
    witness_point: tuple
    n_basis: int


def carleson_constant(y, R: int, domain: LipschitzDomain,
                      kernel: TransitionKernel, tol: float = DEFAULT_TOL,
                      method: str = "auto") -> CarlesonResult:
    """Largest value on the R-ball relative to the anchor y + R*e1, over
    basis functions on C ball(3R) vanishing on the boundary portion within 2R."""
    yp = as_point(y)
    sys, basis = _vanishing_window_basis(
        y, domain, kernel, 9 * R * R, 4 * R * R, tol=tol, method=method)
    ia = _anchor_row(basis, sys, yp, R, domain)
    anchor_vals = basis.values[ia]
    keep = anchor_vals > 0.0
    if not keep.any():
        raise DegenerateGeometryError("every basis column vanishes at the anchor")
    eval_pts = _ball_points_sq(yp, R * R, domain)
    rows = _rows_of(basis, eval_pts)
    V = basis.values[rows][:, keep]
    ratios = V / anchor_vals[keep][None, :]
    x, z = np.unravel_index(int(ratios.argmax()), ratios.shape)
    kept_pts = basis.basis_points[keep]
    a = (yp[0] + int(R),) + yp[1:]
    return CarlesonResult(
        R=int(R), constant=float(ratios[x, z]), anchor=a,
        witness_data_point=tuple(int(c) for c in kept_pts[z]),
        witness_point=tuple(int(c) for c in eval_pts[x]),
        n_basis=int(keep.sum()),
    )


@dataclass
class ContractionResult:
    R: int
    rho: float
    witness_data_point: tuple
    n_basis: int
    inner_max: float
    outer_max: float


def contraction_factor(y, R: int, domain: LipschitzDomain,
                       kernel: TransitionKernel, tol: float = DEFAULT_TOL,
                       method: str = "auto") -> ContractionResult:
    """Worst ratio of the sup over the closed R-ball to the sup over the
    closed 2*sqrt(d)*R-ball, for basis functions on C ball(3*sqrt(d)*R)
    vanishing on the boundary portion within 2*sqrt(d)*R. Strictly below 1
    for Lipschitz graphs; the measured value is the contraction rate."""
    yp = as_point(y)
    d = domain.dimension
    sys, basis = _vanishing_window_basis(
        y, domain, kernel, 9 * d * R * R, 4 * d * R * R, tol=tol, method=method)
    steps = kernel.steps_array()
    inner_set = _ball_points_sq(yp, R * R, domain)
    if len(inner_set) == 0:
        raise DegenerateGeometryError("inner ball contains no domain points")
    outer_set = _ball_points_sq(yp, 4 * d * R * R, domain)
    inner_closure = np.vstack([inner_set, boundary(inner_set, steps)])
    outer_closure = np.vstack([outer_set, boundary(outer_set, steps)])
    vi = basis.values[_rows_of(basis, inner_closure)]
    vo = basis.values[_rows_of(basis, outer_closure)]
    inner_max = vi.max(axis=0)
    outer_max = vo.max(axis=0)
    ok = outer_max > 0.0
    if not ok.any():
        raise DegenerateGeometryError("all basis columns vanish on the outer ball")
    rho = inner_max[ok] / outer_max[ok]
    z = int(rho.argmax())
    return ContractionResult(
        R=int(R), rho=float(rho[z]),
        witness_data_point=tuple(int(c) for c in basis.basis_points[ok][z]),
        n_basis=int(ok.sum()),
        inner_max=float(inner_max[ok][z]), outer_max=float(outer_max[ok][z]),
    )


@dataclass
class BoundaryHarnackResult:
    R: int
    K: int
    constant: float
    anchor: tuple
    witness_point: tuple
    n_basis: int


def boundary_harnack_constant(y, R: int, K: int, domain: LipschitzDomain,
                              kernel: TransitionKernel, tol: float = DEFAULT_TOL,
                              method: str = "auto") -> BoundaryHarnackResult:
    """Largest anchor-normalized ratio of two basis functions on the R-ball:
    max over pairs (u, v) and x of [u(x)/v(x)] / [u(a)/v(a)] with
    a = y + R*e1, for basis functions on C ball(3KR) vanishing on the
    boundary portion within 2KR."""
    yp = as_point(y)
    sys, basis = _vanishing_window_basis(
        y, domain, kernel, 9 * K * K * R * R, 4 * K * K * R * R,
        tol=tol, method=method)
    ia = _anchor_row(basis, sys, yp, R, domain)
    anchor_vals = basis.values[ia]
    keep = anchor_vals > 0.0
    if keep.sum() < 1:
        raise DegenerateGeometryError("no basis column is positive at the anchor")
    eval_pts = _ball_points_sq(yp, R * R, domain)
    rows = _rows_of(basis, eval_pts)
    Vhat = basis.values[rows][:, keep] / anchor_vals[keep][None, :]
    hi = Vhat.max(axis=1)
    lo = Vhat.min(axis=1)
    if lo.min() <= 0.0:
        raise DegenerateGeometryError("a normalized basis column vanishes on the R-ball")
    per_x = hi / lo
    x = int(per_x.argmax())
    a = (yp[0] + int(R),) + yp[1:]
    return BoundaryHarnackResult(
        R=int(R), K=int(K), constant=float(per_x[x]), anchor=a,
        witness_point=tuple(int(c) for c in eval_pts[x]), n_basis=int(keep.sum()),
    )


# ---------------------------------------------------------------------------
# Collar exit-ratio onset and decay measurements
# ---------------------------------------------------------------------------


@dataclass
class OnsetResult:
    y: tuple
    r: int
    onset: int
    table: list  # (K, min ratio of top to side exit probability)


def collar_exit_onset(y, r: int, domain: LipschitzDomain,
                      kernel: TransitionKernel, K_grid=(2, 4, 8, 16),
                      tol: float = DEFAULT_TOL, method: str = "auto") -> OnsetResult:
    """Smallest K in the grid for which the top/side exit-probability ratio
    from the inner r-ball is at least 1 everywhere; raises OnsetNotFoundError
    (carrying the full table) when no grid value succeeds."""
    yp = as_point(y)
    grid = sorted(int(K) for K in K_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("K grid must be strictly increasing")
    table = []
    onset = None
    for K in grid:
        split = exit_split(yp, K, r, domain, kernel, tol=tol, method=method)
        mr = split.min_ratio
        table.append((K, mr))
        if onset is None and mr >= 1.0:
            onset = K
    if onset is None:
        raise OnsetNotFoundError(
            f"no K in {grid} reached min ratio >= 1 at y={yp}, r={r}", table=table)
    return OnsetResult(y=yp, r=int(r), onset=onset, table=table)


def fit_power_envelope(x_values, y_values, lower: bool = True,
                       min_levels: int = 5) -> tuple[float, float, int]:
    """Least-squares power-law fit through the per-level envelope of
    (x, y) samples: groups samples by exact x level, takes the min (lower)
    or max (upper) per level, and fits log y = exponent * log x + log amp.

    Returns (exponent, amplitude, n_levels)."""
    x = np.asarray(x_values, dtype=np.float64)
    v = np.asarray(y_values, dtype=np.float64)
    levels = np.unique(x)
    if len(levels) < min_levels:
        raise InsufficientDataError(
            f"need >= {min_levels} distinct levels, got {len(levels)}")
    env = np.empty(len(levels))
    for i, lv in enumerate(levels):
        grp = v[x == lv]
        env[i] = grp.min() if lower else grp.max()
    if np.any(env <= 0.0):
        raise InsufficientDataError("envelope hits zero; cannot fit a power law")
    coef = np.polyfit(np.log(levels), np.log(env), 1)
    return float(coef[0]), float(math.exp(coef[1])), len(levels)


@dataclass
class DecayProfileResult:
    y: tuple
    r: int
    K: int
    beta: float
    amplitude: float
    n_levels: int


def boundary_decay_profile(y, r: int, domain: LipschitzDomain,
                           kernel: TransitionKernel, K: int = 8,
                           tol: float = DEFAULT_TOL,
                           method: str = "auto") -> DecayProfileResult:
    """Fitted exponent of the lower envelope of the top-exit probability
    against distance-to-boundary over the inner r-ball: the measured power
    in u(x) >= c * (delta(x)/r)^beta."""
    yp = as_point(y)
    split = exit_split(yp, K, r, domain, kernel, tol=tol, method=method)
    pts = split.eval_points
    d2 = boundary_distances_sq(pts, domain, kernel.steps_array())
    x = np.sqrt(d2.astype(np.float64)) / float(r)
    beta, amp, n = fit_power_envelope(x, split.p_top.values, lower=True)
    return DecayProfileResult(y=yp, r=int(r), K=int(K), beta=beta,
                              amplitude=amp, n_levels=n)


@dataclass
class LateralDecayResult:
    y: tuple
    r: int
    table: list  # (K, max lateral-exit probability over the r-collar closure)
    slope: float | None
    empty_geometry: bool


def lateral_decay(y, r: int, domain: LipschitzDomain, kernel: TransitionKernel,
                  K_grid=(2, 4, 8, 16), tol: float = DEFAULT_TOL,
                  method: str = "auto") -> LateralDecayResult:
    """Maximum lateral-exit probability near the anchor, per collar extent K,
    with the fitted slope of log(max) against K. The lateral set is empty in
    one dimension; that case is reported, not raised."""
    yp = as_point(y)
    steps = kernel.steps_array()
    table = []
    empty = False
    for K in sorted(int(K) for K in K_grid):
        n_side, vmax = _side_measure_max(yp, K, r, domain, kernel, tol, method)
        if n_side == 0:
            empty = True
            table.append((K, 0.0))
        else:
            table.append((K, vmax))
    slope = None
    if not empty and len(table) >= 2 and all(v > 0 for _, v in table):
        Ks = np.array([k for k, _ in table], dtype=np.float64)
        vs = np.log(np.array([v for _, v in table]))
        slope = float(np.polyfit(Ks, vs, 1)[0])
    return LateralDecayResult(y=yp, r=int(r), table=table, slope=slope,
                              empty_geometry=empty)


def _side_measure_max(yp, K, r, domain, kernel, tol, method) -> tuple[int, float]:
    """Lateral-exit probability of the (K, r) collar, maximized over the
    closure of the width-r collar at the anchor."""
    from .geometry import collar, enumerate_region
    from .solver import classify_collar_boundary

    steps = kernel.steps_array()
    Kr = Fraction(K) * Fraction(r)
    cpts = enumerate_region(collar(yp, Kr, r), domain, steps)
    if len(cpts) == 0:
        raise DegenerateGeometryError("collar region is empty")
    sys = LatticeSystem(cpts, kernel)
    bpts = sys.boundary_points
    top, side, bottom = classify_collar_boundary(bpts, yp, Kr, r, domain, steps)
    if not side.any():
        return 0, 0.0
    g = side.astype(np.float64)
    u = sys.solve_boundary_data(g, method=method, tol=tol)
    inner = _ball_points_sq(yp, r * r, domain)
    closure = np.vstack([inner, boundary(inner, steps)])
    stacked = np.vstack([sys.points, sys.boundary_points])
    vals = np.concatenate([u, g])
    idx = PointIndex(stacked).lookup(closure)
    ok = idx >= 0
    vmax = float(vals[idx[ok]].max()) if ok.any() else 0.0
    return int(side.sum()), vmax


@dataclass
class GrowthResult:
    y: tuple
    R: int
    gamma: float
    amplitude: float
    n_levels: int


def interior_growth_exponent(y, R: int, domain: LipschitzDomain,
                             kernel: TransitionKernel, tol: float = DEFAULT_TOL,
                             method: str = "auto") -> GrowthResult:
    """Fitted exponent of the upper envelope of anchor-normalized basis
    values against R/delta(x) over C ball(2R): the measured power in
    u(x) <= C * (R/delta(x))^gamma * u(y + R*e1)."""
    yp = as_point(y)
    sys, basis = _vanishing_window_basis(
        y, domain, kernel, 9 * R * R, 4 * R * R, tol=tol, method=method)
    ia = _anchor_row(basis, sys, yp, R, domain)
    anchor_vals = basis.values[ia]
    keep = anchor_vals > 0.0
    eval_pts = _ball_points_sq(yp, 4 * R * R, domain)
    rows = _rows_of(basis, eval_pts)
    Vhat = basis.values[rows][:, keep] / anchor_vals[keep][None, :]
    best = Vhat.max(axis=1)
    d2 = boundary_distances_sq(eval_pts, domain, kernel.steps_array())
    x = float(R) / np.sqrt(d2.astype(np.float64))
    gamma, amp, n = fit_power_envelope(x, best, lower=False)
    return GrowthResult(y=yp, R=int(R), gamma=gamma, amplitude=amp, n_levels=n)


def uniformity_band(values) -> float:
    """Max/min ratio of a family of measured constants (scale-uniformity)."""
    vals = [float(v) for v in values]
    lo = min(vals)
    if lo <= 0:
        raise ValueError("uniformity band needs positive constants")
    return max(vals) / lo
