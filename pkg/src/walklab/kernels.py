"""Step sets and transition kernels: normalization, centering, and uniform
ellipticity, plus the one-step difference operator.

Kernels are immutable. Weight evaluation is vectorized over points; exact
rational weights are kept alongside floats where the kernel family allows it
so validation can be performed without tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import InvalidKernelError, InvalidStepSetError, MissingFieldValueError
from .geometry import Point, as_point, as_point_array, lex_sort

_TOL = 1e-12


@dataclass(frozen=True)
class StepSet:
    """Finite set of step vectors, deterministically (lexicographically)
    ordered. Must contain every positive unit vector; the zero step (lazy
    walk) is allowed."""

    steps: tuple[Point, ...]
    dimension: int

    @staticmethod
    def of(steps) -> "StepSet":
        arr = as_point_array(steps)
        if len(arr) == 0:
            raise InvalidStepSetError("empty step set")
        arr = lex_sort(arr)
        if len(np.unique(arr, axis=0)) != len(arr):
            raise InvalidStepSetError("duplicate steps")
        d = arr.shape[1]
        for k in range(d):
            unit = tuple(1 if i == k else 0 for i in range(d))
            if not any(tuple(s) == unit for s in arr):
                raise InvalidStepSetError(f"missing positive unit vector e_{k + 1}")
        return StepSet(steps=tuple(tuple(int(c) for c in s) for s in arr), dimension=d)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.steps, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def max_norm(self) -> int:
        return int(np.abs(self.as_array()).max())


def max_feasible_ellipticity(steps: StepSet) -> float:
    """Largest alpha for which some weighting satisfies sum(pi) = 1,
    sum(pi * e) = 0, pi >= alpha. Nonpositive means the step set admits no
    centered uniformly-elliptic kernel."""
    from scipy.optimize import linprog

    E = steps.as_array().astype(np.float64)
    m, d = E.shape
    # variables: pi_1..pi_m, t; maximize t
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_eq = np.zeros((d + 1, m + 1))
    A_eq[:d, :m] = E.T
    A_eq[d, :m] = 1.0
    b_eq = np.zeros(d + 1)
    b_eq[d] = 1.0
    # pi_i - t >= 0
    A_ub = np.zeros((m, m + 1))
    A_ub[:, :m] = -np.eye(m)
    A_ub[:, -1] = 1.0
    b_ub = np.zeros(m)
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, 1)] * m + [(None, None)], method="highs")
    if not res.success:
        return 0.0
    return float(-res.fun)


@dataclass(frozen=True)
class TransitionKernel:
    """Site-dependent step distribution pi(x, e) over a fixed step set.

    ``weight_fn(pts) -> (n, m) float64`` evaluates the full weight matrix for
    a batch of points; ``exact_fn(point) -> tuple[Fraction, ...] | None``
    exposes exact weights when the family has them (homogeneous / periodic
    with rational entries).
    """

    step_set: StepSet
    kind: str
    alpha: float
    weight_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    exact_fn: Callable[[Point], tuple | None] = field(repr=False, default=lambda p: None)
    params: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.step_set.dimension

    def steps_array(self) -> np.ndarray:
        return self.step_set.as_array()

    def weights_at(self, point) -> np.ndarray:
        return self.weight_fn(as_point_array([as_point(point)]))[0]

    def weight_array(self, pts: np.ndarray) -> np.ndarray:
        return self.weight_fn(as_point_array(pts))

    def exact_weights_at(self, point) -> tuple | None:
        return self.exact_fn(as_point(point))


def _to_fracs(weights) -> tuple[Fraction, ...]:
    out = []
    for w in weights:
        if isinstance(w, str):
            out.append(Fraction(w))
        elif isinstance(w, Fraction):
            out.append(w)
        elif isinstance(w, (int, np.integer)):
            out.append(Fraction(int(w)))
        else:
            out.append(Fraction(float(w)))
    return tuple(out)


def homogeneous_kernel(steps, weights) -> TransitionKernel:
    """Site-independent kernel; weights may be rationals for exactness."""
    ss = StepSet.of(steps)
    fr = _to_fracs(weights)
    if len(fr) != len(ss):
        raise InvalidKernelError("one weight per step required")
    # incoming weight order refers to the given step order; re-sort with steps
    arr = as_point_array(steps)
    order = np.lexsort(arr.T[::-1])
    fr = tuple(fr[i] for i in order)
    wrow = np.array([float(w) for w in fr], dtype=np.float64)
    alpha = float(min(fr))

    def weight_fn(pts):
        return np.tile(wrow, (len(pts), 1))

    def exact_fn(point):
        return fr

    return TransitionKernel(step_set=ss, kind="homogeneous", alpha=alpha,
                            weight_fn=weight_fn, exact_fn=exact_fn,
                            params={"weights": [str(w) for w in fr]})


def srw_kernel(dimension: int) -> TransitionKernel:
    """Simple random walk: uniform 1/(2d) on the symmetric unit steps."""
    eye = np.eye(dimension, dtype=np.int64)
    steps = np.vstack([eye, -eye])
    w = [Fraction(1, 2 * dimension)] * (2 * dimension)
    k = homogeneous_kernel(steps, w)
    return TransitionKernel(step_set=k.step_set, kind="srw", alpha=k.alpha,
                            weight_fn=k.weight_fn, exact_fn=k.exact_fn,
                            params={"dimension": dimension})


def lazy_srw_kernel(dimension: int, hold=Fraction(1, 2)) -> TransitionKernel:
    """Lazy walk: stays put with probability ``hold``, else a uniform unit step."""
    hold = Fraction(hold)
    eye = np.eye(dimension, dtype=np.int64)
    steps = np.vstack([np.zeros((1, dimension), dtype=np.int64), eye, -eye])
    move = (1 - hold) / (2 * dimension)
    w = [hold] + [move] * (2 * dimension)
    k = homogeneous_kernel(steps, w)
    return TransitionKernel(step_set=k.step_set, kind="lazy", alpha=k.alpha,
                            weight_fn=k.weight_fn, exact_fn=k.exact_fn,
                            params={"dimension": dimension, "hold": str(hold)})


def periodic_kernel(steps, period, tables) -> TransitionKernel:
    """Weights depend on x through its residue modulo a period vector.

    ``tables`` maps each residue (row-major over the period box) to a weight
    row in the given step order.
    """
    ss = StepSet.of(steps)
    d = ss.dimension
    period = tuple(int(p) for p in period)
    if len(period) != d or any(p < 1 for p in period):
        raise InvalidKernelError("period must be d positive integers")
    ncells = int(np.prod(period))
    if len(tables) != ncells:
        raise InvalidKernelError(f"need {ncells} weight rows, got {len(tables)}")
    arr = as_point_array(steps)
    order = np.lexsort(arr.T[::-1])
    rows = []
    for row in tables:
        fr = _to_fracs(row)
        if len(fr) != len(ss):
            raise InvalidKernelError("one weight per step required in each row")
        rows.append(tuple(fr[i] for i in order))
    wmat = np.array([[float(w) for w in row] for row in rows], dtype=np.float64)
    alpha = float(min(min(row) for row in rows))
    pvec = np.asarray(period, dtype=np.int64)
    strides = np.ones(d, dtype=np.int64)
    for k in range(d - 2, -1, -1):
        strides[k] = strides[k + 1] * pvec[k + 1]

    def weight_fn(pts):
        res = np.mod(pts, pvec)
        cell = res @ strides
        return wmat[cell]

    def exact_fn(point):
        res = tuple(int(c) % p for c, p in zip(point, period))
        cell = int(np.asarray(res, dtype=np.int64) @ strides)
        return rows[cell]

    return TransitionKernel(step_set=ss, kind="periodic", alpha=alpha,
                            weight_fn=weight_fn, exact_fn=exact_fn,
                            params={"period": period})


def parity_kernel_2d() -> TransitionKernel:
    """The standard inhomogeneous test kernel in Z^2: axis weights
    (0.3, 0.3, 0.2, 0.2) on even sites and (0.2, 0.2, 0.3, 0.3) on odd
    sites of the (x1 + x2) checkerboard; centered at every site, alpha = 1/5."""
    steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    even = ["3/10", "3/10", "1/5", "1/5"]
    odd = ["1/5", "1/5", "3/10", "3/10"]
    # period (2, 2); residues row-major: (0,0),(0,1),(1,0),(1,1)
    k = periodic_kernel(steps, (2, 2), [even, odd, odd, even])
    return TransitionKernel(step_set=k.step_set, kind="parity", alpha=k.alpha,
                            weight_fn=k.weight_fn, exact_fn=k.exact_fn,
                            params={})


def cosine_kernel(dimension: int, base, amp, freq) -> TransitionKernel:
    """Smoothly inhomogeneous kernel on symmetric unit steps: the axis-k
    probability budget is b_k * (1 + a_k * cos(2*pi*f_k . x)), split evenly
    between +e_k and -e_k (so the walk is centered at every site), then
    normalized. Requires |a_k| < 1."""
    base = np.asarray([float(b) for b in base], dtype=np.float64)
    amp = np.asarray([float(a) for a in amp], dtype=np.float64)
    freq = np.asarray(freq, dtype=np.float64)
    if base.shape != (dimension,) or amp.shape != (dimension,):
        raise InvalidKernelError("base and amp must have one entry per axis")
    if freq.shape != (dimension, dimension):
        raise InvalidKernelError("freq must be a d x d matrix of frequencies")
    if np.any(base <= 0) or np.any(np.abs(amp) >= 1):
        raise InvalidKernelError("need base > 0 and |amp| < 1")
    eye = np.eye(dimension, dtype=np.int64)
    steps = np.vstack([eye, -eye])
    ss = StepSet.of(steps)
    sarr = ss.as_array()
    # map sorted step order -> axis index
    axis = np.abs(sarr).argmax(axis=1)
    lo = base * (1 - np.abs(amp))
    hi = base * (1 + np.abs(amp))
    alpha = float(lo.min() / (2.0 * hi.sum()))

    def budgets(pts):
        phase = 2.0 * np.pi * (pts.astype(np.float64) @ freq.T)
        q = base[None, :] * (1.0 + amp[None, :] * np.cos(phase))
        return q / q.sum(axis=1, keepdims=True)

    def weight_fn(pts):
        q = budgets(as_point_array(pts))
        return q[:, axis] / 2.0

    return TransitionKernel(step_set=ss, kind="cosine", alpha=alpha,
                            weight_fn=weight_fn,
                            params={"base": base.tolist(), "amp": amp.tolist(),
                                    "freq": freq.tolist()})


# ---------------------------------------------------------------------------
# Validation and the difference operator
# ---------------------------------------------------------------------------


@dataclass
class KernelReport:
    """Worst observed deviations of the three kernel conditions on a window."""

    n_points: int
    worst_normalization: float
    worst_centering: float
    min_weight: float
    alpha: float
    exact: bool


def validate_kernel(kernel: TransitionKernel, window_pts) -> KernelReport:
    """Check normalization, centering, and the ellipticity floor at every
    point of the window. Raises InvalidKernelError with a witness on the
    first violated condition; returns the worst observed deviations
    otherwise. Rational kernels are checked exactly."""
    pts = as_point_array(window_pts)
    steps = kernel.steps_array()
    if kernel.alpha <= 0:
        raise InvalidKernelError("ellipticity floor must be positive",
                                 condition="ellipticity", magnitude=kernel.alpha)
    if max_feasible_ellipticity(kernel.step_set) <= 1e-14:
        raise InvalidStepSetError(
            "step set admits no centered uniformly elliptic weighting")

    exact = len(pts) > 0 and kernel.exact_weights_at(tuple(pts[0])) is not None
    if exact:
        seen: set = set()
        for p in map(tuple, pts):
            w = kernel.exact_weights_at(p)
            if w in seen:
                continue
            s = sum(w, start=Fraction(0))
            if s != 1:
                raise InvalidKernelError(
                    f"weights at {p} sum to {s}, not 1",
                    point=p, condition="normalization", magnitude=float(abs(s - 1)))
            for k in range(kernel.dimension):
                drift_k = sum((wi * int(e[k]) for wi, e in zip(w, steps)),
                              start=Fraction(0))
                if drift_k != 0:
                    raise InvalidKernelError(
                        f"drift at {p} has component {drift_k} along axis {k + 1}",
                        point=p, condition="centering", magnitude=float(abs(drift_k)))
            wmin = min(w)
            if wmin <= 0 or float(wmin) < kernel.alpha - _TOL:
                raise InvalidKernelError(
                    f"weight {float(wmin):.3g} at {p} below floor {kernel.alpha}",
                    point=p, condition="ellipticity", magnitude=float(wmin))
            seen.add(w)
        W = kernel.weight_array(pts)
        return KernelReport(len(pts), 0.0, 0.0, float(W.min()), kernel.alpha, True)

    W = kernel.weight_array(pts)
    norm_dev = np.abs(W.sum(axis=1) - 1.0)
    i = int(norm_dev.argmax())
    if norm_dev[i] > _TOL:
        raise InvalidKernelError(
            f"weights at {tuple(pts[i])} sum to {W[i].sum():.15f}",
            point=tuple(pts[i]), condition="normalization", magnitude=float(norm_dev[i]))
    drift_all = W @ steps.astype(np.float64)
    cent_dev = np.abs(drift_all).max(axis=1)
    j = int(cent_dev.argmax())
    if cent_dev[j] > _TOL:
        raise InvalidKernelError(
            f"drift at {tuple(pts[j])} is {drift_all[j].tolist()}",
            point=tuple(pts[j]), condition="centering", magnitude=float(cent_dev[j]))
    wmin = float(W.min())
    if wmin < kernel.alpha - _TOL:
        k = np.unravel_index(int(W.argmin()), W.shape)
        raise InvalidKernelError(
            f"weight {wmin:.3g} at {tuple(pts[k[0]])} below floor {kernel.alpha}",
            point=tuple(pts[k[0]]), condition="ellipticity", magnitude=wmin)
    return KernelReport(len(pts), float(norm_dev.max()), float(cent_dev.max()),
                        wmin, kernel.alpha, False)


def drift(kernel: TransitionKernel, point) -> np.ndarray:
    """One-step mean displacement at a site; zero for every admitted kernel."""
    w = kernel.weights_at(point)
    return w @ kernel.steps_array().astype(np.float64)


def apply_generator(kernel: TransitionKernel, u, point) -> float:
    """One-step difference operator: sum_e pi(x, e) u(x + e) - u(x).

    ``u`` is a Field (or any object with ``at(point)``); a missing value at
    any required point raises MissingFieldValueError naming it.
    """
    p = np.asarray(as_point(point), dtype=np.int64)
    w = kernel.weights_at(tuple(p))
    steps = kernel.steps_array()
    acc = 0.0
    for wi, e in zip(w, steps):
        acc += wi * u.at(tuple(p + e))
    return float(acc - u.at(tuple(p)))
