"""Feasibility oracles, KL divergence, direction grids, and separation margins.

Geometry conventions:
  * d=2 is handled on the line: means and the target are scalars in [0, 1]
    and the only directions are +1 and -1.
  * d>=3 works with simplex vectors in R^d, Euclidean norms, and a finite
    grid of unit directions standing in for the (non-convex) continuous
    search over the sphere.
  * The feasible region around the target is an open ball: instances whose
    hull sits exactly at distance epsilon are classified infeasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional, Sequence, Union

import numpy as np

from .core import FEASIBLE, INFEASIBLE, ActionStats, Instance, ProblemSpec

_NORM_TOL = 1e-12
_FEAS_TOL = 1e-9


def kl_bernoulli(p: float, q: float) -> float:
    """KL divergence between Bernoulli(p) and Bernoulli(q), natural log.

    0*log(0/.) terms are 0; a q of exactly 0 or 1 with p != q yields +inf
    (a distinguished value, not an error) so that boundary means propagate
    gracefully through reciprocal-divergence bounds.
    """
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if not 0 <= q <= 1:
        raise ValueError(f"q must be in [0, 1], got {q}")
    if p == q:
        return 0.0
    if q in (0.0, 1.0):
        return math.inf
    total = 0.0
    if p > 0:
        total += p * math.log(p / q)
    if p < 1:
        total += (1 - p) * math.log((1 - p) / (1 - q))
    return total


@dataclass(frozen=True)
class DirectionGrid:
    """Finite set of unit directions searched by stopping and selection rules.

    For d=2 the grid is exactly the two scalar directions (+1, -1); for
    d>=3 it is an (m, d) array of unit vectors.
    """

    dims: int
    directions: np.ndarray

    def __post_init__(self):
        dirs = np.asarray(self.directions, dtype=float)
        object.__setattr__(self, "directions", dirs)
        if self.dims == 2:
            if dirs.shape != (2,) or dirs[0] != 1.0 or dirs[1] != -1.0:
                raise ValueError("d=2 grid must be exactly (+1, -1)")
        else:
            if dirs.ndim != 2 or dirs.shape[1] != self.dims:
                raise ValueError(f"directions must be (m, {self.dims}) for d={self.dims}")
            norms = np.linalg.norm(dirs, axis=1)
            if np.any(np.abs(norms - 1.0) > _NORM_TOL):
                raise ValueError("all directions must have unit norm")

    @property
    def size(self) -> int:
        return len(self.directions)


LINE_GRID = DirectionGrid(dims=2, directions=np.array([1.0, -1.0]))


def _halton_column(count: int, base: int, skip: int = 20) -> np.ndarray:
    """Van der Corput sequence in the given base (indices skip+1 .. skip+count)."""
    out = np.empty(count)
    for j in range(count):
        i = skip + 1 + j
        f, r = 1.0, 0.0
        while i > 0:
            f /= base
            r += f * (i % base)
            i //= base
        out[j] = r
    return out


_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]


def sphere_grid(d: int, count: int) -> DirectionGrid:
    """Deterministic, approximately uniform unit directions.

    d=2 always yields the exact two-direction grid. d=3 uses the golden-angle
    (Fibonacci) spiral; d>3 maps a Halton sequence through the Gaussian
    inverse CDF and normalizes.
    """
    if d == 2:
        return LINE_GRID
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if count < d + 1:
        raise ValueError(f"need at least d+1={d + 1} directions, got {count}")
    if d == 3:
        i = np.arange(count)
        z = 1.0 - 2.0 * (i + 0.5) / count
        golden = (1.0 + math.sqrt(5.0)) / 2.0
        phi = 2.0 * math.pi * i / golden
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        dirs = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    else:
        if d > len(_PRIMES):
            raise ValueError(f"sphere grids support d <= {len(_PRIMES)}")
        inv = NormalDist().inv_cdf
        cols = np.column_stack([_halton_column(count, _PRIMES[j]) for j in range(d)])
        gauss = np.vectorize(inv)(cols)
        dirs = gauss / np.linalg.norm(gauss, axis=1, keepdims=True)
    # renormalize to kill accumulated rounding
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    return DirectionGrid(dims=d, directions=dirs)


# --- hull distance -------------------------------------------------------


def hull_distance(points: np.ndarray, x: np.ndarray) -> tuple:
    """Euclidean distance from x to the convex hull of the rows of points.

    Returns (distance, weights) where weights is the simplex combination
    attaining the closest hull point. Uses the min-norm-point active-set
    method on the shifted points: finitely many major cycles, each solving
    the unconstrained affine minimizer over the current support and stepping
    back toward the simplex when a coordinate would go negative.
    """
    P = np.asarray(points, dtype=float) - np.asarray(x, dtype=float)
    k = P.shape[0]
    if k == 0:
        raise ValueError("hull of zero points is empty")
    norms2 = np.einsum("ij,ij->i", P, P)
    support = [int(np.argmin(norms2))]
    alpha = np.array([1.0])
    y = P[support[0]].copy()
    scale = max(1.0, float(norms2.max()))
    for _ in range(16 * (k + 2)):
        # most opposed vertex; stop when no vertex improves on y
        dots = P @ y
        t = int(np.argmin(dots))
        if y @ y - dots[t] <= 1e-14 * scale:
            break
        if t in support:
            break
        support.append(t)
        alpha = np.append(alpha, 0.0)
        while True:
            A = P[support]
            m = len(support)
            # affine minimizer of ||A^T beta|| subject to sum(beta) = 1
            kkt = np.zeros((m + 1, m + 1))
            kkt[:m, :m] = A @ A.T
            kkt[:m, m] = 1.0
            kkt[m, :m] = 1.0
            rhs = np.zeros(m + 1)
            rhs[m] = 1.0
            beta = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:m]
            if beta.min() >= -1e-12:
                alpha = np.maximum(beta, 0.0)
                alpha /= alpha.sum()
                break
            # step from alpha toward beta until the first coordinate hits zero
            mask = beta < 1e-12
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(mask, alpha / (alpha - beta), np.inf)
            theta = min(1.0, float(ratios.min()))
            alpha = (1.0 - theta) * alpha + theta * beta
            keep = alpha > 1e-12
            if keep.all():
                alpha = np.maximum(alpha, 0.0)
                alpha /= alpha.sum()
                break
            support = [s for s, kp in zip(support, keep) if kp]
            alpha = alpha[keep]
            alpha /= alpha.sum()
        y = P[support].T @ alpha
    weights = np.zeros(k)
    for s, a in zip(support, alpha):
        weights[s] += a
    return float(np.linalg.norm(y)), weights


@dataclass(frozen=True)
class FeasibilityCertificate:
    """Verdict plus evidence: convex weights and the expressed point when
    feasible, a separating unit direction when infeasible."""

    verdict: str
    weights: Optional[np.ndarray] = None
    witness_point: Union[float, np.ndarray, None] = None
    separator: Union[float, np.ndarray, None] = None

    @property
    def feasible(self) -> bool:
        return self.verdict == FEASIBLE


def _oracle_line(means: Sequence[float], spec: ProblemSpec) -> FeasibilityCertificate:
    k = len(means)
    imin = min(range(k), key=lambda i: (means[i], i))
    imax = max(range(k), key=lambda i: (means[i], -i))
    lo, hi = means[imin], means[imax]
    x = spec.x
    witness = min(max(x, lo), hi)
    dist = abs(witness - x)
    if dist < spec.epsilon:
        weights = np.zeros(k)
        if hi > lo:
            t = (witness - lo) / (hi - lo)
            weights[imin] = 1.0 - t
            weights[imax] += t
        else:
            weights[imin] = 1.0
        return FeasibilityCertificate(FEASIBLE, weights=weights, witness_point=float(witness))
    separator = 1.0 if hi <= x else -1.0
    return FeasibilityCertificate(INFEASIBLE, separator=separator)


def oracle_feasibility(means, spec: ProblemSpec) -> FeasibilityCertificate:
    """Ground-truth feasibility of known means: is some point of the open
    epsilon-ball around the target inside their convex hull?

    d=2 reduces to an interval distance check; d>=3 solves the hull-distance
    program. Distance exactly epsilon classifies as infeasible (the ball
    is open).
    """
    if len(means) == 0:
        raise ValueError("means must be nonempty")
    if spec.d == 2:
        return _oracle_line(means, spec)
    M = np.asarray(means, dtype=float)
    dist, weights = hull_distance(M, spec.x_vector)
    if dist < spec.epsilon:
        return FeasibilityCertificate(
            FEASIBLE, weights=weights, witness_point=weights @ M
        )
    direction = spec.x_vector - weights @ M
    nrm = np.linalg.norm(direction)
    separator = direction / nrm if nrm > 0 else direction
    return FeasibilityCertificate(INFEASIBLE, separator=separator)


def label_instance(means, spec: ProblemSpec) -> Instance:
    """Build an Instance whose label comes from the oracle, never by hand."""
    if spec.d == 2:
        means = tuple(float(m) for m in means)
    else:
        means = tuple(tuple(float(v) for v in m) for m in means)
    cert = oracle_feasibility(means, spec)
    return Instance(means=means, label=cert.verdict)


# --- separation margins and the direction of greatest uncertainty --------
#
# Everything below works from per-action deviations and margins:
#   d=2:  lo_i = (mean_i - x) - B_i,  hi_i = (mean_i - x) + B_i
#   d>=3: M[i, g] = (mean_i - x) . u_g  projected on each grid direction.
# The engine in `policies` maintains these incrementally and calls the same
# kernels, so pure-function results and in-run results coincide exactly.


def margins_1d(lo: Sequence[float], hi: Sequence[float]) -> tuple:
    """(inner, outer) over directions {+1, -1} from per-action lo/hi bounds."""
    up_in = max(lo)
    down_in = -min(hi)
    up_out = max(hi)
    down_out = -min(lo)
    inner = up_in if up_in < down_in else down_in
    outer = up_out if up_out < down_out else down_out
    return inner, outer


def direction_1d(lo: Sequence[float], hi: Sequence[float]) -> tuple:
    """Scalar direction of greatest uncertainty and its min-max value.

    Ties break toward +1 (the first grid entry).
    """
    up = max(lo)
    down = -min(hi)
    return (1.0, up) if up <= down else (-1.0, down)


def margins_grid(proj: np.ndarray, margins: np.ndarray) -> tuple:
    """(inner, outer) over a direction grid from the (k, m) projection matrix."""
    inner = float((proj - margins[:, None]).max(axis=0).min())
    outer = float((proj + margins[:, None]).max(axis=0).min())
    return inner, outer


def direction_grid_argmin(proj: np.ndarray, margins: np.ndarray) -> tuple:
    """Grid index of the direction of greatest uncertainty and its value."""
    col = (proj - margins[:, None]).max(axis=0)
    g = int(col.argmin())
    return g, float(col[g])


def stats_bounds_1d(stats: Sequence[ActionStats], x: float) -> tuple:
    """Per-action (lo, hi) deviation bounds for d=2 stats."""
    lo = [s.scalar_mean - x - s.margin for s in stats]
    hi = [s.scalar_mean - x + s.margin for s in stats]
    return lo, hi


def stats_projections(stats: Sequence[ActionStats], x: np.ndarray, grid: DirectionGrid) -> tuple:
    """(proj, margins) arrays for d>=3 stats over the grid."""
    means = np.array([s.mean_hat for s in stats], dtype=float)
    proj = (means - x) @ grid.directions.T
    margins = np.array([s.margin for s in stats], dtype=float)
    return proj, margins


def uncertainty_direction(stats: Sequence[ActionStats], spec: ProblemSpec, grid: DirectionGrid) -> dict:
    """Direction along which the least-confirmed separation from the target
    is weakest: argmin over the grid of max_i (deviation - margin).

    Returns {"direction": +-1.0 or unit vector, "value": attained min-max}.
    """
    _require_sampled(stats)
    if spec.d == 2:
        u, value = direction_1d(*stats_bounds_1d(stats, spec.x))
        return {"direction": u, "value": value}
    proj, margins = stats_projections(stats, spec.x_vector, grid)
    g, value = direction_grid_argmin(proj, margins)
    return {"direction": grid.directions[g], "value": value}


def separability_margins(stats: Sequence[ActionStats], spec: ProblemSpec, grid: DirectionGrid) -> dict:
    """Inner and outer separation margins over the grid.

    inner: min over directions of the best lower-confidence separation
    (drives the feasible stopping rule); outer: same with upper bounds
    (drives the infeasible rule). inner <= outer always.
    """
    _require_sampled(stats)
    if spec.d == 2:
        inner, outer = margins_1d(*stats_bounds_1d(stats, spec.x))
    else:
        inner, outer = margins_grid(*stats_projections(stats, spec.x_vector, grid))
    return {"inner": inner, "outer": outer}


def _require_sampled(stats: Sequence[ActionStats]):
    if any(s.n < 1 for s in stats):
        raise ValueError("all actions need at least one sample")
