"""Optimal-assignment standardization of multidimensional covariates.

Covariate clouds in dimension p >= 2 have no canonical scan order.  We fix
n anchor points spread over [0,1]^p (a low-discrepancy Halton net by
default, or seeded i.i.d. uniforms) and match covariates to anchors by the
bijection minimizing the total Euclidean distance.  The matched anchor
points then play the role the rank transform plays in one dimension: the
empirical distribution of the transported covariates is exactly the anchor
distribution, whatever the covariates were.

Covariates are affinely rescaled per coordinate into [0,1]^p before
matching; the rescale is monotone in every coordinate, so box indicators
keep their meaning.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

BRUTE_FORCE_MAX = 8

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


@dataclass(frozen=True, eq=False)
class AnchorSet:
    """n pairwise-distinct points in [0,1]^p."""

    points: np.ndarray
    mode: str

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-D (n, p) array, got ndim={pts.ndim}")
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise ValueError("anchor coordinates must lie in [0, 1]")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValueError("anchor points must be pairwise distinct")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class Assignment:
    """Bijection i -> sigma(i) from covariate points to anchor points."""

    sigma: np.ndarray
    cost: float

    def __post_init__(self):
        s = np.asarray(self.sigma)
        if not np.array_equal(np.sort(s), np.arange(s.shape[0])):
            raise ValueError("sigma must be a permutation of 0..n-1")
        object.__setattr__(self, "sigma", s)


def _radical_inverse(i: int, base: int) -> float:
    f = 1.0
    x = 0.0
    while i:
        f /= base
        x += f * (i % base)
        i //= base
    return x


def _halton(n: int, p: int) -> np.ndarray:
    if p > len(_PRIMES):
        raise ValueError(f"halton anchors support p <= {len(_PRIMES)}, got {p}")
    pts = np.empty((n, p))
    for j in range(p):
        base = _PRIMES[j]
        pts[:, j] = [_radical_inverse(i, base) for i in range(1, n + 1)]
    return pts


def generate_anchors(n: int, p: int, mode: str = "halton", seed=None) -> AnchorSet:
    """Anchor net in [0,1]^p.

    "halton": first n points of the Halton sequence (bases 2, 3, 5, ... per
    coordinate, starting at index 1) -- deterministic, uniformly spread.
    "random": n i.i.d. uniform points from a seeded generator; ``seed`` is
    required so there is no silent nondeterminism.
    """
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    if mode == "halton":
        return AnchorSet(points=_halton(n, p), mode=mode)
    if mode == "random":
        if seed is None:
            raise ValueError("random anchors require an explicit seed")
        rng = np.random.default_rng(seed)
        return AnchorSet(points=rng.uniform(0.0, 1.0, size=(n, p)), mode=mode)
    raise ValueError(f"unknown anchor mode {mode!r}")


def _cost_matrix(x: np.ndarray, anchors: AnchorSet) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape != anchors.points.shape:
        raise ValueError(f"covariates have shape {x.shape}, anchors {anchors.points.shape}")
    cost = cdist(x, anchors.points)
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix contains non-finite entries")
    return cost


def _total_cost(cost: np.ndarray, sigma: np.ndarray) -> float:
    # correctly-rounded exact sum of the matched distances, independent of
    # addend order: cost-tied assignments report bit-identical totals
    return math.fsum(sorted(cost[np.arange(cost.shape[0]), sigma]))


def solve_assignment(x: np.ndarray, anchors: AnchorSet) -> Assignment:
    """Exact minimizer of the total Euclidean matching cost.

    Solved by a shortest-augmenting-path algorithm on the dense n x n cost
    matrix (scipy's linear_sum_assignment).  Deterministic for fixed input;
    among cost-ties the returned permutation is whatever the solver picks.
    """
    cost = _cost_matrix(x, anchors)
    _, sigma = linear_sum_assignment(cost)
    return Assignment(sigma=sigma, cost=_total_cost(cost, sigma))


def brute_force_assignment(x: np.ndarray, anchors: AnchorSet) -> Assignment:
    """Exhaustive minimum over all n! permutations (oracle, n <= 8).

    Ties are broken by the lexicographically smallest permutation.
    """
    cost = _cost_matrix(x, anchors)
    n = cost.shape[0]
    if n > BRUTE_FORCE_MAX:
        raise ValueError(f"brute force is limited to n <= {BRUTE_FORCE_MAX}, got n={n}")
    perms = np.array(list(itertools.permutations(range(n))), dtype=int)
    totals = cost[np.arange(n), perms].sum(axis=1)
    # re-rank the near-minimal candidates with the exact total; candidates
    # arrive in lexicographic order, so strict improvement breaks ties to
    # the lexicographically smallest permutation
    best_sigma = None
    best_cost = np.inf
    for idx in np.flatnonzero(totals <= totals.min() + 1e-9):
        c = _total_cost(cost, perms[idx])
        if c < best_cost:
            best_cost = c
            best_sigma = perms[idx]
    return Assignment(sigma=best_sigma, cost=best_cost)


def transported_points(assignment: Assignment, anchors: AnchorSet) -> np.ndarray:
    """Anchor point matched to each covariate point, in covariate order."""
    return anchors.points[assignment.sigma]


def transported_ecdf(assignment: Assignment, anchors: AnchorSet, x) -> float:
    """Empirical CDF of the transported covariates at x (componentwise <=).

    By bijectivity this equals the ECDF of the anchor set itself.
    """
    x = np.asarray(x, dtype=float)
    pts = transported_points(assignment, anchors)
    return float(np.all(pts <= x, axis=1).mean())


def rescale_unit_cube(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Affine per-coordinate rescale of a point cloud onto [0,1]^p.

    Returns (rescaled points, per-coordinate minima, per-coordinate maxima);
    the bounds are recorded in run outputs so the map can be inverted.
    Coordinates with zero range map to 0.5.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = hi - lo
    flat = span <= 0.0
    safe = np.where(flat, 1.0, span)
    out = (x - lo) / safe
    out[:, flat] = 0.5
    return out, lo, hi
