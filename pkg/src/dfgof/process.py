"""Partial-sum residual processes, test statistics and limit references.

The residual process at x is the sum of residual contributions whose scan
point is componentwise <= x, scaled by 1/sqrt(n).  In one dimension the
scan points are the rank times i/n and the process is evaluated exactly at
t = 0 and every jump; in higher dimensions the supremum over the cube is
approximated by evaluating at every scan point plus a regular lattice
(its resolution is a config knob and is reported in outputs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import ReferenceBasis

DEFAULT_GRID = {2: 64, 3: 16}
GRID_GUARD = 1_000_000


@dataclass(frozen=True, eq=False)
class StepProcess:
    """Scan-ordered partial-sum process with its evaluations."""

    scan_points: np.ndarray  # (n, p)
    contributions: np.ndarray  # residual / sqrt(n), length n
    eval_points: np.ndarray  # (m, p)
    eval_values: np.ndarray  # (m,)

    @property
    def p(self) -> int:
        return self.scan_points.shape[1]

    def value_at(self, x) -> float:
        """Process value at an arbitrary point (componentwise <=)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        mask = np.all(self.scan_points <= x, axis=1)
        return float(self.contributions[mask].sum())


@dataclass(frozen=True, eq=False)
class StatisticResult:
    name: str
    value: float
    argmax: np.ndarray | None


def _lattice(p: int, m: int) -> np.ndarray:
    axis = np.linspace(0.0, 1.0, m)
    mesh = np.meshgrid(*([axis] * p), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def _lattice_values(scan: np.ndarray, contrib: np.ndarray, m: int) -> np.ndarray:
    """Exact process values on the regular lattice via p-dimensional
    cumulative sums: each contribution is binned at the smallest lattice
    node componentwise >= its scan point."""
    p = scan.shape[1]
    axis = np.linspace(0.0, 1.0, m)
    idx = np.stack([np.searchsorted(axis, scan[:, j], side="left") for j in range(p)], axis=1)
    flat = np.ravel_multi_index(tuple(idx.T), (m,) * p)
    box = np.bincount(flat, weights=contrib, minlength=m**p).reshape((m,) * p)
    for ax in range(p):
        box = np.cumsum(box, axis=ax)
    return box.ravel()


def build_process(residuals: np.ndarray, scan_points: np.ndarray, grid: int | None = None) -> StepProcess:
    """Build the partial-sum process of ``residuals`` scanned by ``scan_points``.

    scan_points must lie in [0,1]^p (rank times for p = 1, transported or
    rescaled covariates for p >= 2).  ``grid`` is the per-axis lattice
    resolution for p >= 2 (default 64 for p = 2).
    """
    residuals = np.asarray(residuals, dtype=float)
    scan = np.asarray(scan_points, dtype=float)
    if scan.ndim == 1:
        scan = scan[:, None]
    if residuals.ndim != 1 or residuals.shape[0] != scan.shape[0]:
        raise ValueError(
            f"residuals (shape {residuals.shape}) and scan points (shape {scan.shape}) do not match"
        )
    if scan.size and (scan.min() < 0.0 or scan.max() > 1.0):
        raise ValueError("scan points must lie in [0, 1]^p")
    n, p = scan.shape
    contrib = residuals / math.sqrt(n)

    if p == 1:
        order = np.argsort(scan[:, 0], kind="stable")
        sorted_pts = scan[order, 0]
        csum = np.cumsum(contrib[order])
        uniq = np.unique(sorted_pts)
        last = np.searchsorted(sorted_pts, uniq, side="right") - 1
        values = csum[last]
        if uniq.size == 0 or uniq[0] > 0.0:
            uniq = np.concatenate([[0.0], uniq])
            values = np.concatenate([[0.0], values])
        return StepProcess(
            scan_points=scan, contributions=contrib, eval_points=uniq[:, None], eval_values=values
        )

    m = grid if grid is not None else DEFAULT_GRID.get(p, 8)
    if m < 2:
        raise ValueError(f"grid resolution must be >= 2, got {m}")
    if m**p > GRID_GUARD:
        raise ValueError(f"lattice of {m}^{p} points exceeds the {GRID_GUARD} guard")
    lattice = _lattice(p, m)
    lattice_vals = _lattice_values(scan, contrib, m)
    scan_mask = np.all(scan[None, :, :] <= scan[:, None, :], axis=2)
    scan_vals = scan_mask @ contrib
    return StepProcess(
        scan_points=scan,
        contributions=contrib,
        eval_points=np.vstack([scan, lattice]),
        eval_values=np.concatenate([scan_vals, lattice_vals]),
    )


def ks_statistics(proc: StepProcess) -> list[StatisticResult]:
    """Kolmogorov-Smirnov style statistics of the evaluated process.

    ks_abs = max |value|, ks_plus = max value, cvm = mean of squared values
    over the evaluation points (a discrete quadratic surrogate, reported as
    engineering plumbing).  The evaluation point attaining each maximum is
    recorded.
    """
    values = proc.eval_values
    if values.size == 0:
        raise ValueError("process has an empty evaluation set")
    i_abs = int(np.argmax(np.abs(values)))
    i_plus = int(np.argmax(values))
    return [
        StatisticResult("ks_abs", float(abs(values[i_abs])), proc.eval_points[i_abs].copy()),
        StatisticResult("ks_plus", float(values[i_plus]), proc.eval_points[i_plus].copy()),
        StatisticResult("cvm", float(np.mean(values**2)), None),
    ]


def kolmogorov_cdf(x: float) -> float:
    """CDF of the supremum of the absolute Brownian bridge.

    K(x) = 1 - 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2); the series is
    truncated once terms drop below 1e-12.  For x < 0.04 the value is below
    the double-precision underflow threshold and 0 is returned directly.
    """
    x = float(x)
    if x < 0.0:
        raise ValueError(f"x must be >= 0, got {x}")
    if x < 0.04:
        return 0.0
    s = 0.0
    sign = 1.0
    for k in range(1, 100_000):
        term = math.exp(-2.0 * k * k * x * x)
        if term < 1e-12:
            break
        s += sign * term
        sign = -sign
    value = 1.0 - 2.0 * s
    if value < 1e-11:  # below 2x the truncation bound: noise, not signal
        return 0.0
    return min(value, 1.0)


def limit_covariance(x, y, basis: ReferenceBasis) -> float:
    """Covariance of the limiting transformed process between points x and y.

    Equals the uniform-volume of the box below min(x, y) (componentwise)
    minus sum_k Q_k(x) Q_k(y) over the reference basis.  For the constant-
    only basis in one dimension this is the Brownian bridge covariance
    min(s, t) - s t.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != (basis.p,) or y.shape != (basis.p,):
        raise ValueError(f"points must have dimension {basis.p}")
    for pt in (x, y):
        if pt.min() < 0.0 or pt.max() > 1.0:
            raise ValueError("points must lie in [0, 1]^p")
    value = float(np.minimum(x, y).prod())
    for k in range(basis.d):
        value -= float(basis.cumulative_one(k, x[None, :])[0] * basis.cumulative_one(k, y[None, :])[0])
    return value
