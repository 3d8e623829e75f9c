"""Root-site occupation accumulators and estimator plumbing.

The two running integrals over a run of length T are

* weighted occupation: integral of (sum of sizes of A clusters at the
  root) dt, and
* cluster occupation: integral of (number of A clusters at the root) dt.

Both are accumulated with compensated summation so that merge order
cannot perturb the result.  Snapshots are taken on a geometric time grid
T * 2**(k - K) for k = 0..K, plus t = 0, which resolves early-time decay
without drowning the tail in points.

Estimates are reported as (mean, stderr, n): normal approximation for
means, Wilson intervals available for proportions.  95% is the default
confidence level throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import SimState, Species

Z95 = 1.959963984540054


class KahanSum:
    """Compensated accumulator; merge order cannot change the result
    beyond one rounding of the final value."""

    __slots__ = ("value", "_c")

    def __init__(self, value: float = 0.0):
        self.value = value
        self._c = 0.0

    def add(self, x: float) -> None:
        y = x - self._c
        t = self.value + y
        self._c = (t - self.value) - y
        self.value = t

    def merge(self, other: "KahanSum") -> None:
        self.add(other.value)
        self.add(-other._c)


def time_grid(horizon: float, resolution: int = 10) -> np.ndarray:
    """t = 0 plus the geometric points horizon * 2**(k - resolution)."""
    if horizon <= 0:
        return np.array([0.0])
    ks = np.arange(resolution + 1)
    return np.concatenate([[0.0], horizon * np.exp2(ks - float(resolution))])


@dataclass
class GridSnapshot:
    t: float
    weighted: int      # sum of A-cluster sizes at the root
    clusters: int      # number of A clusters at the root
    occupied: bool
    cum_weighted: float
    cum_clusters: float


class RootAccumulator:
    """Observer collecting the root-site integrals and grid snapshots.

    With audit=True every constant-state stretch is also logged so the
    integrals can be recomputed afterwards and compared exactly.
    """

    def __init__(self, grid: np.ndarray, root: int = 0, audit: bool = False):
        self.grid = np.asarray(grid, dtype=float)
        self.root = root
        self.weighted = KahanSum()
        self.clusters = KahanSum()
        self.snapshots: list[GridSnapshot] = []
        self._next = 0
        self.audit = audit
        self.segments: list[tuple[float, int, int]] = []

    def _rates(self, state: SimState) -> tuple[int, int]:
        w = c = 0
        for cid in state.site_occupants[self.root]:
            cl = state.clusters[cid]
            if cl.species == Species.A:
                w += cl.size
                c += 1
        return w, c

    def on_start(self, state: SimState) -> None:
        w, c = self._rates(state)
        while self._next < len(self.grid) and self.grid[self._next] <= 0.0:
            self.snapshots.append(GridSnapshot(0.0, w, c, c > 0, 0.0, 0.0))
            self._next += 1

    def on_sojourn(self, state: SimState, t0: float, dt: float) -> None:
        w, c = self._rates(state)
        end = t0 + dt
        while self._next < len(self.grid) and self.grid[self._next] <= end:
            g = self.grid[self._next]
            cum_w = self.weighted.value + w * (g - t0)
            cum_c = self.clusters.value + c * (g - t0)
            self.snapshots.append(GridSnapshot(float(g), w, c, c > 0, cum_w, cum_c))
            self._next += 1
        if w:
            self.weighted.add(w * dt)
        if c:
            self.clusters.add(c * dt)
        if self.audit:
            self.segments.append((dt, w, c))

    def recompute(self) -> tuple[float, float]:
        """Replay the audit log with the same compensated arithmetic."""
        w2, c2 = KahanSum(), KahanSum()
        for dt, w, c in self.segments:
            if w:
                w2.add(w * dt)
            if c:
                c2.add(c * dt)
        return w2.value, c2.value


@dataclass(frozen=True)
class EstimateCI:
    """A mean with its standard error from n samples (normal CI)."""

    mean: float
    stderr: float
    n: int

    def ci(self, z: float = Z95) -> tuple[float, float]:
        return self.mean - z * self.stderr, self.mean + z * self.stderr

    @staticmethod
    def from_samples(xs) -> "EstimateCI":
        xs = np.asarray(xs, dtype=float)
        if xs.size < 2:
            raise ValueError("need at least two samples for a stderr")
        return EstimateCI(float(xs.mean()), float(xs.std(ddof=1) / math.sqrt(xs.size)), xs.size)

    @staticmethod
    def from_binomial(successes: int, n: int) -> "EstimateCI":
        if n < 2:
            raise ValueError("need at least two trials")
        p = successes / n
        return EstimateCI(p, math.sqrt(max(p * (1.0 - p), 0.0) / n), n)


def overlap(a: EstimateCI, b: EstimateCI, z: float = Z95) -> bool:
    alo, ahi = a.ci(z)
    blo, bhi = b.ci(z)
    return alo <= bhi and blo <= ahi


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class SurvivalCurve:
    times: np.ndarray
    prob: np.ndarray
    stderr: np.ndarray
    n: int
    conditional: bool

    def trapezoid(self, upto: float) -> float:
        mask = self.times <= upto + 1e-12
        return float(np.trapezoid(self.prob[mask], self.times[mask]))


def survival_estimate(death_times, grid, *, conditional_on: np.ndarray | None = None) -> SurvivalCurve:
    """Horizon-censored survival curve from per-replica death times.

    ``death_times`` holds one root death time per replica (NEVER for
    still-alive); with ``conditional_on`` a boolean mask, the curve is
    conditioned on those replicas (e.g. root drew species A).  All grid
    points must not exceed the common run horizon, so censoring never
    biases a point.
    """
    deaths = np.asarray(death_times, dtype=float)
    cond = conditional_on is not None
    if cond:
        deaths = deaths[np.asarray(conditional_on, dtype=bool)]
    grid = np.asarray(grid, dtype=float)
    n = deaths.size
    if n < 2:
        raise ValueError("need at least two replicas")
    prob = np.empty(len(grid))
    stderr = np.empty(len(grid))
    for i, t in enumerate(grid):
        k = int((deaths > t).sum())
        prob[i] = k / n
        stderr[i] = math.sqrt(max(prob[i] * (1 - prob[i]), 0.0) / n)
    return SurvivalCurve(grid, prob, stderr, n, cond)


@dataclass(frozen=True)
class SizeSummary:
    """Destruction partner sizes attributed to every initial particle.

    For an A particle, its value is the size of the B cluster that wiped
    out its cluster (0 if it was never destroyed); symmetrically for B.
    """

    sum_a: float
    count_a: int      # A origins destroyed
    sum_b: float
    count_b: int
    vertex_count: int

    def conditional_mean_a(self) -> float:
        return self.sum_a / self.count_a if self.count_a else math.nan

    def conditional_mean_b(self) -> float:
        return self.sum_b / self.count_b if self.count_b else math.nan


def summarize_sizes(annihilation_log, vertex_count: int) -> SizeSummary:
    sum_a = sum_b = 0.0
    count_a = count_b = 0
    for rec in annihilation_log:
        # every A origin in the record is credited with the B cluster
        # size and vice versa
        sum_a += rec.a_size * rec.b_size
        count_a += rec.a_size
        sum_b += rec.b_size * rec.a_size
        count_b += rec.b_size
    return SizeSummary(sum_a, count_a, sum_b, count_b, vertex_count)


def root_partner_size(annihilation_log, root: int = 0) -> tuple[float, float]:
    """(S for the root as an A origin, S for the root as a B origin);
    whichever side the root was not on (or never destroyed) reports 0."""
    for rec in annihilation_log:
        if root in rec.a_origins:
            return float(rec.b_size), 0.0
        if root in rec.b_origins:
            return 0.0, float(rec.a_size)
    return 0.0, 0.0


def ratio_estimate(xs, ys, scale: float = 1.0) -> EstimateCI:
    """Delta-method CI for scale * mean(xs) / mean(ys), paired samples."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 2:
        raise ValueError("need paired samples, at least two")
    n = xs.size
    xbar, ybar = xs.mean(), ys.mean()
    if ybar == 0:
        raise ValueError("denominator mean is zero")
    var_x = xs.var(ddof=1) / n
    var_y = ys.var(ddof=1) / n
    cov = np.cov(xs, ys, ddof=1)[0, 1] / n
    r = scale * xbar / ybar
    gx = scale / ybar
    gy = -scale * xbar / ybar**2
    var_r = gx * gx * var_x + gy * gy * var_y + 2 * gx * gy * cov
    return EstimateCI(float(r), float(math.sqrt(max(var_r, 0.0))), n)
