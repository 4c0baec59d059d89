"""Domain types and risk functionals for rate-function learning.

Times are seconds-of-day floats. A partition carves the observation window
into half-open bins [b_{k-1}, b_k); the final bin additionally absorbs an
exact hit on the window end so every in-window time has a bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class TimeWindow:
    """Half-open observation window [start, end) in seconds-of-day."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.start < self.end <= SECONDS_PER_DAY):
            raise ValueError(
                f"window must satisfy 0 <= start < end <= 86400, got [{self.start}, {self.end}]"
            )

    @property
    def length(self) -> float:
        return self.end - self.start

    def contains(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return (t >= self.start) & (t <= self.end)


@dataclass(frozen=True)
class EventSeries:
    """Arrival times for one or more observed days over a common window.

    ``days[i]`` is the sorted array of arrival times (seconds-of-day) for
    day ``i``.  Arrivals must lie in ``[window.start, window.end)``.
    """

    window: TimeWindow
    days: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        cleaned = []
        for i, arr in enumerate(self.days):
            arr = np.asarray(arr, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"day {i}: arrival array must be 1-D")
            if arr.size and (np.any(arr < self.window.start) or np.any(arr >= self.window.end)):
                raise ValueError(f"day {i}: arrivals outside [{self.window.start}, {self.window.end})")
            if np.any(np.diff(arr) < 0):
                arr = np.sort(arr)
            cleaned.append(arr)
        object.__setattr__(self, "days", tuple(cleaned))

    @property
    def n_days(self) -> int:
        return len(self.days)

    @property
    def total_events(self) -> int:
        return int(sum(arr.size for arr in self.days))


@dataclass(frozen=True)
class CountTable:
    """Per-day event counts on a uniform cell grid over the window.

    ``counts[d, c]`` is the number of day-``d`` arrivals falling in cell
    ``c``; cells are ``resolution``-second slices of the window (the last
    cell may be shorter when the window length is not a multiple).
    """

    window: TimeWindow
    resolution: float
    counts: np.ndarray

    def __post_init__(self) -> None:
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        counts = np.asarray(self.counts)
        expected = self.n_cells
        if counts.ndim != 2 or counts.shape[1] != expected:
            raise ValueError(
                f"counts must have shape (n_days, {expected}), got {counts.shape}"
            )
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", counts.astype(float))

    @property
    def n_cells(self) -> int:
        return int(math.ceil(self.window.length / self.resolution - 1e-12))

    @property
    def n_days(self) -> int:
        return int(self.counts.shape[0])

    def cell_edges(self) -> np.ndarray:
        edges = self.window.start + self.resolution * np.arange(self.n_cells + 1)
        edges[-1] = self.window.end
        return edges

    def cell_midpoints(self) -> np.ndarray:
        edges = self.cell_edges()
        return 0.5 * (edges[:-1] + edges[1:])

    @classmethod
    def from_events(cls, series: EventSeries, resolution: float = 60.0) -> "CountTable":
        window = series.window
        n_cells = int(math.ceil(window.length / resolution - 1e-12))
        if n_cells < 1:
            raise ValueError("resolution larger than the window")
        edges = window.start + resolution * np.arange(n_cells + 1)
        edges[-1] = window.end
        rows = [np.histogram(arr, bins=edges)[0] for arr in series.days]
        counts = np.vstack(rows) if rows else np.zeros((0, n_cells))
        return cls(window=window, resolution=resolution, counts=counts)


@dataclass(frozen=True)
class Partition:
    """Window split into half-open bins by strictly interior ascending knots."""

    window: TimeWindow
    knots: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        knots = tuple(float(k) for k in self.knots)
        if any(not (self.window.start < k < self.window.end) for k in knots):
            raise ValueError("knots must be strictly inside the window")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ValueError("knots must be strictly ascending")
        object.__setattr__(self, "knots", knots)

    @property
    def n_bins(self) -> int:
        return len(self.knots) + 1

    def edges(self) -> np.ndarray:
        return np.concatenate(([self.window.start], self.knots, [self.window.end]))

    def lengths(self) -> np.ndarray:
        return np.diff(self.edges())

    def bin_index(self, t: np.ndarray | float) -> np.ndarray:
        """Map times to bin indices; t == window.end folds into the last bin."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < self.window.start) or np.any(t > self.window.end):
            raise ValueError("times outside the partition window")
        idx = np.searchsorted(self.edges(), t, side="right") - 1
        return np.minimum(idx, self.n_bins - 1)


def assign_bins(times: np.ndarray, partition: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Assign times to partition bins.

    Returns
    -------
    idx : ndarray of int
        Bin index per time, half-open rule [b_{k-1}, b_k).
    sizes : ndarray of int
        Occupancy m_k per bin (length ``partition.n_bins``).
    """
    idx = partition.bin_index(times)
    sizes = np.bincount(idx, minlength=partition.n_bins)
    return idx, sizes


def assign_series(series: EventSeries, partition: Partition) -> tuple[list[np.ndarray], np.ndarray]:
    """Per-day bin assignment; windows must match exactly."""
    if series.window != partition.window:
        raise ValueError("EventSeries window does not match partition window")
    per_day = []
    total = np.zeros(partition.n_bins, dtype=int)
    for arr in series.days:
        idx, sizes = assign_bins(arr, partition)
        per_day.append(idx)
        total += sizes
    return per_day, total


@dataclass(frozen=True)
class RateModel:
    """Piecewise-polynomial rate: one degree-d polynomial per partition bin.

    Coefficients are stored in ascending powers of the bin-local coordinate
    u = (2t - (lo + hi)) / (hi - lo), which maps each bin onto [-1, 1].
    ``clamp`` floors predictions at zero during evaluation.
    """

    partition: Partition
    coefficients: np.ndarray
    clamp: bool = True

    def __post_init__(self) -> None:
        coef = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if coef.shape[0] != self.partition.n_bins:
            raise ValueError(
                f"need one coefficient row per bin ({self.partition.n_bins}), got {coef.shape[0]}"
            )
        object.__setattr__(self, "coefficients", coef)

    @property
    def degree(self) -> int:
        return int(self.coefficients.shape[1] - 1)

    def evaluate(self, t: np.ndarray | float) -> np.ndarray:
        """Rate at times ``t`` (same units as the fitted counts)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self.partition.bin_index(t)
        edges = self.partition.edges()
        out = np.empty_like(t)
        for k in np.unique(idx):
            lo, hi = edges[k], edges[k + 1]
            u = (2.0 * t[idx == k] - (lo + hi)) / (hi - lo)
            out[idx == k] = np.polynomial.polynomial.polyval(u, self.coefficients[k])
        if self.clamp:
            out = np.maximum(out, 0.0)
        return out

    def bin_polynomial(self, k: int) -> np.polynomial.Polynomial:
        """Bin k's polynomial as a numpy Polynomial in raw time-of-day."""
        edges = self.partition.edges()
        return np.polynomial.Polynomial(
            self.coefficients[k], domain=[edges[k], edges[k + 1]], window=[-1.0, 1.0]
        )


@dataclass(frozen=True)
class FitReport:
    """Everything a single learning run produced."""

    method: str
    partition: Partition
    model: RateModel
    n_bins: int
    bin_sizes: tuple[int, ...]
    binned_risk: float
    rmse_train: float
    rmse_test: float | None
    seed: int
    penalized_risk: float | None = None
    gamma: float | None = None
    epsilon: float | None = None
    eta_seconds: float | None = None
    equal_bins: int | None = None
    equal_rmse_train: float | None = None
    equal_rmse_test: float | None = None
    improvement_pct: float | None = None

    def summary_dict(self) -> dict:
        return {
            "method": self.method,
            "knots": list(self.partition.knots),
            "n_bins": self.n_bins,
            "bin_sizes": list(self.bin_sizes),
            "binned_risk": self.binned_risk,
            "penalized_risk": self.penalized_risk,
            "rmse_train": self.rmse_train,
            "rmse_test": self.rmse_test,
            "seed": self.seed,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "eta_seconds": self.eta_seconds,
            "equal_bins": self.equal_bins,
            "equal_rmse_train": self.equal_rmse_train,
            "equal_rmse_test": self.equal_rmse_test,
            "improvement_pct": self.improvement_pct,
        }


# ---------------------------------------------------------------------------
# Risk functionals
# ---------------------------------------------------------------------------

RateLike = "RateModel | Callable[[np.ndarray], np.ndarray]"


def _rate_values(model, times: np.ndarray) -> np.ndarray:
    if isinstance(model, RateModel):
        return model.evaluate(times)
    return np.asarray(model(np.asarray(times, dtype=float)), dtype=float)


def empirical_risk(model, times: Sequence[float], counts: Sequence[float]) -> float:
    """Mean squared error of a rate model against observed (time, count) pairs."""
    times = np.asarray(times, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if times.size == 0:
        raise ValueError("empirical risk of an empty sample is undefined")
    if times.shape != counts.shape:
        raise ValueError("times and counts must have matching shapes")
    resid = counts - _rate_values(model, times)
    return float(np.mean(resid * resid))


def binned_risk(sizes: Sequence[int], risks: Sequence[float]) -> float:
    """Occupancy-weighted mean of per-bin risks: (1/m) * sum_k m_k * R_k."""
    sizes = np.asarray(sizes, dtype=float)
    risks = np.asarray(risks, dtype=float)
    if sizes.shape != risks.shape:
        raise ValueError("sizes and risks must have matching shapes")
    m = sizes.sum()
    if m <= 0:
        raise ValueError("binned risk undefined for zero total occupancy")
    return float(np.dot(sizes, risks) / m)


def penalized_risk(
    sizes: Sequence[int],
    risks: Sequence[float],
    partition: Partition,
    gamma: float,
) -> float:
    """Binned risk plus a smoothness penalty on all bins except the last.

    The per-bin penalty term is m_k * R_k / (b_k - b_{k-1}); the final bin
    carries no penalty.
    """
    sizes = np.asarray(sizes, dtype=float)
    risks = np.asarray(risks, dtype=float)
    if sizes.shape[0] != partition.n_bins or risks.shape[0] != partition.n_bins:
        raise ValueError("sizes/risks length must equal the number of bins")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    lengths = partition.lengths()
    if np.any(lengths <= 0):
        raise ValueError("zero-length bin in partition")
    base = binned_risk(sizes, risks)
    penalty = float(np.sum(sizes[:-1] * risks[:-1] / lengths[:-1]))
    return base + gamma * penalty


def vc_bound_xi(m: int, h: int, eta: float) -> float:
    """Capacity term xi = (h * (ln(2m/h) + 1) - ln(eta / 4)) / m.

    Requires m > h >= 1 and 0 < eta < 1.  Strictly decreasing in m once
    2m/h clears e^2 (the classic regime where more data tightens the bound).
    """
    if h < 1:
        raise ValueError("capacity h must be >= 1")
    if m <= h:
        raise ValueError("sample size m must exceed capacity h")
    if not (0.0 < eta < 1.0):
        raise ValueError("confidence level eta must be in (0, 1)")
    return (h * (math.log(2.0 * m / h) + 1.0) - math.log(eta / 4.0)) / m


def generalization_bound(r_emp: float, bound: float, m: int, h: int, eta: float) -> float:
    """Upper confidence bound on true risk given empirical risk and sup bound B."""
    if r_emp < 0:
        raise ValueError("empirical risk must be nonnegative")
    if bound <= 0:
        raise ValueError("sup bound B must be positive")
    xi = vc_bound_xi(m, h, eta)
    bx = bound * xi
    return r_emp + 2.0 * bx * (1.0 + math.sqrt(1.0 + r_emp / bx))
