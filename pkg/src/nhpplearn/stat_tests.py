"""Goodness-of-fit tests for the homogeneous-Poisson hypothesis on an interval.

The workhorse is the exponential-spacings test: conditional on the arrival
times in [lo, hi), the transformed spacings

    X_i = -(m + 1 - i) * ln((L - t_i) / (L - t_{i-1})),   t_0 = 0, L = hi - lo

are i.i.d. standard exponential under homogeneity, so a Kolmogorov-Smirnov
comparison against 1 - e^{-x} calibrates the test exactly, independent of
the (unknown) rate level.  A plain KS test of the raw times against the
uniform law is available as an alternative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class TestOutcome:
    """Result of a single distribution test; passed iff statistic <= critical."""

    statistic: float
    critical: float
    n: int
    epsilon: float
    passed: bool
    method: str

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "critical": self.critical,
            "n": self.n,
            "epsilon": self.epsilon,
            "passed": self.passed,
            "method": self.method,
        }


def ks_statistic(samples: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Exact sup-distance between the empirical CDF and a reference CDF.

    Evaluated at the order statistics: the supremum over x of |F_m(x) - F(x)|
    is attained as max_i max(|F(x_(i)) - i/m|, |F(x_(i)) - (i-1)/m|).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    m = x.size
    if m == 0:
        raise ValueError("KS statistic of an empty sample is undefined")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, m + 1, dtype=float)
    upper = np.abs(f - i / m)
    lower = np.abs(f - (i - 1.0) / m)
    return float(np.max(np.maximum(upper, lower)))


def ks_critical(m: int, epsilon: float) -> float:
    """Large-sample KS critical value sqrt(-ln(epsilon/2) / (2m))."""
    if m < 1:
        raise ValueError("critical value needs at least one sample")
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must be in (0, 1)")
    return math.sqrt(-0.5 * math.log(epsilon / 2.0) / m)


def _validate_interval(arrivals: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    arr = np.sort(np.asarray(arrivals, dtype=float))
    if arr.size and (arr[0] < lo or arr[-1] >= hi):
        raise ValueError(f"arrivals must lie in [{lo}, {hi})")
    return arr


def log_test(
    arrivals: Sequence[float],
    lo: float,
    hi: float,
    epsilon: float = 0.05,
) -> TestOutcome:
    """Exponential-spacings test of homogeneity on [lo, hi).

    Samples of size <= 1 pass automatically (the statistic is still
    reported for a single arrival).
    """
    arr = _validate_interval(np.asarray(arrivals), lo, hi)
    m = arr.size
    if m == 0:
        return TestOutcome(0.0, math.inf, 0, epsilon, True, "log")
    span = hi - lo
    offsets = arr - lo
    prev = np.concatenate(([0.0], offsets[:-1]))
    # X_i = -(m+1-i) * ln((L - t_i)/(L - t_{i-1})), written via log differences
    weights = np.arange(m, 0, -1, dtype=float)
    x = weights * (np.log(span - prev) - np.log(span - offsets))
    stat = ks_statistic(x, lambda v: 1.0 - np.exp(-v))
    crit = ks_critical(m, epsilon)
    return TestOutcome(stat, crit, m, epsilon, bool(stat <= crit or m <= 1), "log")


def uniform_ks_test(
    arrivals: Sequence[float],
    lo: float,
    hi: float,
    epsilon: float = 0.05,
) -> TestOutcome:
    """KS test of the raw arrival times against the uniform law on [lo, hi)."""
    arr = _validate_interval(np.asarray(arrivals), lo, hi)
    m = arr.size
    if m == 0:
        return TestOutcome(0.0, math.inf, 0, epsilon, True, "ks-uniform")
    span = hi - lo
    stat = ks_statistic(arr, lambda t: (t - lo) / span)
    crit = ks_critical(m, epsilon)
    return TestOutcome(stat, crit, m, epsilon, bool(stat <= crit or m <= 1), "ks-uniform")


_METHODS = {"log": log_test, "ks-uniform": uniform_ks_test}


def poisson_property_test(
    arrivals: Sequence[float],
    lo: float,
    hi: float,
    epsilon: float = 0.05,
    method: str = "log",
) -> TestOutcome:
    """Dispatch a homogeneity test by name; empty intervals pass vacuously."""
    if method not in _METHODS:
        raise ValueError(f"unknown test method '{method}' (expected 'log' or 'ks-uniform')")
    return _METHODS[method](arrivals, lo, hi, epsilon)


@dataclass(frozen=True)
class MultiDayOutcome:
    """Aggregate verdict over per-day tests of one interval."""

    passed: bool
    n_days: int
    n_passed: int
    required_fraction: float
    epsilon: float
    method: str
    mode: str

    @property
    def pass_fraction(self) -> float:
        return 1.0 if self.n_days == 0 else self.n_passed / self.n_days

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_days": self.n_days,
            "n_passed": self.n_passed,
            "required_fraction": self.required_fraction,
            "mode": self.mode,
        }


def poisson_test_days(
    day_arrivals: Sequence[np.ndarray],
    lo: float,
    hi: float,
    epsilon: float = 0.05,
    method: str = "log",
    mode: str = "per-day",
    min_pass_fraction: float | None = None,
) -> MultiDayOutcome:
    """Test one interval across repeated days.

    ``per-day`` tests each day separately and passes when the fraction of
    passing days reaches ``min_pass_fraction`` (default 1 - 2 * epsilon);
    ``pooled`` merges all days into one sample first.
    """
    if mode not in ("per-day", "pooled"):
        raise ValueError(f"unknown aggregation mode '{mode}'")
    n_days = len(day_arrivals)
    if mode == "pooled":
        merged = np.concatenate([np.asarray(a, dtype=float) for a in day_arrivals]) if n_days else np.empty(0)
        outcome = poisson_property_test(merged, lo, hi, epsilon, method)
        return MultiDayOutcome(
            outcome.passed, n_days, n_days if outcome.passed else 0, 1.0, epsilon, method, mode
        )
    threshold = (1.0 - 2.0 * epsilon) if min_pass_fraction is None else min_pass_fraction
    n_passed = sum(
        1 for arr in day_arrivals if poisson_property_test(arr, lo, hi, epsilon, method).passed
    )
    frac = 1.0 if n_days == 0 else n_passed / n_days
    return MultiDayOutcome(
        bool(frac >= threshold - 1e-12), n_days, n_passed, threshold, epsilon, method, mode
    )
