"""Per-bin ordinary least squares on count data.

Each bin gets its own polynomial, fitted in a bin-local coordinate scaled
to [-1, 1] (raw seconds-of-day cubed overflow float conditioning long
before the fit is done).  Degree drops automatically when a bin holds too
few distinct abscissae to support it, and an empty bin yields the zero
polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CountTable, Partition, RateModel, binned_risk


@dataclass(frozen=True)
class FitConfig:
    """Knobs for per-bin polynomial fitting.

    ``min_points`` is the occupancy needed for a full-degree fit; below it
    the degree falls back to m - 1.  Must be at least degree + 1.
    """

    degree: int = 3
    clamp: bool = True
    min_points: int | None = None

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        floor = self.degree + 1
        if self.min_points is not None and self.min_points < floor:
            raise ValueError(f"min_points must be >= degree + 1 = {floor}")

    @property
    def points_floor(self) -> int:
        return self.degree + 1 if self.min_points is None else self.min_points


def fit_bin(
    times: np.ndarray,
    counts: np.ndarray,
    interval: tuple[float, float],
    config: FitConfig,
) -> np.ndarray:
    """Least-squares polynomial for one bin, in bin-local [-1, 1] coordinates.

    Returns ascending-power coefficients padded to length degree + 1.
    The effective degree is min(degree, #distinct times - 1), further capped
    at m - 1 when occupancy is below ``min_points``; an empty bin maps to
    the zero polynomial.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError("bin interval must satisfy lo < hi")
    times = np.asarray(times, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if times.shape != counts.shape:
        raise ValueError("times and counts must have matching shapes")
    out = np.zeros(config.degree + 1)
    m = times.size
    if m == 0:
        return out
    eff = min(config.degree, int(np.unique(times).size) - 1)
    if m < config.points_floor:
        eff = min(eff, m - 1)
    poly = np.polynomial.Polynomial.fit(times, counts, deg=max(eff, 0), domain=[lo, hi], window=[-1.0, 1.0])
    out[: poly.coef.size] = poly.coef
    return out


class CellData:
    """Fit-ready view of a count table: sorted cell midpoints and per-day values."""

    def __init__(self, table: CountTable):
        if table.n_days == 0:
            raise ValueError("count table has no observed days")
        self.window = table.window
        self.midpoints = table.cell_midpoints()
        self.values = table.counts
        self.n_days = table.n_days

    @property
    def total_points(self) -> int:
        return self.values.size

    def interval_slice(self, lo: float, hi: float) -> slice:
        """Cells whose midpoint falls in [lo, hi); hi == window.end includes the tail."""
        i0 = int(np.searchsorted(self.midpoints, lo, side="left"))
        if hi >= self.window.end:
            i1 = self.midpoints.size
        else:
            i1 = int(np.searchsorted(self.midpoints, hi, side="left"))
        return slice(i0, i1)

    def fit_interval(self, lo: float, hi: float, config: FitConfig) -> tuple[np.ndarray, float, int]:
        """Fit one interval; returns (coefficients, mean squared residual, occupancy)."""
        sl = self.interval_slice(lo, hi)
        mids = self.midpoints[sl]
        if mids.size == 0:
            return np.zeros(config.degree + 1), 0.0, 0
        y = self.values[:, sl].ravel()
        x = np.tile(mids, self.n_days)
        coef = fit_bin(x, y, (lo, hi), config)
        u = (2.0 * x - (lo + hi)) / (hi - lo)
        resid = y - np.polynomial.polynomial.polyval(u, coef)
        return coef, float(np.mean(resid * resid)), int(y.size)


def fit_partition(
    table: CountTable,
    partition: Partition,
    config: FitConfig,
) -> tuple[RateModel, np.ndarray, np.ndarray]:
    """Fit every bin of a partition against per-cell counts.

    Returns the assembled model plus per-bin risks R_k (training mean squared
    residual, zero for empty bins) and occupancies m_k.
    """
    if table.window != partition.window:
        raise ValueError("count table window does not match partition window")
    data = CellData(table)
    edges = partition.edges()
    coeffs = np.zeros((partition.n_bins, config.degree + 1))
    risks = np.zeros(partition.n_bins)
    sizes = np.zeros(partition.n_bins, dtype=int)
    for k in range(partition.n_bins):
        coeffs[k], risks[k], sizes[k] = data.fit_interval(edges[k], edges[k + 1], config)
    model = RateModel(partition=partition, coefficients=coeffs, clamp=config.clamp)
    return model, risks, sizes


def evaluate(model: RateModel, table: CountTable) -> float:
    """Root mean squared error of a model against a count table's cells."""
    if table.n_days == 0:
        raise ValueError("cannot evaluate against a table with no days")
    if table.window != model.partition.window:
        raise ValueError("count table window does not match the model window")
    pred = model.evaluate(table.cell_midpoints())
    resid = table.counts - pred[None, :]
    return float(np.sqrt(np.mean(resid * resid)))


def training_rmse(table: CountTable, partition: Partition, config: FitConfig) -> float:
    """Convenience: fit and report sqrt of the occupancy-weighted training risk."""
    _, risks, sizes = fit_partition(table, partition, config)
    return float(np.sqrt(binned_risk(sizes, risks)))
