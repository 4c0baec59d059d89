"""Per-bin least squares and partition fitting."""

from __future__ import annotations

import math

import numpy as np
import pytest

from nhpplearn import CountTable, EventSeries, FitConfig, Partition, TimeWindow, binned_risk, fit_bin, fit_partition
from nhpplearn.regression import CellData, evaluate, training_rmse


def table_from_counts(counts, window=None, resolution=10.0):
    counts = np.asarray(counts, dtype=float)
    window = window or TimeWindow(0.0, resolution * counts.shape[1])
    return CountTable(window, resolution, counts)


# --- single-bin fits ----------------------------------------------------------

def test_fit_bin_recovers_exact_polynomials():
    rng = np.random.default_rng(2)
    lo, hi = 10.0, 50.0
    times = np.linspace(lo, hi, 25, endpoint=False) + 0.8
    for degree in range(4):
        coef_true = rng.normal(size=degree + 1)
        u = (2.0 * times - (lo + hi)) / (hi - lo)
        y = np.polynomial.polynomial.polyval(u, coef_true)
        got = fit_bin(times, y, (lo, hi), FitConfig(degree=degree))
        np.testing.assert_allclose(got, coef_true, atol=1e-9)


def test_fit_bin_pads_reduced_degrees_with_zeros():
    # two distinct abscissae support at most a line, rest of the cubic is zero
    times = np.array([1.0, 1.0, 3.0, 3.0])
    y = np.array([2.0, 4.0, 8.0, 10.0])
    coef = fit_bin(times, y, (0.0, 4.0), FitConfig(degree=3))
    assert coef.shape == (4,)
    np.testing.assert_allclose(coef[2:], 0.0, atol=1e-12)
    u = (2.0 * times - 4.0) / 4.0
    fitted = np.polynomial.polynomial.polyval(u, coef)
    np.testing.assert_allclose(fitted, [3.0, 3.0, 9.0, 9.0], atol=1e-9)


def test_fit_bin_single_point_is_constant():
    coef = fit_bin(np.array([5.0]), np.array([7.0]), (0.0, 10.0), FitConfig(degree=3))
    np.testing.assert_allclose(coef, [7.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_fit_bin_validations():
    with pytest.raises(ValueError, match="lo < hi"):
        fit_bin(np.array([1.0]), np.array([1.0]), (5.0, 5.0), FitConfig())
    with pytest.raises(ValueError, match="matching shapes"):
        fit_bin(np.array([1.0, 2.0]), np.array([1.0]), (0.0, 10.0), FitConfig())


def test_fit_config_validations():
    with pytest.raises(ValueError, match="degree must be nonnegative"):
        FitConfig(degree=-1)
    with pytest.raises(ValueError, match="min_points must be >= degree \\+ 1"):
        FitConfig(degree=3, min_points=2)


def test_min_points_floor_reduces_degree():
    # 3 points under a floor of 5 cannot support a cubic; expect a quadratic at most
    times = np.array([1.0, 2.0, 3.0])
    y = np.array([1.0, 4.0, 9.0])
    coef = fit_bin(times, y, (0.0, 4.0), FitConfig(degree=3, min_points=5))
    assert coef[3] == 0.0


# --- cell views ---------------------------------------------------------------

def test_interval_slice_half_open_with_tail():
    table = table_from_counts(np.arange(12.0).reshape(2, 6))
    data = CellData(table)
    # midpoints at 5, 15, ..., 55
    assert data.interval_slice(0.0, 20.0) == slice(0, 2)
    assert data.interval_slice(15.0, 25.0) == slice(1, 2)
    assert data.interval_slice(50.0, 60.0) == slice(5, 6)
    assert data.interval_slice(0.0, 60.0) == slice(0, 6)


def test_fit_interval_risk_is_mean_squared_residual():
    counts = np.array([[1.0, 5.0, 3.0], [3.0, 7.0, 5.0]])
    table = table_from_counts(counts)
    data = CellData(table)
    coef, risk, m = data.fit_interval(0.0, 30.0, FitConfig(degree=0))
    assert m == 6
    mean = counts.mean()
    np.testing.assert_allclose(coef[0], mean, atol=1e-12)
    np.testing.assert_allclose(risk, np.mean((counts - mean) ** 2), atol=1e-12)


def test_fit_interval_empty_is_zero():
    table = table_from_counts(np.ones((1, 4)))
    data = CellData(table)
    coef, risk, m = data.fit_interval(11.0, 14.0, FitConfig(degree=2))  # no midpoint inside
    assert m == 0 and risk == 0.0
    np.testing.assert_array_equal(coef, np.zeros(3))


def test_cell_data_requires_days():
    with pytest.raises(ValueError, match="no observed days"):
        CellData(CountTable(TimeWindow(0.0, 10.0), 10.0, np.zeros((0, 1))))


# --- partition fits -----------------------------------------------------------

def test_fit_partition_matches_per_bin_fits():
    rng = np.random.default_rng(8)
    counts = rng.poisson(6.0, size=(3, 24)).astype(float)
    table = table_from_counts(counts)
    part = Partition(table.window, (60.0, 150.0))
    model, risks, sizes = fit_partition(table, part, FitConfig(degree=1))
    assert sizes.sum() == counts.size
    data = CellData(table)
    edges = part.edges()
    for k in range(part.n_bins):
        coef, risk, m = data.fit_interval(edges[k], edges[k + 1], FitConfig(degree=1))
        np.testing.assert_allclose(model.coefficients[k], coef, atol=1e-12)
        assert math.isclose(risks[k], risk, rel_tol=1e-12)
        assert sizes[k] == m


def test_training_risk_equals_unweighted_global_mse():
    # occupancy-weighted binned risk over midpoint cells is the plain MSE
    rng = np.random.default_rng(13)
    counts = rng.poisson(9.0, size=(4, 30)).astype(float)
    table = table_from_counts(counts)
    part = Partition(table.window, (90.0, 170.0, 250.0))
    cfg = FitConfig(degree=2, clamp=False)
    model, risks, sizes = fit_partition(table, part, cfg)
    weighted = binned_risk(sizes, risks)
    pred = model.evaluate(table.cell_midpoints())
    direct = np.mean((counts - pred[None, :]) ** 2)
    np.testing.assert_allclose(weighted, direct, rtol=1e-12)
    np.testing.assert_allclose(training_rmse(table, part, cfg), np.sqrt(direct), rtol=1e-12)


def test_fit_partition_checks_window():
    table = table_from_counts(np.ones((1, 4)))
    with pytest.raises(ValueError, match="does not match"):
        fit_partition(table, Partition(TimeWindow(0.0, 50.0), ()), FitConfig())


def test_refinement_never_raises_training_risk():
    # adding knots to any partition can only reduce the weighted training risk
    rng = np.random.default_rng(21)
    for trial in range(50):
        n_cells = int(rng.integers(12, 40))
        counts = rng.poisson(5.0, size=(2, n_cells)).astype(float)
        table = table_from_counts(counts)
        span = table.window.end
        coarse_knots = np.sort(rng.uniform(5.0, span - 5.0, size=int(rng.integers(0, 3))))
        extra = rng.uniform(5.0, span - 5.0, size=int(rng.integers(1, 3)))
        fine_knots = np.unique(np.concatenate([coarse_knots, extra]))
        cfg = FitConfig(degree=int(rng.integers(0, 4)))
        coarse = Partition(table.window, tuple(coarse_knots))
        fine = Partition(table.window, tuple(fine_knots))
        _, r_c, s_c = fit_partition(table, coarse, cfg)
        _, r_f, s_f = fit_partition(table, fine, cfg)
        assert binned_risk(s_f, r_f) <= binned_risk(s_c, r_c) + 1e-10


def test_fitted_cubic_beats_random_perturbations():
    # local optimality of the least-squares solution inside one bin
    rng = np.random.default_rng(34)
    times = np.sort(rng.uniform(0.0, 100.0, size=50))
    y = rng.poisson(10.0, size=50).astype(float)
    cfg = FitConfig(degree=3)
    coef = fit_bin(times, y, (0.0, 100.0), cfg)
    u = (2.0 * times - 100.0) / 100.0
    base = np.mean((y - np.polynomial.polynomial.polyval(u, coef)) ** 2)
    for _ in range(1000):
        trial = coef + rng.normal(scale=0.05, size=4)
        risk = np.mean((y - np.polynomial.polynomial.polyval(u, trial)) ** 2)
        assert base <= risk + 1e-12


def test_evaluate_is_rmse_over_cells():
    counts = np.array([[2.0, 4.0], [4.0, 6.0]])
    table = table_from_counts(counts)
    part = Partition(table.window, ())
    model, _, _ = fit_partition(table, part, FitConfig(degree=0))
    # constant fit at the grand mean 4; residuals (-2, 0, 0, 2)
    assert math.isclose(evaluate(model, table), math.sqrt(2.0), rel_tol=1e-12)
