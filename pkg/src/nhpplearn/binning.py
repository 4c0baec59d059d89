"""Adaptive partition search for piecewise rate models.

Three dividers share one engine, all splitting at uniformly sampled
points.  Candidate intervals are refined worst-fit-first (highest
per-cell risk next), so a tight bin budget flows to the stretches the
current fit explains worst:

* ``ivanov``: a candidate split is probed with per-day homogeneity tests on
  both halves.  While a half still fails, the interval gets refined; an
  interval becomes a leaf once probes keep producing two passing halves
  (the binning constraint: final bins look homogeneous-Poisson).
* ``tikhonov``: no tests; every probe splits, and the best partition is
  tracked under the length-weighted penalized risk.
* ``relaxed``: no tests; intervals divide unconditionally until their
  length drops to twice the floor ``eta`` (used for bin-budget sweeps).

An outer restart loop reruns the search from scratch and keeps the best
partition across restarts by training risk (optionally penalized risk).
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    CountTable,
    EventSeries,
    FitReport,
    Partition,
    RateModel,
    TimeWindow,
    binned_risk,
    penalized_risk,
)
from .regression import CellData, FitConfig, evaluate, fit_partition
from .stat_tests import MultiDayOutcome, poisson_test_days

_SEARCH_DOMAIN = 1  # substream namespace, disjoint from simulation

GAMMA_GRID = (1e-4, 1e-3, 1e-2, 1e-1)


@dataclass(frozen=True)
class SearchConfig:
    """Budgets and knobs for the partition search."""

    max_depth: int = 10
    max_bins: int = 64
    max_restarts: int = 50
    max_retries: int = 20
    gamma: float | None = None
    epsilon: float = 0.05
    eta_seconds: float | None = None
    seed: int = 0
    test_method: str = "log"
    test_mode: str = "per-day"
    min_pass_fraction: float | None = None
    outer_penalized: bool = False
    trace_path: str | None = None

    def __post_init__(self) -> None:
        if self.max_depth < 1 or self.max_bins < 1 or self.max_restarts < 1:
            raise ValueError("search budgets must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be nonnegative")
        if not (0.0 < self.epsilon < 0.5):
            raise ValueError("epsilon must be in (0, 0.5)")
        if self.gamma is not None and self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.eta_seconds is not None and self.eta_seconds <= 0:
            raise ValueError("eta_seconds must be positive")


@dataclass(frozen=True)
class TraceEntry:
    """One event in the search: the root evaluation, a probe, a split, or a leaf."""

    kind: str  # "root" | "split" | "probe" | "leaf"
    interval: tuple[float, float]
    proposed_knot: float | None
    accepted: bool
    knots: tuple[float, ...]
    n_bins: int
    risk: float | None
    penalized: float | None
    depth: int
    reason: str | None = None
    left_test: dict | None = None
    right_test: dict | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "interval": list(self.interval),
            "proposed_knot": self.proposed_knot,
            "accepted": self.accepted,
            "knots": list(self.knots),
            "n_bins": self.n_bins,
            "risk": self.risk,
            "penalized": self.penalized,
            "depth": self.depth,
            "reason": self.reason,
            "left_test": self.left_test,
            "right_test": self.right_test,
        }


@dataclass
class SearchTrace:
    """Full audit of one divider run plus the best state it found."""

    method: str
    window: TimeWindow
    entries: list[TraceEntry] = field(default_factory=list)
    best_knots: tuple[float, ...] = ()
    best_risk: float = math.inf
    best_penalized: float | None = None

    def best_partition(self) -> Partition:
        return Partition(window=self.window, knots=self.best_knots)

    def accepted_risks(self) -> list[float]:
        return [e.risk for e in self.entries if e.accepted and e.risk is not None]


def equal_partition(window: TimeWindow, n_bins: int) -> Partition:
    """Equal-length partition with ``n_bins`` bins."""
    if n_bins < 1:
        raise ValueError("need at least one bin")
    knots = window.start + window.length * np.arange(1, n_bins) / n_bins
    return Partition(window=window, knots=tuple(knots))


class _SearchEngine:
    """Single divider run over one dataset; incremental risk bookkeeping.

    Per-bin fits are independent, so splitting one interval only refits its
    two children; the running sums reproduce what a full refit would give.
    """

    def __init__(
        self,
        data: CellData,
        events_by_day: Optional[Sequence[np.ndarray]],
        window: TimeWindow,
        method: str,
        fit_config: FitConfig,
        config: SearchConfig,
        rng: np.random.Generator,
    ):
        self.data = data
        self.events = events_by_day
        self.window = window
        self.method = method
        self.fit_config = fit_config
        self.config = config
        self.rng = rng
        self.gamma = config.gamma
        if method == "tikhonov" and self.gamma is None:
            raise ValueError("tikhonov division requires gamma to be set")
        if method == "relaxed" and config.eta_seconds is None:
            raise ValueError("relaxed division requires eta_seconds")
        if method == "ivanov" and events_by_day is None:
            raise ValueError("ivanov division requires per-day arrival times")
        self.m_total = data.total_points
        # registry: interval -> (risk, occupancy); current partition bins
        self.registry: dict[tuple[float, float], tuple[float, int]] = {}
        self.knots: list[float] = []
        self.s_weighted = 0.0  # sum of m_k * R_k over current bins
        self.s_penalty = 0.0  # sum of m_k * R_k / len_k over all bins but the last
        self.trace = SearchTrace(method=method, window=window)
        self._queue_seq = 0  # insertion tiebreak keeps heap order deterministic

    # -- bookkeeping -------------------------------------------------------

    def _fit(self, lo: float, hi: float) -> tuple[float, int]:
        _, risk, m = self.data.fit_interval(lo, hi, self.fit_config)
        return risk, m

    def _penalty_term(self, lo: float, hi: float, risk: float, m: int) -> float:
        if hi >= self.window.end:  # final bin carries no penalty
            return 0.0
        return m * risk / (hi - lo)

    def _risk8(self) -> float:
        return self.s_weighted / self.m_total

    def _risk9(self) -> float | None:
        if self.gamma is None:
            return None
        return self._risk8() + self.gamma * self.s_penalty

    def _criterion(self) -> float:
        if self.method == "tikhonov":
            return self._risk9()
        return self._risk8()

    def _consider_best(self) -> None:
        value = self._criterion()
        if value < self.trace.best_risk:  # strict: ties keep the earlier partition
            self.trace.best_risk = value
            self.trace.best_knots = tuple(sorted(self.knots))
            self.trace.best_penalized = self._risk9()

    def _record(self, **kwargs) -> None:
        entry = TraceEntry(
            knots=tuple(sorted(self.knots)),
            n_bins=len(self.registry),
            risk=self._risk8(),
            penalized=self._risk9(),
            **kwargs,
        )
        self.trace.entries.append(entry)

    # -- the refinement loop -----------------------------------------------

    def run(self) -> SearchTrace:
        lo, hi = self.window.start, self.window.end
        risk, m = self._fit(lo, hi)
        self.registry[(lo, hi)] = (risk, m)
        self.s_weighted = m * risk
        self.s_penalty = self._penalty_term(lo, hi, risk, m)
        self._record(kind="root", interval=(lo, hi), proposed_knot=None, accepted=True, depth=0)
        self._consider_best()
        heap: list[tuple[float, int, float, float, int]] = []
        self._enqueue(heap, lo, hi, 0)
        while heap:
            _, _, a, b, depth = heapq.heappop(heap)
            children = self._visit(a, b, depth)
            if children is not None:
                for c_lo, c_hi in children:
                    self._enqueue(heap, c_lo, c_hi, depth + 1)
        return self.trace

    def _enqueue(self, heap: list, lo: float, hi: float, depth: int) -> None:
        risk, _ = self.registry[(lo, hi)]
        heapq.heappush(heap, (-risk, self._queue_seq, lo, hi, depth))
        self._queue_seq += 1

    def _split_interval(self, lo: float, hi: float, p: float) -> None:
        risk_parent, m_parent = self.registry.pop((lo, hi))
        self.s_weighted -= m_parent * risk_parent
        self.s_penalty -= self._penalty_term(lo, hi, risk_parent, m_parent)
        for a, b in ((lo, p), (p, hi)):
            risk, m = self._fit(a, b)
            self.registry[(a, b)] = (risk, m)
            self.s_weighted += m * risk
            self.s_penalty += self._penalty_term(a, b, risk, m)
        self.knots.append(p)

    def _day_slices(self, lo: float, hi: float) -> list[np.ndarray]:
        out = []
        for arr in self.events:
            i0 = np.searchsorted(arr, lo, side="left")
            i1 = np.searchsorted(arr, hi, side="left")
            out.append(arr[i0:i1])
        return out

    def _test_halves(self, lo: float, hi: float, p: float) -> tuple[MultiDayOutcome, MultiDayOutcome]:
        cfg = self.config
        left = poisson_test_days(
            self._day_slices(lo, p), lo, p, cfg.epsilon, cfg.test_method, cfg.test_mode, cfg.min_pass_fraction
        )
        right = poisson_test_days(
            self._day_slices(p, hi), p, hi, cfg.epsilon, cfg.test_method, cfg.test_mode, cfg.min_pass_fraction
        )
        return left, right

    def _sample_point(self, lo: float, hi: float) -> float:
        for _ in range(64):
            p = float(self.rng.uniform(lo, hi))
            if lo < p < hi:
                return p
        return 0.5 * (lo + hi)

    def _leaf(self, lo: float, hi: float, depth: int, reason: str, left=None, right=None) -> None:
        self._record(
            kind="leaf",
            interval=(lo, hi),
            proposed_knot=None,
            accepted=False,
            depth=depth,
            reason=reason,
            left_test=left,
            right_test=right,
        )

    def _visit(
        self, lo: float, hi: float, depth: int
    ) -> tuple[tuple[float, float], tuple[float, float]] | None:
        """Try to split one queued interval; returns the children or None."""
        if depth >= self.config.max_depth:
            self._leaf(lo, hi, depth, "max-depth")
            return None
        if len(self.registry) >= self.config.max_bins:
            self._leaf(lo, hi, depth, "max-bins")
            return None
        if hi - lo <= 1e-9:
            self._leaf(lo, hi, depth, "degenerate")
            return None
        if self.method == "relaxed" and (hi - lo) <= 2.0 * self.config.eta_seconds:
            self._leaf(lo, hi, depth, "eta-floor")
            return None

        if self.method != "ivanov":
            p = self._sample_point(lo, hi)
            self._split_interval(lo, hi, p)
            self._record(kind="split", interval=(lo, hi), proposed_knot=p, accepted=True, depth=depth)
            self._consider_best()
            return (lo, p), (p, hi)

        attempts = 0
        while True:
            p = self._sample_point(lo, hi)
            left, right = self._test_halves(lo, hi, p)
            if left.passed and right.passed:
                # both halves look homogeneous; spend a retry hunting for
                # a split point that still exposes structure
                self._record(
                    kind="probe",
                    interval=(lo, hi),
                    proposed_knot=p,
                    accepted=False,
                    depth=depth,
                    left_test=left.to_dict(),
                    right_test=right.to_dict(),
                )
                attempts += 1
                if attempts > self.config.max_retries:
                    self._leaf(lo, hi, depth, "homogeneous", left.to_dict(), right.to_dict())
                    return None
                continue
            self._split_interval(lo, hi, p)
            self._record(
                kind="split",
                interval=(lo, hi),
                proposed_knot=p,
                accepted=True,
                depth=depth,
                left_test=left.to_dict(),
                right_test=right.to_dict(),
            )
            self._consider_best()
            return (lo, p), (p, hi)


def _restart_rng(seed: int, restart_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed), _SEARCH_DOMAIN, int(restart_index))))


def _events_by_day(events: EventSeries | None) -> list[np.ndarray] | None:
    if events is None:
        return None
    return list(events.days)


def ivanov_divide(
    events: EventSeries,
    counts: CountTable,
    fit_config: FitConfig | None = None,
    config: SearchConfig | None = None,
    restart_index: int = 0,
) -> SearchTrace:
    """One constraint-based division run (no restarts)."""
    config = config or SearchConfig()
    fit_config = fit_config or FitConfig()
    if events.window != counts.window:
        raise ValueError("events and counts must share a window")
    engine = _SearchEngine(
        CellData(counts),
        _events_by_day(events),
        counts.window,
        "ivanov",
        fit_config,
        config,
        _restart_rng(config.seed, restart_index),
    )
    return engine.run()


def tikhonov_divide(
    counts: CountTable,
    fit_config: FitConfig | None = None,
    config: SearchConfig | None = None,
    restart_index: int = 0,
) -> SearchTrace:
    """One penalty-based division run (no restarts); requires config.gamma."""
    config = config or SearchConfig(gamma=1e-2)
    fit_config = fit_config or FitConfig()
    engine = _SearchEngine(
        CellData(counts), None, counts.window, "tikhonov", fit_config, config,
        _restart_rng(config.seed, restart_index),
    )
    return engine.run()


def relaxed_divide(
    counts: CountTable,
    eta_seconds: float,
    fit_config: FitConfig | None = None,
    config: SearchConfig | None = None,
    restart_index: int = 0,
) -> SearchTrace:
    """One floor-bounded division run: split until intervals reach 2 * eta."""
    base = config or SearchConfig()
    cfg = SearchConfig(**{**base.__dict__, "eta_seconds": float(eta_seconds)})
    fit_config = fit_config or FitConfig()
    engine = _SearchEngine(
        CellData(counts), None, counts.window, "relaxed", fit_config, cfg,
        _restart_rng(cfg.seed, restart_index),
    )
    return engine.run()


def parse_method(method: str) -> tuple[str, int | None]:
    """Split a method string into (kind, equal-bin count)."""
    if method.startswith("equal:"):
        n = int(method.split(":", 1)[1])
        if n < 1:
            raise ValueError("equal:N needs N >= 1")
        return "equal", n
    if method in ("ivanov", "tikhonov", "relaxed"):
        return method, None
    raise ValueError(f"unknown method '{method}'")


def learn(
    train_events: EventSeries | None,
    train_counts: CountTable,
    test_counts: CountTable | None = None,
    method: str = "ivanov",
    fit_config: FitConfig | None = None,
    config: SearchConfig | None = None,
    compare_equal: bool = False,
) -> FitReport:
    """Learn a piecewise rate model with the requested division strategy.

    Runs ``config.max_restarts`` independent divider runs and keeps the best
    partition by training risk (penalized instead when ``outer_penalized``),
    then refits it and scores train/test RMSE.  ``method`` is one of
    ``ivanov``, ``tikhonov``, ``relaxed``, or ``equal:N``; for ``tikhonov``
    with ``gamma=None`` the penalty weight is picked from a small grid on a
    held-out tail of the training days.
    """
    fit_config = fit_config or FitConfig()
    config = config or SearchConfig()
    kind, n_equal = parse_method(method)

    if kind == "tikhonov" and config.gamma is None:
        gamma = _select_gamma(train_counts, fit_config, config)
        config = SearchConfig(**{**config.__dict__, "gamma": gamma})

    window = train_counts.window
    if kind == "equal":
        best_partition = equal_partition(window, n_equal)
        traces: list[SearchTrace] = []
    else:
        best_partition, traces = _search_best(train_events, train_counts, kind, fit_config, config)

    model, risks, sizes = fit_partition(train_counts, best_partition, fit_config)
    b_risk = binned_risk(sizes, risks)
    p_risk = (
        penalized_risk(sizes, risks, best_partition, config.gamma)
        if config.gamma is not None
        else None
    )
    rmse_train = evaluate(model, train_counts)
    rmse_test = evaluate(model, test_counts) if test_counts is not None else None

    report = FitReport(
        method=method,
        partition=best_partition,
        model=model,
        n_bins=best_partition.n_bins,
        bin_sizes=tuple(int(v) for v in sizes),
        binned_risk=b_risk,
        rmse_train=rmse_train,
        rmse_test=rmse_test,
        seed=config.seed,
        penalized_risk=p_risk,
        gamma=config.gamma,
        epsilon=config.epsilon,
        eta_seconds=config.eta_seconds,
    )

    if compare_equal and kind != "equal":
        baseline = learn(
            None,
            train_counts,
            test_counts,
            method=f"equal:{best_partition.n_bins}",
            fit_config=fit_config,
            config=config,
        )
        improvement = None
        if rmse_test is not None and baseline.rmse_test:
            improvement = (baseline.rmse_test - rmse_test) * 100.0 / baseline.rmse_test
        report = FitReport(
            **{
                **report.__dict__,
                "equal_bins": baseline.n_bins,
                "equal_rmse_train": baseline.rmse_train,
                "equal_rmse_test": baseline.rmse_test,
                "improvement_pct": improvement,
            }
        )

    if config.trace_path and traces:
        _write_trace(config.trace_path, traces)
    return report


def _search_best(
    train_events: EventSeries | None,
    train_counts: CountTable,
    kind: str,
    fit_config: FitConfig,
    config: SearchConfig,
) -> tuple[Partition, list[SearchTrace]]:
    data = CellData(train_counts)
    events = _events_by_day(train_events) if kind == "ivanov" else None
    if kind == "ivanov" and events is None:
        raise ValueError("ivanov learning requires training arrival times")
    if kind == "ivanov" and train_events.window != train_counts.window:
        raise ValueError("events and counts must share a window")
    best_score = math.inf
    best_knots: tuple[float, ...] = ()
    traces = []
    for r in range(config.max_restarts):
        engine = _SearchEngine(
            data, events, train_counts.window, kind, fit_config, config,
            _restart_rng(config.seed, r),
        )
        trace = engine.run()
        traces.append(trace)
        candidate = trace.best_knots
        score = _outer_score(data, train_counts.window, candidate, fit_config, config, kind)
        if score < best_score:
            best_score = score
            best_knots = candidate
    return Partition(window=train_counts.window, knots=best_knots), traces


def _outer_score(
    data: CellData,
    window: TimeWindow,
    knots: tuple[float, ...],
    fit_config: FitConfig,
    config: SearchConfig,
    kind: str,
) -> float:
    partition = Partition(window=window, knots=knots)
    edges = partition.edges()
    weighted = 0.0
    penalty = 0.0
    total = 0
    for k in range(partition.n_bins):
        lo, hi = edges[k], edges[k + 1]
        _, risk, m = data.fit_interval(lo, hi, fit_config)
        weighted += m * risk
        total += m
        if hi < window.end:
            penalty += m * risk / (hi - lo)
    base = weighted / total
    if kind == "tikhonov" and config.outer_penalized:
        return base + config.gamma * penalty
    return base


def _select_gamma(train_counts: CountTable, fit_config: FitConfig, config: SearchConfig) -> float:
    """Grid-search the penalty weight on a held-out tail of training days."""
    n_days = train_counts.n_days
    if n_days < 2:
        return 1e-2
    n_fit = max(1, int(math.ceil(0.75 * n_days)))
    n_fit = min(n_fit, n_days - 1)
    fit_table = CountTable(train_counts.window, train_counts.resolution, train_counts.counts[:n_fit])
    val_table = CountTable(train_counts.window, train_counts.resolution, train_counts.counts[n_fit:])
    best_gamma = GAMMA_GRID[0]
    best_rmse = math.inf
    for gamma in GAMMA_GRID:
        sub = SearchConfig(**{**config.__dict__, "gamma": gamma, "trace_path": None})
        report = learn(None, fit_table, val_table, method="tikhonov", fit_config=fit_config, config=sub)
        if report.rmse_test is not None and report.rmse_test < best_rmse:
            best_rmse = report.rmse_test
            best_gamma = gamma
    return best_gamma


def _write_trace(path: str, traces: Sequence[SearchTrace]) -> None:
    with open(path, "w") as fh:
        for r, trace in enumerate(traces):
            for i, entry in enumerate(trace.entries):
                record = {"restart": r, "event": i, **entry.to_dict()}
                fh.write(json.dumps(record) + "\n")
            fh.write(
                json.dumps(
                    {
                        "restart": r,
                        "event": "best",
                        "knots": list(trace.best_knots),
                        "risk": trace.best_risk,
                        "penalized": trace.best_penalized,
                    }
                )
                + "\n"
            )
