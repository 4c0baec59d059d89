"""Rate-function learning for nonhomogeneous Poisson processes.

Estimates time-of-day rate profiles from repeated daily event streams by
searching for a data-driven partition of the day and fitting per-bin
polynomials, with homogeneity-test or penalty based regularization of the
bin structure.
"""

from .core import (
    CountTable,
    EventSeries,
    FitReport,
    Partition,
    RateModel,
    TimeWindow,
    assign_bins,
    binned_risk,
    empirical_risk,
    generalization_bound,
    penalized_risk,
    vc_bound_xi,
)
from .binning import (
    SearchConfig,
    SearchTrace,
    equal_partition,
    ivanov_divide,
    learn,
    relaxed_divide,
    tikhonov_divide,
)
from .dataio import (
    load_events,
    load_geo_events,
    load_model,
    save_events,
    save_geo_events,
    save_model,
)
from .regression import FitConfig, evaluate, fit_bin, fit_partition
from .simulate import (
    PiecewiseLinearRate,
    af_rate,
    make_dataset,
    simulate_conditioned,
    simulate_thinning,
)
from .spatial import AreaPartition, GeoEventSeries, kmeans, learn_per_area
from .stat_tests import (
    TestOutcome,
    ks_critical,
    ks_statistic,
    log_test,
    poisson_property_test,
    poisson_test_days,
    uniform_ks_test,
)

__version__ = "0.1.0"

__all__ = [
    "AreaPartition",
    "CountTable",
    "EventSeries",
    "FitConfig",
    "FitReport",
    "GeoEventSeries",
    "Partition",
    "PiecewiseLinearRate",
    "RateModel",
    "SearchConfig",
    "SearchTrace",
    "TestOutcome",
    "TimeWindow",
    "af_rate",
    "assign_bins",
    "binned_risk",
    "empirical_risk",
    "equal_partition",
    "evaluate",
    "fit_bin",
    "fit_partition",
    "generalization_bound",
    "ivanov_divide",
    "kmeans",
    "learn",
    "learn_per_area",
    "load_events",
    "load_geo_events",
    "load_model",
    "log_test",
    "make_dataset",
    "penalized_risk",
    "save_events",
    "save_geo_events",
    "save_model",
    "poisson_property_test",
    "poisson_test_days",
    "relaxed_divide",
    "simulate_conditioned",
    "simulate_thinning",
    "tikhonov_divide",
    "uniform_ks_test",
    "vc_bound_xi",
    "ks_critical",
    "ks_statistic",
    "__version__",
]
