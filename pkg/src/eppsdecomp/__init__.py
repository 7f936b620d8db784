"""Epps effect measurement and decomposition for tick data."""

from eppsdecomp._backend import BACKEND
from eppsdecomp.correlator import (
    EppsCurve,
    EstimationError,
    ReturnSeries,
    asymptotic_value,
    characteristic_time,
    epps_curve,
    lagged_cross_correlation,
    lead_lag_peak,
    log_returns,
    scale_curve,
    time_average,
)
from eppsdecomp.decomposition import (
    DecayFunction,
    DecompositionInput,
    estimate_decay,
    goodness,
    predict_correlation,
    predict_epps_curve,
    product_average,
    truncate_auto,
    truncate_cross,
)
from eppsdecomp.simulator import (
    SimConfig,
    analytic_decay,
    generate_core_walk,
    model_predict,
    sample_walk,
    simulate_pair,
)
from eppsdecomp.tickstore import (
    PriceGrid,
    TickSeries,
    TradingDay,
    average_intertrade_time,
    build_grid,
    load_ticks,
    previous_tick_price,
)

__version__ = "0.1.0"
